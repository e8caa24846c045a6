#include <doctest.h>

#include <cstdio>
#include <random>

#include "omclic/resize.hpp"
#include "testutil.hpp"

using namespace omclic;
namespace tu = omclic::testutil;

namespace {

const ResizeAlgo kAllAlgos[] = {ResizeAlgo::Nearest, ResizeAlgo::Bilinear,
                                ResizeAlgo::Bicubic, ResizeAlgo::Lanczos3};

// independent oracle for the nearest index mapping
int nearest_src_index(int i, int in, int out) {
  const int idx = static_cast<int>(std::floor((i + 0.5) * in / static_cast<double>(out)));
  return std::min(idx, in - 1);
}

}  // namespace

TEST_CASE("scale: constant image stays constant under every algo") {
  const ImageU8 img(32, 32, 3, 77);
  for (ResizeAlgo algo : kAllAlgos) {
    const ImageU8 out = scale(img, {9, 13}, algo);
    for (std::uint8_t p : out.pixels) CHECK(p == 77);
  }
}

TEST_CASE("scale: nearest 4x4 to 2x2 samples rows/cols {1,3}") {
  ImageU8 img(4, 4, 1);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) img.at(r, c) = static_cast<std::uint8_t>(16 * r + c);
  const ImageU8 out = scale(img, {2, 2}, ResizeAlgo::Nearest);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      const int sr = nearest_src_index(r, 4, 2);
      const int sc = nearest_src_index(c, 4, 2);
      CHECK(sr == 2 * r + 1);
      CHECK(out.at(r, c) == img.at(sr, sc));
    }
}

TEST_CASE("scale: identity dims return a pixel-identical image") {
  const ImageU8 img = tu::random_image(17, 23, 3, 1);
  for (ResizeAlgo algo : kAllAlgos) CHECK(scale(img, {17, 23}, algo) == img);
}

TEST_CASE("scale: errors") {
  const ImageU8 img(8, 8, 1, 0);
  CHECK_THROWS_AS(scale(img, {9, 8}, ResizeAlgo::Nearest), UpscaleUnsupported);
  CHECK_THROWS_AS(scale(img, {8, 9}, ResizeAlgo::Bilinear), UpscaleUnsupported);
  CHECK_THROWS_AS(scale(img, {0, 4}, ResizeAlgo::Nearest), DimZero);
}

TEST_CASE("kernel_matrices: nearest 4->2 left operator is hand-enumerable") {
  const CoeffPair cp = kernel_matrices(ResizeAlgo::Nearest, 4, 2, 4, 2);
  ChannelMat expect(2, 4);
  expect << 0, 1, 0, 0, 0, 0, 0, 1;
  CHECK((cp.left - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK((cp.right - expect.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kernel_matrices: m == m' gives identity for every algo") {
  for (ResizeAlgo algo : kAllAlgos) {
    const CoeffPair cp = kernel_matrices(algo, 6, 6, 6, 6);
    CHECK((cp.left - ChannelMat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((cp.right - ChannelMat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("kernel_matrices: bilinear 4->2 rows are normalized triangle weights") {
  const CoeffPair cp = kernel_matrices(ResizeAlgo::Bilinear, 4, 2, 4, 2);
  // oracle: evaluate the widened triangle at in-range source centers, then
  // normalize; scale factor 2, centers 0.5 and 2.5
  for (int i = 0; i < 2; ++i) {
    const double center = (i + 0.5) * 2.0 - 0.5;
    double w[4], sum = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double t = std::abs((j - center) / 2.0);
      w[j] = t < 1.0 ? 1.0 - t : 0.0;
      sum += w[j];
    }
    int support = 0;
    for (int j = 0; j < 4; ++j) {
      CHECK(cp.left(i, j) == doctest::Approx(w[j] / sum).epsilon(1e-12));
      if (w[j] > 0.0) ++support;
    }
    CHECK(support <= 4);
    CHECK(cp.left.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("CoeffPair invariants over a size grid") {
  for (ResizeAlgo algo : kAllAlgos) {
    for (auto [in, out] : {std::pair{16, 5}, {17, 7}, {32, 32}, {48, 11}}) {
      const CoeffPair cp = kernel_matrices(algo, in, out, in + 1, out);
      for (int r = 0; r < out; ++r)
        CHECK(cp.left.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
      for (int c = 0; c < out; ++c)
        CHECK(cp.right.col(c).sum() == doctest::Approx(1.0).epsilon(1e-9));
      if (algo == ResizeAlgo::Nearest || algo == ResizeAlgo::Bilinear) {
        CHECK(cp.left.minCoeff() >= 0.0);
        CHECK(cp.right.minCoeff() >= 0.0);
      } else {
        for (int r = 0; r < out; ++r)
          CHECK(cp.left.row(r).cwiseAbs().sum() <= 2.0);
        for (int c = 0; c < out; ++c)
          CHECK(cp.right.col(c).cwiseAbs().sum() <= 2.0);
      }
    }
  }
}

TEST_CASE("nearest operators are one-hot") {
  const CoeffPair cp = kernel_matrices(ResizeAlgo::Nearest, 37, 9, 41, 13);
  for (int r = 0; r < 9; ++r) {
    int ones = 0;
    for (int c = 0; c < 37; ++c) {
      CHECK((cp.left(r, c) == 0.0 || cp.left(r, c) == 1.0));
      if (cp.left(r, c) == 1.0) ++ones;
    }
    CHECK(ones == 1);
  }
  for (int c = 0; c < 13; ++c) CHECK(cp.right.col(c).sum() == 1.0);
}

TEST_CASE("apply_linear: identity, ones, and agreement with scale") {
  const CoeffPair ident = kernel_matrices(ResizeAlgo::Bicubic, 8, 8, 8, 8);
  const ChannelMat x = tu::random_channel(8, 8, 7);
  CHECK((apply_linear(ident, x) - x).cwiseAbs().maxCoeff() < 1e-12);

  const CoeffPair cp = kernel_matrices(ResizeAlgo::Lanczos3, 8, 4, 8, 4);
  const ChannelMat ones = ChannelMat::Constant(8, 8, 1.0);
  CHECK((apply_linear(cp, ones) - ChannelMat::Constant(4, 4, 1.0))
            .cwiseAbs()
            .maxCoeff() < 1e-9);

  const CoeffPair near = kernel_matrices(ResizeAlgo::Nearest, 8, 4, 8, 4);
  const ImageU8 img = tu::random_image(8, 8, 1, 9);
  const ChannelMat direct = channel_of(scale(img, {4, 4}, ResizeAlgo::Nearest), 0);
  CHECK((apply_linear(near, channel_of(img, 0)) - direct).cwiseAbs().maxCoeff() <
        1e-12);

  CHECK_THROWS_AS(apply_linear(cp, tu::random_channel(7, 8, 1)), DimMismatch);
}

TEST_CASE("property: apply_linear is linear") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  const CoeffPair cp = kernel_matrices(ResizeAlgo::Bicubic, 12, 5, 10, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const ChannelMat x = tu::random_channel(12, 10, 100 + trial, -50, 50);
    const ChannelMat y = tu::random_channel(12, 10, 200 + trial, -50, 50);
    const double a = coef(rng), b = coef(rng);
    const ChannelMat lhs = apply_linear(cp, a * x + b * y);
    const ChannelMat rhs = a * apply_linear(cp, x) + b * apply_linear(cp, y);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("property: scale agrees with rounded apply_linear within 1 level") {
  for (ResizeAlgo algo : kAllAlgos) {
    const CoeffPair cp = kernel_matrices(algo, 24, 7, 20, 9);
    for (int trial = 0; trial < 25; ++trial) {
      const ImageU8 img = tu::random_image(24, 20, 3, 500 + trial);
      const ImageU8 direct = scale(img, {7, 9}, algo);
      for (int ch = 0; ch < 3; ++ch) {
        const ChannelMat lin = apply_linear(cp, channel_of(img, ch));
        for (int r = 0; r < 7; ++r)
          for (int c = 0; c < 9; ++c)
            CHECK(std::abs(static_cast<int>(direct.at(r, c, ch)) -
                           static_cast<int>(quantize(lin(r, c)))) <= 1);
      }
    }
  }
}

TEST_CASE("coefficient sidecar round-trips") {
  const CoeffPair cp = kernel_matrices(ResizeAlgo::Lanczos3, 19, 6, 23, 8);
  const std::string path = "coeffs_roundtrip.bin";
  save_coeffs(path, cp);
  const CoeffPair back = load_coeffs(path);
  CHECK(back.algo == cp.algo);
  CHECK(back.left == cp.left);
  CHECK(back.right == cp.right);
  std::remove(path.c_str());
}

TEST_CASE("algo tokens are stable and closed") {
  for (ResizeAlgo algo : kAllAlgos) CHECK(algo_from_token(algo_token(algo)) == algo);
  CHECK(algo_token(ResizeAlgo::Lanczos3) == "lanczos3");
  CHECK_THROWS_AS(algo_from_token("area"), Error);
}
