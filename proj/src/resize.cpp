#include "omclic/resize.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

namespace omclic {

std::string algo_token(ResizeAlgo a) {
  switch (a) {
    case ResizeAlgo::Nearest: return "nearest";
    case ResizeAlgo::Bilinear: return "bilinear";
    case ResizeAlgo::Bicubic: return "bicubic";
    case ResizeAlgo::Lanczos3: return "lanczos3";
  }
  throw Error("invalid ResizeAlgo");
}

ResizeAlgo algo_from_token(const std::string& token) {
  if (token == "nearest") return ResizeAlgo::Nearest;
  if (token == "bilinear") return ResizeAlgo::Bilinear;
  if (token == "bicubic") return ResizeAlgo::Bicubic;
  if (token == "lanczos3") return ResizeAlgo::Lanczos3;
  throw Error("unknown resize algo token: " + token);
}

namespace {

double triangle(double t) {
  t = std::abs(t);
  return t < 1.0 ? 1.0 - t : 0.0;
}

// Keys cubic, a = -0.5.
double keys_cubic(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t < 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
  if (t < 2.0) return a * (t * t * t - 5.0 * t * t + 8.0 * t - 4.0);
  return 0.0;
}

double sinc(double t) {
  if (t == 0.0) return 1.0;
  const double x = std::numbers::pi * t;
  return std::sin(x) / x;
}

double lanczos3(double t) {
  t = std::abs(t);
  if (t >= 3.0) return 0.0;
  return sinc(t) * sinc(t / 3.0);
}

struct Kernel {
  double (*fn)(double);
  double radius;
};

Kernel kernel_for(ResizeAlgo algo) {
  switch (algo) {
    case ResizeAlgo::Bilinear: return {triangle, 1.0};
    case ResizeAlgo::Bicubic: return {keys_cubic, 2.0};
    case ResizeAlgo::Lanczos3: return {lanczos3, 3.0};
    default: throw Error("kernel_for: not a kernel-based algo");
  }
}

void check_downscale(int in, int out) {
  if (in <= 0 || out <= 0) throw DimZero("dimensions must be positive");
  if (out > in) throw UpscaleUnsupported("upscaling is not supported");
}

}  // namespace

std::vector<std::vector<Tap>> filter_taps(ResizeAlgo algo, int in, int out) {
  check_downscale(in, out);
  std::vector<std::vector<Tap>> taps(out);
  const double scale = static_cast<double>(in) / out;

  if (algo == ResizeAlgo::Nearest) {
    for (int i = 0; i < out; ++i) {
      int src = static_cast<int>(std::floor((i + 0.5) * scale));
      if (src > in - 1) src = in - 1;
      taps[i] = {{src, 1.0}};
    }
    return taps;
  }

  const Kernel k = kernel_for(algo);
  const double fscale = scale;  // support widening for antialiasing
  const double radius = k.radius * fscale;
  for (int i = 0; i < out; ++i) {
    const double center = (i + 0.5) * scale - 0.5;
    const int lo = static_cast<int>(std::ceil(center - radius));
    const int hi = static_cast<int>(std::floor(center + radius));
    double sum = 0.0;
    auto& row = taps[i];
    for (int j = std::max(lo, 0); j <= std::min(hi, in - 1); ++j) {
      double w = k.fn((j - center) / fscale);
      if (std::abs(w) < 1e-12) continue;  // snap sinc zeros
      row.push_back({j, w});
      sum += w;
    }
    if (row.empty() || sum == 0.0)
      throw Error("degenerate filter row; unsupported size pair");
    for (Tap& t : row) t.weight /= sum;
  }
  return taps;
}

CoeffPair kernel_matrices(ResizeAlgo algo, int m, int m_out, int n, int n_out) {
  check_downscale(m, m_out);
  check_downscale(n, n_out);
  CoeffPair cp;
  cp.algo = algo;
  cp.left = ChannelMat::Zero(m_out, m);
  cp.right = ChannelMat::Zero(n, n_out);
  const auto row_taps = filter_taps(algo, m, m_out);
  for (int i = 0; i < m_out; ++i)
    for (const Tap& t : row_taps[i]) cp.left(i, t.index) = t.weight;
  const auto col_taps = filter_taps(algo, n, n_out);
  for (int i = 0; i < n_out; ++i)
    for (const Tap& t : col_taps[i]) cp.right(t.index, i) = t.weight;
  return cp;
}

ChannelMat apply_linear(const CoeffPair& coeffs, const ChannelMat& channel) {
  if (channel.rows() != coeffs.left.cols() || channel.cols() != coeffs.right.rows())
    throw DimMismatch("channel dims do not match coefficient operators");
  return coeffs.left * channel * coeffs.right;
}

ImageU8 scale(const ImageU8& image, Dims out_dims, ResizeAlgo algo) {
  const auto [mh, nw] = out_dims;
  check_downscale(image.height, mh);
  check_downscale(image.width, nw);

  const auto row_taps = filter_taps(algo, image.height, mh);
  const auto col_taps = filter_taps(algo, image.width, nw);

  ImageU8 out(mh, nw, image.channels);
  // vertical pass then horizontal, in doubles, one rounding at the end
  Eigen::MatrixXd tmp(mh, image.width);
  for (int ch = 0; ch < image.channels; ++ch) {
    for (int r = 0; r < mh; ++r) {
      for (int c = 0; c < image.width; ++c) {
        double acc = 0.0;
        for (const Tap& t : row_taps[r]) acc += t.weight * image.at(t.index, c, ch);
        tmp(r, c) = acc;
      }
    }
    for (int r = 0; r < mh; ++r) {
      for (int c = 0; c < nw; ++c) {
        double acc = 0.0;
        for (const Tap& t : col_taps[c]) acc += t.weight * tmp(r, t.index);
        out.at(r, c, ch) = quantize(acc);
      }
    }
  }
  return out;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64_mat(std::ostream& os, const ChannelMat& m) {
  static_assert(std::endian::native == std::endian::little);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      os.write(reinterpret_cast<const char*>(&v), 8);
    }
}

ChannelMat get_f64_mat(std::istream& is, int rows, int cols) {
  ChannelMat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double v;
      is.read(reinterpret_cast<char*>(&v), 8);
      m(r, c) = v;
    }
  return m;
}

}  // namespace

void save_coeffs(const std::string& path, const CoeffPair& coeffs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("OMC1", 4);
  put_u32(os, static_cast<std::uint32_t>(coeffs.left.rows()));
  put_u32(os, static_cast<std::uint32_t>(coeffs.left.cols()));
  put_u32(os, static_cast<std::uint32_t>(coeffs.right.rows()));
  put_u32(os, static_cast<std::uint32_t>(coeffs.right.cols()));
  const std::string tok = algo_token(coeffs.algo);
  put_u32(os, static_cast<std::uint32_t>(tok.size()));
  os.write(tok.data(), static_cast<std::streamsize>(tok.size()));
  put_f64_mat(os, coeffs.left);
  put_f64_mat(os, coeffs.right);
  if (!os) throw IoError("short write to " + path);
}

CoeffPair load_coeffs(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "OMC1", 4) != 0)
    throw IoError(path + ": bad coefficient sidecar magic");
  const int m_out = static_cast<int>(get_u32(is));
  const int m = static_cast<int>(get_u32(is));
  const int n = static_cast<int>(get_u32(is));
  const int n_out = static_cast<int>(get_u32(is));
  const auto tok_len = get_u32(is);
  std::string tok(tok_len, '\0');
  is.read(tok.data(), tok_len);
  CoeffPair cp;
  cp.algo = algo_from_token(tok);
  cp.left = get_f64_mat(is, m_out, m);
  cp.right = get_f64_mat(is, n, n_out);
  if (!is) throw IoError(path + ": truncated coefficient sidecar");
  return cp;
}

}  // namespace omclic
