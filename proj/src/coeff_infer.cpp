#include "omclic/coeff_infer.hpp"

#include <cmath>
#include <random>

namespace omclic {

namespace {

ImageU8 identity_probe(int n, int in_max) {
  ImageU8 img(n, n, 1);
  for (int i = 0; i < n; ++i) img.at(i, i) = static_cast<std::uint8_t>(in_max);
  return img;
}

}  // namespace

ChannelMat infer_left(const Resizer& resizer, int m, int m_out,
                      const ProbeConfig& cfg) {
  cfg.validate();
  if (m_out > m || m <= 0 || m_out <= 0) throw DimZero("bad probe dims");
  const ImageU8 probed = resizer(identity_probe(m, cfg.in_max), m_out, m);
  if (probed.height != m_out || probed.width != m || probed.channels != 1)
    throw ResizerShapeMismatch("resizer returned unexpected probe shape");
  return channel_of(probed, 0) / static_cast<double>(cfg.in_max);
}

ChannelMat infer_right(const Resizer& resizer, int n, int n_out,
                       const ProbeConfig& cfg) {
  cfg.validate();
  if (n_out > n || n <= 0 || n_out <= 0) throw DimZero("bad probe dims");
  const ImageU8 probed = resizer(identity_probe(n, cfg.in_max), n, n_out);
  if (probed.height != n || probed.width != n_out || probed.channels != 1)
    throw ResizerShapeMismatch("resizer returned unexpected probe shape");
  return channel_of(probed, 0) / static_cast<double>(cfg.in_max);
}

ChannelMat normalize_rows(const ChannelMat& mat) {
  ChannelMat out = mat;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double s = out.row(r).sum();
    if (s == 0.0) throw ZeroRowSum("row " + std::to_string(r) + " sums to zero");
    out.row(r) /= s;
  }
  return out;
}

ChannelMat normalize_cols(const ChannelMat& mat) {
  ChannelMat out = mat;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double s = out.col(c).sum();
    if (s == 0.0) throw ZeroRowSum("column " + std::to_string(c) + " sums to zero");
    out.col(c) /= s;
  }
  return out;
}

CoeffPair infer_coeffs(const Resizer& resizer, int m, int m_out, int n,
                       int n_out, ResizeAlgo algo, const ProbeConfig& cfg) {
  CoeffPair cp;
  cp.algo = algo;
  cp.left = normalize_rows(infer_left(resizer, m, m_out, cfg));
  cp.right = normalize_cols(infer_right(resizer, n, n_out, cfg));
  return cp;
}

InferenceReport verify_coeffs(const Resizer& resizer, const CoeffPair& coeffs,
                              int trials, const ProbeConfig& cfg,
                              std::uint64_t seed) {
  if (trials < 1) throw Error("trials must be >= 1");
  const auto [m, n] = coeffs.source_dims();
  const auto [mo, no] = coeffs.out_dims();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(0, 255);

  InferenceReport report;
  report.coeffs = coeffs;
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    ImageU8 img(m, n, 1);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(dist(rng));
    const ImageU8 got = resizer(img, mo, no);
    if (got.height != mo || got.width != no) {
      report.max_abs_error = 255.0;
      report.passed = false;
      return report;
    }
    const ChannelMat predicted = apply_linear(coeffs, channel_of(img, 0));
    for (int r = 0; r < mo; ++r)
      for (int c = 0; c < no; ++c) {
        const double err =
            std::abs(static_cast<double>(got.at(r, c)) - quantize(predicted(r, c)));
        report.max_abs_error = std::max(report.max_abs_error, err);
      }
  }
  report.passed = report.max_abs_error <= cfg.tolerance;
  return report;
}

Resizer builtin_resizer(ResizeAlgo algo) {
  return [algo](const ImageU8& img, int out_h, int out_w) {
    return scale(img, {out_h, out_w}, algo);
  };
}

}  // namespace omclic
