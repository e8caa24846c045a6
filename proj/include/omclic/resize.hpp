#pragma once

#include <string>
#include <utility>
#include <vector>

#include "omclic/image.hpp"

namespace omclic {

enum class ResizeAlgo { Nearest, Bilinear, Bicubic, Lanczos3 };

std::string algo_token(ResizeAlgo a);
ResizeAlgo algo_from_token(const std::string& token);

using Dims = std::pair<int, int>;  // (height, width)

/// The left/right operators factoring one separable downscale:
/// scaled = left * channel * right, left is out_h x in_h, right in_w x out_w.
struct CoeffPair {
  ChannelMat left;
  ChannelMat right;
  ResizeAlgo algo = ResizeAlgo::Nearest;

  Dims source_dims() const {
    return {static_cast<int>(left.cols()), static_cast<int>(right.rows())};
  }
  Dims out_dims() const {
    return {static_cast<int>(left.rows()), static_cast<int>(right.cols())};
  }
};

/// One filter tap: source index and its weight.
struct Tap {
  int index;
  double weight;
};

/// Per-output-index taps of the 1-D resampling filter, half-pixel-center
/// convention, support widened by the downscale factor, weights
/// normalized to sum 1. Out-of-range taps are dropped before normalizing.
std::vector<std::vector<Tap>> filter_taps(ResizeAlgo algo, int in, int out);

/// Analytic coefficient matrices for a downscale of m x n to m_out x n_out.
CoeffPair kernel_matrices(ResizeAlgo algo, int m, int m_out, int n, int n_out);

/// left * channel * right in real arithmetic, no rounding.
ChannelMat apply_linear(const CoeffPair& coeffs, const ChannelMat& channel);

/// Direct separable downscale; equals quantize(apply_linear) per channel.
ImageU8 scale(const ImageU8& image, Dims out_dims, ResizeAlgo algo);

/// Binary sidecar format: magic "OMC1", u32le dims (m', m, n, n'),
/// algo token (u32le length + bytes), left then right row-major f64le.
void save_coeffs(const std::string& path, const CoeffPair& coeffs);
CoeffPair load_coeffs(const std::string& path);

}  // namespace omclic
