#pragma once

#include <cstdint>
#include <functional>

#include "omclic/resize.hpp"

namespace omclic {

/// Opaque resize routine under inference: image, out height, out width.
using Resizer = std::function<ImageU8(const ImageU8&, int, int)>;

struct ProbeConfig {
  int in_max = 255;        // probe amplitude, integer in [2,255]
  double tolerance = 1.0;  // max allowed per-pixel error, intensity levels

  void validate() const {
    if (in_max < 2 || in_max > 255)
      throw Error("in_max must be an integer in [2,255]");
    if (tolerance < 0.0) throw Error("tolerance must be >= 0");
  }
};

struct InferenceReport {
  CoeffPair coeffs;
  double max_abs_error = 0.0;  // intensity levels over verification trials
  int trials = 0;
  bool passed = false;
};

/// Probes the resizer with a scaled m x m identity image and returns
/// resizer(I * in_max) / in_max, not yet normalized.
ChannelMat infer_left(const Resizer& resizer, int m, int m_out,
                      const ProbeConfig& cfg);

/// Column-side mirror: probe n x n identity resized to (n, n_out).
ChannelMat infer_right(const Resizer& resizer, int n, int n_out,
                       const ProbeConfig& cfg);

/// Each row divided by its own sum.
ChannelMat normalize_rows(const ChannelMat& mat);
ChannelMat normalize_cols(const ChannelMat& mat);

/// Full probe run: left and right inferred and normalized. Exactly one
/// resizer call per side. `algo` only labels the result.
CoeffPair infer_coeffs(const Resizer& resizer, int m, int m_out, int n,
                       int n_out, ResizeAlgo algo, const ProbeConfig& cfg);

/// Checks coeffs against the resizer on random images; failures are
/// reported, never thrown.
InferenceReport verify_coeffs(const Resizer& resizer, const CoeffPair& coeffs,
                              int trials, const ProbeConfig& cfg,
                              std::uint64_t seed = 0x5eed);

/// Adapter exposing this repo's own scale() as an opaque resizer.
Resizer builtin_resizer(ResizeAlgo algo);

}  // namespace omclic
