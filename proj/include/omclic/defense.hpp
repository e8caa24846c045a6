#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "omclic/attack.hpp"

namespace omclic {

struct DefenseConfig {
  std::pair<double, double> scale_range = {1.3, 1.9};  // intermediate blow-up
  std::uint64_t seed = 0;
  ResizeAlgo algo = ResizeAlgo::Nearest;  // both hops

  void validate() const {
    if (!(scale_range.first > 1.0) || scale_range.second < scale_range.first)
      throw Error("scale_range must satisfy 1 < min <= max");
  }
};

struct InterResizeOutput {
  ImageU8 image;
  Dims intermediate_dims;
};

/// Two-hop resize through a randomized intermediate size whose dimensions
/// are never integer multiples of the final ones.
InterResizeOutput inter_resize(const ImageU8& image, Dims final_dims,
                               const DefenseConfig& cfg);

/// Test hook: same two-hop pipeline with a caller-forced intermediate size
/// (no admissibility check).
ImageU8 inter_resize_fixed(const ImageU8& image, Dims final_dims,
                           Dims intermediate_dims, ResizeAlgo algo);

/// Picks an admissible intermediate size for the given draw; exposed so
/// properties over the draw distribution can be tested directly.
Dims pick_intermediate(Dims input_dims, Dims final_dims, const DefenseConfig& cfg,
                       std::uint64_t seed);

struct TargetDisruption {
  Dims out_dims;
  double disruption_fraction = 0.0;  // trials where output is closer to source
  double mean_ssim_vs_source = 0.0;  // SSIM(defended, scale(source))
  double mean_ssim_vs_target = 0.0;
};

struct DefenseReport {
  std::vector<TargetDisruption> targets;
  int trials = 0;
};

DefenseReport evaluate_defense(const ImageU8& attack, const ImageU8& source,
                               const std::vector<TargetEntry>& targets,
                               const DefenseConfig& cfg, int trials);

}  // namespace omclic
