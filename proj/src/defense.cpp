#include "omclic/defense.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace omclic {

namespace {

int nearest_src(int i, int out_n, int in_n) {
  return std::min(static_cast<int>((i + 0.5) * in_n / out_n), in_n - 1);
}

// fraction of final-grid samples whose two-hop nearest path lands on the
// same source index as the direct one-hop grid; near 1 the intermediate
// barely re-samples and an embedded grid survives the defense
double grid_agreement(int final_n, int inter_n, int in_n) {
  int same = 0;
  for (int i = 0; i < final_n; ++i) {
    const int via = nearest_src(nearest_src(i, final_n, inter_n), inter_n, in_n);
    if (via == nearest_src(i, final_n, in_n)) ++same;
  }
  return static_cast<double>(same) / final_n;
}

bool admissible(Dims inter, Dims final_dims, Dims input_dims) {
  const auto [ih, iw] = inter;
  const auto [fh, fw] = final_dims;
  if (ih > input_dims.first || iw > input_dims.second) return false;
  if (ih <= fh || iw <= fw) return false;
  // per-axis integer-multiple check
  if (ih % fh == 0 || iw % fw == 0) return false;
  // non-multiples can still compose into (nearly) the direct sampling grid;
  // reject intermediates that keep more than half of it intact on any axis
  if (grid_agreement(fh, ih, input_dims.first) > 0.5) return false;
  if (grid_agreement(fw, iw, input_dims.second) > 0.5) return false;
  return true;
}

}  // namespace

Dims pick_intermediate(Dims input_dims, Dims final_dims, const DefenseConfig& cfg,
                       std::uint64_t seed) {
  cfg.validate();
  const auto [fh, fw] = final_dims;
  if (fh >= input_dims.first || fw >= input_dims.second)
    throw Error("final dims must be strictly smaller than input dims");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(cfg.scale_range.first,
                                              cfg.scale_range.second);
  constexpr int kRetries = 32;
  Dims cand{0, 0};
  for (int i = 0; i < kRetries; ++i) {
    const double s = dist(rng);
    cand = {static_cast<int>(std::lround(fh * s)),
            static_cast<int>(std::lround(fw * s))};
    if (admissible(cand, final_dims, input_dims)) return cand;
  }
  // nudge the last draw upward per axis until both constraints clear
  for (int i = 0; i < kRetries; ++i) {
    if (cand.first % fh == 0 || cand.first <= fh ||
        grid_agreement(fh, cand.first, input_dims.first) > 0.5)
      ++cand.first;
    if (cand.second % fw == 0 || cand.second <= fw ||
        grid_agreement(fw, cand.second, input_dims.second) > 0.5)
      ++cand.second;
    if (admissible(cand, final_dims, input_dims)) return cand;
  }
  throw NoAdmissibleIntermediate("no admissible intermediate size exists");
}

ImageU8 inter_resize_fixed(const ImageU8& image, Dims final_dims,
                           Dims intermediate_dims, ResizeAlgo algo) {
  return scale(scale(image, intermediate_dims, algo), final_dims, algo);
}

InterResizeOutput inter_resize(const ImageU8& image, Dims final_dims,
                               const DefenseConfig& cfg) {
  const Dims inter =
      pick_intermediate({image.height, image.width}, final_dims, cfg, cfg.seed);
  return {inter_resize_fixed(image, final_dims, inter, cfg.algo), inter};
}

DefenseReport evaluate_defense(const ImageU8& attack, const ImageU8& source,
                               const std::vector<TargetEntry>& targets,
                               const DefenseConfig& cfg, int trials) {
  if (trials < 1) throw Error("trials must be >= 1");
  DefenseReport report;
  report.trials = trials;
  for (const TargetEntry& t : targets) {
    TargetDisruption d;
    d.out_dims = t.out_dims;
    const ImageU8 source_scaled = scale(source, t.out_dims, cfg.algo);
    for (int i = 0; i < trials; ++i) {
      DefenseConfig trial_cfg = cfg;
      trial_cfg.seed = cfg.seed + static_cast<std::uint64_t>(i);
      const ImageU8 defended = inter_resize(attack, t.out_dims, trial_cfg).image;
      const double s_src = ssim(defended, source_scaled);
      const double s_tgt = ssim(defended, t.image);
      d.mean_ssim_vs_source += s_src;
      d.mean_ssim_vs_target += s_tgt;
      if (s_src > s_tgt) d.disruption_fraction += 1.0;
    }
    d.disruption_fraction /= trials;
    d.mean_ssim_vs_source /= trials;
    d.mean_ssim_vs_target /= trials;
    report.targets.push_back(d);
  }
  return report;
}

}  // namespace omclic
