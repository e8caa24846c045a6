#pragma once

#include <optional>
#include <vector>

#include "omclic/coeff_infer.hpp"
#include "omclic/metrics.hpp"
#include "omclic/solver.hpp"

namespace omclic {

struct TargetEntry {
  ImageU8 image;
  Dims out_dims;
};

/// When set, coefficients come from black-box probing of this resizer
/// instead of the analytic kernels; inference must verify before crafting.
struct InferredCoeffSource {
  Resizer resizer;
  ProbeConfig probe;
  int verify_trials = 20;
};

struct AttackSpec {
  ImageU8 source;
  std::vector<TargetEntry> targets;
  ResizeAlgo algo = ResizeAlgo::Nearest;
  std::optional<InferredCoeffSource> inferred;  // empty means analytic
  SolverConfig solver;
  int threads = 1;  // channel-level parallelism
  // With nearest-like operators an exact embed (each constrained pixel set
  // to its targets' mean demand) always exists. By default craft keeps it
  // only when it lowers the loss; set this when faithful target content
  // (e.g. an embedded trigger) matters more than perturbation size.
  bool prefer_exact_embed = false;
};

struct DeltaStats {
  double l2 = 0.0;
  double max_abs = 0.0;
};

struct TargetResidual {
  Dims out_dims;
  double mean_abs = 0.0;  // intensity levels, post quantization
  double l2 = 0.0;
  bool pass = false;
};

struct AttackResult {
  ImageU8 attack;
  std::vector<DeltaStats> delta_stats;          // per channel
  std::vector<TargetResidual> per_target_residuals;
  std::vector<SolveTrace> traces;               // per channel, size == c
  MetricsReport source_similarity;
  bool warned_k_above_8 = false;
};

/// Verification threshold on post-quantization mean-abs residual.
constexpr double kDefaultResidualTol = 2.0;

/// Full crafting run: per channel, gather (L_j, R_j) per target, solve for
/// the perturbation, quantize once, then re-verify against every target.
AttackResult craft(const AttackSpec& spec);

/// Residual report of scale(attack) against each target.
std::vector<TargetResidual> verify(const ImageU8& attack,
                                   const std::vector<TargetEntry>& targets,
                                   ResizeAlgo algo,
                                   double mean_abs_tol = kDefaultResidualTol);

struct SweepRow {
  int k = 0;
  double source_similarity = 0.0;  // SSIM(attack, source)
  double worst_residual = 0.0;     // max per-target mean-abs
  bool all_pass = false;
};

/// Crafts with the first k targets of the pool for k = 1..k_max.
std::vector<SweepRow> capacity_sweep(const ImageU8& source,
                                     const std::vector<TargetEntry>& target_pool,
                                     int k_max, ResizeAlgo algo,
                                     const SolverConfig& solver_cfg,
                                     int threads = 1);

}  // namespace omclic
