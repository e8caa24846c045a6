#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "omclic/resize.hpp"

namespace omclic {

struct SolverConfig {
  int max_iters = 2000;
  double grad_tol = 1e-4;   // projected-gradient norm per pixel
  double step_init = 1.0;
  // weight 0 scales the perturbation norm, weights 1..k the target residuals;
  // empty means all 1
  std::vector<double> objective_weights;
  std::uint64_t seed = 0;

  void validate(std::size_t k) const;
  double weight(std::size_t i) const {
    return objective_weights.empty() ? 1.0 : objective_weights[i];
  }
};

enum class StopReason { GradTol, LineSearch, MaxIters };

struct SolveTrace {
  int iterations = 0;
  std::vector<double> objective_values;  // monotone non-increasing
  double final_loss = 0.0;
  std::vector<double> residuals;  // per-target Frobenius errors
  double delta_norm = 0.0;
  StopReason stop_reason = StopReason::MaxIters;
};

/// Weighted Eq-style loss: w0*||delta||_F + sum_j wj*||L_j(S+delta)R_j - T_j||_F.
/// Returns the loss and the k unweighted residuals.
std::pair<double, std::vector<double>> objective(
    const ChannelMat& delta, const ChannelMat& source_ch,
    const std::vector<ChannelMat>& targets_ch,
    const std::vector<CoeffPair>& coeffs, const SolverConfig& cfg);

/// Huber-smoothed variant of the loss actually descended by solve_channel
/// (each norm replaced by sqrt(||.||^2 + mu^2) - mu, mu = 1e-6), and its
/// analytic gradient.
double smoothed_objective(const ChannelMat& delta, const ChannelMat& source_ch,
                          const std::vector<ChannelMat>& targets_ch,
                          const std::vector<CoeffPair>& coeffs,
                          const SolverConfig& cfg);
ChannelMat smoothed_gradient(const ChannelMat& delta, const ChannelMat& source_ch,
                             const std::vector<ChannelMat>& targets_ch,
                             const std::vector<CoeffPair>& coeffs,
                             const SolverConfig& cfg);

/// Projected gradient descent on the Huber-smoothed loss, box constraint
/// 0 <= source + delta <= 255 enforced by projection at every iterate.
/// The smoothing width is continued from a coarse scale down to 1e-6 so the
/// iterates do not stall on the kinks of the exact sum-of-norms objective.
/// `start` seeds the first iterate (projected); zero when omitted.
std::pair<ChannelMat, SolveTrace> solve_channel(
    const ChannelMat& source_ch, const std::vector<ChannelMat>& targets_ch,
    const std::vector<CoeffPair>& coeffs, const SolverConfig& cfg,
    const ChannelMat* start = nullptr);

}  // namespace omclic
