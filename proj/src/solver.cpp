#include "omclic/solver.hpp"

#include <cmath>

#include <Eigen/SparseCore>

namespace omclic {

namespace {

constexpr double kHuberMu = 1e-6;      // final smoothing width
constexpr double kMuShrink = 16.0;     // continuation ratio between rounds
constexpr double kArmijoC = 1e-4;
constexpr double kShrink = 0.5;
constexpr double kGrow = 1.5;

// sqrt(||X||^2 + mu^2) - mu, differentiable at 0
double smooth_norm(double sq, double mu) { return std::sqrt(sq + mu * mu) - mu; }
double smooth_scale(double sq, double mu) { return std::sqrt(sq + mu * mu); }

using Sparse = Eigen::SparseMatrix<double>;

void check_instance(const ChannelMat& source_ch,
                    const std::vector<ChannelMat>& targets_ch,
                    const std::vector<CoeffPair>& coeffs) {
  if (targets_ch.empty() || targets_ch.size() != coeffs.size())
    throw DimMismatch("targets and coefficient pairs must pair up, k >= 1");
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const auto [m, n] = coeffs[j].source_dims();
    const auto [mo, no] = coeffs[j].out_dims();
    if (m != source_ch.rows() || n != source_ch.cols())
      throw DimMismatch("coeff pair " + std::to_string(j) + " does not match source");
    if (mo != targets_ch[j].rows() || no != targets_ch[j].cols())
      throw DimMismatch("target " + std::to_string(j) + " dims do not match operators");
  }
}

// one crafting instance with sparse operator caches; the resize operators
// have narrow support, so sparse products keep large sources cheap
struct Problem {
  const ChannelMat& source;
  const std::vector<ChannelMat>& targets;
  const SolverConfig& cfg;
  double mu = kHuberMu;
  std::vector<Sparse> lefts, rights, lefts_t, rights_t;

  Problem(const ChannelMat& source_ch, const std::vector<ChannelMat>& targets_ch,
          const std::vector<CoeffPair>& coeffs, const SolverConfig& solver_cfg)
      : source(source_ch), targets(targets_ch), cfg(solver_cfg) {
    check_instance(source_ch, targets_ch, coeffs);
    cfg.validate(coeffs.size());
    const std::size_t k = coeffs.size();
    lefts.resize(k);
    rights.resize(k);
    lefts_t.resize(k);
    rights_t.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      lefts[j] = coeffs[j].left.sparseView(0.0, 0.0);
      rights[j] = coeffs[j].right.sparseView(0.0, 0.0);
      lefts_t[j] = lefts[j].transpose();
      rights_t[j] = rights[j].transpose();
    }
  }

  struct Eval {
    double loss;
    // loss without the -mu shifts: monotone under descent at fixed mu and
    // decreasing when mu shrinks, so it serves as the recorded trace value
    double unshifted;
    std::vector<ChannelMat> errs;
    double delta_sq;
  };

  Eval eval(const ChannelMat& d) const {
    if (d.rows() != source.rows() || d.cols() != source.cols())
      throw DimMismatch("delta dims do not match source");
    Eval e;
    e.delta_sq = d.squaredNorm();
    e.loss = cfg.weight(0) * smooth_norm(e.delta_sq, mu);
    e.unshifted = cfg.weight(0) * smooth_scale(e.delta_sq, mu);
    e.errs.resize(lefts.size());
    const ChannelMat attacked = source + d;
    for (std::size_t j = 0; j < lefts.size(); ++j) {
      e.errs[j] = lefts[j] * attacked * rights[j] - targets[j];
      const double sq = e.errs[j].squaredNorm();
      e.loss += cfg.weight(j + 1) * smooth_norm(sq, mu);
      e.unshifted += cfg.weight(j + 1) * smooth_scale(sq, mu);
    }
    if (!std::isfinite(e.loss))
      throw NonFiniteObjective("objective became non-finite");
    return e;
  }

  ChannelMat gradient(const ChannelMat& d, const Eval& e) const {
    ChannelMat g = (cfg.weight(0) / smooth_scale(e.delta_sq, mu)) * d;
    for (std::size_t j = 0; j < lefts.size(); ++j) {
      const double s =
          cfg.weight(j + 1) / smooth_scale(e.errs[j].squaredNorm(), mu);
      g += s * (lefts_t[j] * e.errs[j] * rights_t[j]);
    }
    return g;
  }
};

}  // namespace

void SolverConfig::validate(std::size_t k) const {
  if (max_iters < 1) throw Error("max_iters must be >= 1");
  if (grad_tol <= 0.0) throw Error("grad_tol must be > 0");
  if (step_init <= 0.0) throw Error("step_init must be > 0");
  if (!objective_weights.empty()) {
    if (objective_weights.size() != k + 1)
      throw Error("need k+1 objective weights");
    for (double w : objective_weights)
      if (!(w > 0.0)) throw Error("objective weights must be > 0");
  }
}

std::pair<double, std::vector<double>> objective(
    const ChannelMat& delta, const ChannelMat& source_ch,
    const std::vector<ChannelMat>& targets_ch,
    const std::vector<CoeffPair>& coeffs, const SolverConfig& cfg) {
  check_instance(source_ch, targets_ch, coeffs);
  if (delta.rows() != source_ch.rows() || delta.cols() != source_ch.cols())
    throw DimMismatch("delta dims do not match source");
  cfg.validate(coeffs.size());

  const ChannelMat attacked = source_ch + delta;
  double loss = cfg.weight(0) * delta.norm();
  std::vector<double> residuals(coeffs.size());
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    residuals[j] = (apply_linear(coeffs[j], attacked) - targets_ch[j]).norm();
    loss += cfg.weight(j + 1) * residuals[j];
  }
  return {loss, residuals};
}

double smoothed_objective(const ChannelMat& delta, const ChannelMat& source_ch,
                          const std::vector<ChannelMat>& targets_ch,
                          const std::vector<CoeffPair>& coeffs,
                          const SolverConfig& cfg) {
  return Problem(source_ch, targets_ch, coeffs, cfg).eval(delta).loss;
}

ChannelMat smoothed_gradient(const ChannelMat& delta, const ChannelMat& source_ch,
                             const std::vector<ChannelMat>& targets_ch,
                             const std::vector<CoeffPair>& coeffs,
                             const SolverConfig& cfg) {
  const Problem p(source_ch, targets_ch, coeffs, cfg);
  return p.gradient(delta, p.eval(delta));
}

std::pair<ChannelMat, SolveTrace> solve_channel(
    const ChannelMat& source_ch, const std::vector<ChannelMat>& targets_ch,
    const std::vector<CoeffPair>& coeffs, const SolverConfig& cfg,
    const ChannelMat* start) {
  Problem prob(source_ch, targets_ch, coeffs, cfg);
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const auto [mo, no] = coeffs[j].out_dims();
    if (mo >= source_ch.rows() || no >= source_ch.cols())
      throw TargetNotSmaller("target sizes must be strictly smaller than source");
  }

  const ChannelMat lo = -source_ch;
  const ChannelMat hi =
      ChannelMat::Constant(source_ch.rows(), source_ch.cols(), 255.0) - source_ch;
  const auto project = [&](const ChannelMat& d) -> ChannelMat {
    return d.cwiseMax(lo).cwiseMin(hi);
  };

  ChannelMat delta = start ? project(*start)
                           : ChannelMat::Zero(source_ch.rows(), source_ch.cols());
  Problem::Eval cur = prob.eval(delta);

  // RMS-per-pixel stationarity threshold; a per-pixel-count scale would
  // dwarf the bounded gradient of the normalized loss on large images
  const double pg_stop = cfg.grad_tol * std::sqrt(static_cast<double>(source_ch.size()));

  // continuation schedule: plain gradient steps stall on the kinks of the
  // exact sum-of-norms loss (unit-norm subgradient once a target embeds),
  // so descend a coarsely smoothed surrogate first and sharpen it stepwise
  std::vector<double> mus;
  for (double mu = std::max(kHuberMu, cur.loss / kMuShrink); mu > kHuberMu;
       mu /= kMuShrink)
    mus.push_back(mu);
  mus.push_back(kHuberMu);

  SolveTrace trace;
  prob.mu = mus.front();
  // record the un-shifted smoothed sums: they fall under descent at a fixed
  // width and fall again whenever the width shrinks, so the trace stays
  // monotone across continuation rounds
  trace.objective_values.push_back(prob.eval(delta).unshifted);

  trace.stop_reason = StopReason::GradTol;
  int iters_left = cfg.max_iters;
  for (double mu : mus) {
    prob.mu = mu;
    cur = prob.eval(delta);
    const bool last_round = mu == kHuberMu;
    double step = cfg.step_init;

    while (iters_left > 0) {
      const ChannelMat g = prob.gradient(delta, cur);
      const double pg_norm = (delta - project(delta - g)).norm();
      if (pg_norm <= pg_stop) break;

      // Armijo backtracking along the projected path
      step *= kGrow;
      bool accepted = false;
      for (int ls = 0; ls < 80; ++ls) {
        const ChannelMat cand = project(delta - step * g);
        const double decrease_ref = (g.array() * (delta - cand).array()).sum();
        const Problem::Eval trial = prob.eval(cand);
        if (trial.loss <= cur.loss - kArmijoC * decrease_ref) {
          delta = cand;
          cur = trial;
          accepted = true;
          break;
        }
        step *= kShrink;
      }
      if (!accepted) {
        // converged at this smoothing scale; sharpen, or stop on the last round
        if (last_round) trace.stop_reason = StopReason::LineSearch;
        break;
      }

      ++trace.iterations;
      --iters_left;
      trace.objective_values.push_back(cur.unshifted);
    }
    if (iters_left == 0) {
      trace.stop_reason = StopReason::MaxIters;
      break;
    }
  }

  auto [loss, residuals] = objective(delta, source_ch, targets_ch, coeffs, cfg);
  trace.final_loss = loss;
  trace.residuals = std::move(residuals);
  trace.delta_norm = delta.norm();
  return {std::move(delta), std::move(trace)};
}

}  // namespace omclic
