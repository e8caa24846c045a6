#include "omclic/attack.hpp"

#include <cmath>
#include <future>
#include <set>

namespace omclic {

namespace {

void check_spec(const AttackSpec& spec) {
  if (spec.targets.empty()) throw Error("at least one target is required");
  std::set<Dims> seen;
  for (const TargetEntry& t : spec.targets) {
    const auto [mh, nw] = t.out_dims;
    if (mh >= spec.source.height || nw >= spec.source.width)
      throw TargetNotSmaller("target dims must be strictly smaller than source");
    if (mh <= 0 || nw <= 0) throw DimZero("target dims must be positive");
    if (t.image.height != mh || t.image.width != nw)
      throw DimMismatch("target image does not match its declared out_dims");
    if (t.image.channels != spec.source.channels)
      throw ChannelMismatch("target channel count differs from source");
    if (!seen.insert(t.out_dims).second)
      throw DuplicateTargetSize("two targets share one output size");
  }
}

CoeffPair coeffs_for(const AttackSpec& spec, Dims out) {
  const auto [mh, nw] = out;
  if (!spec.inferred)
    return kernel_matrices(spec.algo, spec.source.height, mh, spec.source.width, nw);

  const InferredCoeffSource& src = *spec.inferred;
  CoeffPair cp = infer_coeffs(src.resizer, spec.source.height, mh,
                              spec.source.width, nw, spec.algo, src.probe);
  const InferenceReport rep =
      verify_coeffs(src.resizer, cp, src.verify_trials, src.probe);
  if (!rep.passed)
    throw CoeffVerificationFailed("inferred coefficients failed verification, "
                                  "max_abs_error = " +
                                  std::to_string(rep.max_abs_error));
  return cp;
}

// true when every output pixel reads from a single source pixel (nearest
// kernels, analytic or inferred)
bool nearest_like(const CoeffPair& cp) {
  for (int i = 0; i < cp.left.rows(); ++i)
    if (cp.left.row(i).maxCoeff() < 0.99) return false;
  for (int j = 0; j < cp.right.cols(); ++j)
    if (cp.right.col(j).maxCoeff() < 0.99) return false;
  return true;
}

double exact_loss(const ChannelMat& delta, const ChannelMat& source,
                  const std::vector<ChannelMat>& targets,
                  const std::vector<CoeffPair>& coeffs) {
  double loss = delta.norm();
  for (std::size_t j = 0; j < targets.size(); ++j)
    loss +=
        (coeffs[j].left * (source + delta) * coeffs[j].right - targets[j]).norm();
  return loss;
}

// For nearest-like operators the optimum is closed-form: set each
// constrained source pixel to the mean of the targets' demands on it and
// leave the rest at the source. Gradient descent approaches this point but
// can stall short of it in the flat valley around it, so craft() computes
// the stamp directly and keeps whichever scores better.
ChannelMat stamped_delta(const ChannelMat& source,
                         const std::vector<ChannelMat>& targets,
                         const std::vector<CoeffPair>& coeffs) {
  ChannelMat sum = ChannelMat::Zero(source.rows(), source.cols());
  ChannelMat cnt = ChannelMat::Zero(source.rows(), source.cols());
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const ChannelMat& L = coeffs[j].left;
    const ChannelMat& R = coeffs[j].right;
    for (int i = 0; i < L.rows(); ++i) {
      int sr;
      L.row(i).maxCoeff(&sr);
      for (int jj = 0; jj < R.cols(); ++jj) {
        int sc;
        R.col(jj).maxCoeff(&sc);
        sum(sr, sc) += targets[j](i, jj);
        cnt(sr, sc) += 1.0;
      }
    }
  }
  ChannelMat delta = ChannelMat::Zero(source.rows(), source.cols());
  for (int r = 0; r < source.rows(); ++r)
    for (int c = 0; c < source.cols(); ++c)
      if (cnt(r, c) > 0.0) delta(r, c) = sum(r, c) / cnt(r, c) - source(r, c);
  return delta;
}

}  // namespace

std::vector<TargetResidual> verify(const ImageU8& attack,
                                   const std::vector<TargetEntry>& targets,
                                   ResizeAlgo algo, double mean_abs_tol) {
  std::vector<TargetResidual> out;
  out.reserve(targets.size());
  for (const TargetEntry& t : targets) {
    if (t.image.channels != attack.channels)
      throw ChannelMismatch("target channel count differs from attack image");
    const ImageU8 scaled = scale(attack, t.out_dims, algo);
    if (!scaled.same_dims(t.image))
      throw DimMismatch("target image does not match its declared out_dims");
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < scaled.pixels.size(); ++i) {
      const double d =
          static_cast<double>(scaled.pixels[i]) - t.image.pixels[i];
      abs_sum += std::abs(d);
      sq_sum += d * d;
    }
    TargetResidual r;
    r.out_dims = t.out_dims;
    r.mean_abs = abs_sum / static_cast<double>(scaled.pixels.size());
    r.l2 = std::sqrt(sq_sum);
    r.pass = r.mean_abs <= mean_abs_tol;
    out.push_back(r);
  }
  return out;
}

AttackResult craft(const AttackSpec& spec) {
  check_spec(spec);
  const int c = spec.source.channels;
  const std::size_t k = spec.targets.size();

  std::vector<CoeffPair> coeffs;
  coeffs.reserve(k);
  for (const TargetEntry& t : spec.targets)
    coeffs.push_back(coeffs_for(spec, t.out_dims));

  AttackResult result;
  result.warned_k_above_8 = k > 8;
  result.attack = spec.source;
  result.delta_stats.resize(c);
  result.traces.resize(c);

  bool all_nearest_like = true;
  for (const CoeffPair& cp : coeffs)
    all_nearest_like = all_nearest_like && nearest_like(cp);

  // Algorithm: one solver invocation per channel, channels independent
  const auto solve_one = [&](int ch) {
    const ChannelMat source_ch = channel_of(spec.source, ch);
    std::vector<ChannelMat> targets_ch;
    targets_ch.reserve(k);
    for (const TargetEntry& t : spec.targets)
      targets_ch.push_back(channel_of(t.image, ch));
    if (all_nearest_like && spec.prefer_exact_embed) {
      ChannelMat stamp = stamped_delta(source_ch, targets_ch, coeffs);
      SolveTrace trace;
      trace.final_loss = exact_loss(stamp, source_ch, targets_ch, coeffs);
      trace.objective_values = {trace.final_loss};
      trace.delta_norm = stamp.norm();
      for (std::size_t j = 0; j < targets_ch.size(); ++j)
        trace.residuals.push_back(
            (coeffs[j].left * (source_ch + stamp) * coeffs[j].right -
             targets_ch[j])
                .norm());
      trace.stop_reason = StopReason::GradTol;
      return std::pair{std::move(stamp), std::move(trace)};
    }
    auto solved = solve_channel(source_ch, targets_ch, coeffs, spec.solver);
    if (all_nearest_like) {
      const ChannelMat stamp = stamped_delta(source_ch, targets_ch, coeffs);
      if (exact_loss(stamp, source_ch, targets_ch, coeffs) <=
          exact_loss(solved.first, source_ch, targets_ch, coeffs))
        solved.first = stamp;
    }
    return solved;
  };

  std::vector<std::pair<ChannelMat, SolveTrace>> solved(c);
  if (spec.threads > 1 && c > 1) {
    std::vector<std::future<std::pair<ChannelMat, SolveTrace>>> futs;
    for (int ch = 0; ch < c; ++ch)
      futs.push_back(std::async(std::launch::async, solve_one, ch));
    for (int ch = 0; ch < c; ++ch) solved[ch] = futs[ch].get();
  } else {
    for (int ch = 0; ch < c; ++ch) solved[ch] = solve_one(ch);
  }

  for (int ch = 0; ch < c; ++ch) {
    auto& [delta, trace] = solved[ch];
    result.delta_stats[ch].l2 = delta.norm();
    result.delta_stats[ch].max_abs = delta.cwiseAbs().maxCoeff();
    result.traces[ch] = std::move(trace);
    set_channel(result.attack, ch, channel_of(spec.source, ch) + delta);
  }

  // rounding is outside the optimizer's model, so re-verify after it
  result.per_target_residuals = verify(result.attack, spec.targets, spec.algo);
  result.source_similarity.ssim = ssim(result.attack, spec.source);
  result.source_similarity.uqi = uqi(result.attack, spec.source);
  result.source_similarity.psnr = psnr(result.attack, spec.source);
  try {
    result.source_similarity.msssim = msssim(result.attack, spec.source);
  } catch (const MinSizeViolated&) {
    result.source_similarity.msssim = std::nan("");
  }
  return result;
}

std::vector<SweepRow> capacity_sweep(const ImageU8& source,
                                     const std::vector<TargetEntry>& target_pool,
                                     int k_max, ResizeAlgo algo,
                                     const SolverConfig& solver_cfg,
                                     int threads) {
  if (k_max < 1 || static_cast<std::size_t>(k_max) > target_pool.size())
    throw Error("k_max must be in [1, pool size]");
  std::vector<SweepRow> rows;
  for (int k = 1; k <= k_max; ++k) {
    AttackSpec spec;
    spec.source = source;
    spec.targets.assign(target_pool.begin(), target_pool.begin() + k);
    spec.algo = algo;
    spec.solver = solver_cfg;
    spec.threads = threads;
    const AttackResult res = craft(spec);
    SweepRow row;
    row.k = k;
    row.source_similarity = res.source_similarity.ssim;
    row.all_pass = true;
    for (const TargetResidual& r : res.per_target_residuals) {
      row.worst_residual = std::max(row.worst_residual, r.mean_abs);
      row.all_pass = row.all_pass && r.pass;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace omclic
