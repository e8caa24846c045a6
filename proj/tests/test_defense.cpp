#include <doctest.h>

#include "omclic/defense.hpp"
#include "testutil.hpp"

using namespace omclic;
namespace tu = omclic::testutil;

namespace {

// downscales of one donor stay mutually consistent under Nearest sampling,
// so the craft can embed them exactly (see test_attack.cpp)
std::vector<TargetEntry> multi_scale_targets(const ImageU8& donor,
                                             const std::vector<Dims>& sizes) {
  std::vector<TargetEntry> out;
  for (const Dims& d : sizes) out.push_back({scale(donor, d, ResizeAlgo::Nearest), d});
  return out;
}

}  // namespace

TEST_CASE("pick_intermediate: never an integer multiple, always in range") {
  DefenseConfig cfg;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const Dims inter = pick_intermediate({448, 448}, {96, 96}, cfg, seed);
    CHECK(inter.first % 96 != 0);
    CHECK(inter.second % 96 != 0);
    CHECK(inter.first > 96);
    CHECK(inter.second > 96);
    CHECK(inter.first <= 448);
    CHECK(inter.second <= 448);
  }
}

TEST_CASE("pick_intermediate: multiple-heavy draws get nudged clear") {
  // force the raw draw onto 2.0 * final, an integer multiple
  DefenseConfig cfg;
  cfg.scale_range = {1.9999999, 2.0000001};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Dims inter = pick_intermediate({448, 448}, {96, 96}, cfg, seed);
    CHECK(inter.first % 96 != 0);
    CHECK(inter.second % 96 != 0);
  }
}

TEST_CASE("inter_resize: determinism per seed") {
  DefenseConfig cfg;
  cfg.seed = 1234;
  const ImageU8 img = tu::synthetic_image(200, 200, 3, 5);
  const InterResizeOutput a = inter_resize(img, {48, 48}, cfg);
  const InterResizeOutput b = inter_resize(img, {48, 48}, cfg);
  CHECK(a.intermediate_dims == b.intermediate_dims);
  CHECK(a.image == b.image);
}

TEST_CASE("inter_resize: clean image stays close to the direct scale") {
  DefenseConfig cfg;
  double mean = 0.0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const ImageU8 img = tu::synthetic_image(256, 256, 1, 90 + seed, 6.0);
    cfg.seed = seed;
    const ImageU8 defended = inter_resize(img, {64, 64}, cfg).image;
    const ImageU8 direct = scale(img, {64, 64}, cfg.algo);
    mean += ssim(defended, direct);
    ++n;
  }
  CHECK(mean / n >= 0.9);
}

TEST_CASE("inter_resize: errors") {
  const ImageU8 img = tu::synthetic_image(100, 100, 1, 7);
  DefenseConfig cfg;
  CHECK_THROWS_AS(inter_resize(img, {100, 64}, cfg), Error);
  cfg.scale_range = {0.9, 1.1};
  CHECK_THROWS_AS(inter_resize(img, {32, 32}, cfg), Error);
}

TEST_CASE("evaluate_defense: disrupts a crafted attack, spares clean images") {
  AttackSpec spec;
  spec.source = tu::synthetic_image(200, 200, 3, 11);
  spec.targets = multi_scale_targets(tu::synthetic_image(200, 200, 3, 12),
                                     {{24, 24}, {32, 32}});
  const AttackResult res = craft(spec);
  REQUIRE(res.per_target_residuals[0].pass);

  DefenseConfig cfg;
  const DefenseReport report =
      evaluate_defense(res.attack, spec.source, spec.targets, cfg, 10);
  for (const TargetDisruption& d : report.targets) {
    CHECK(d.disruption_fraction == 1.0);
    CHECK(d.mean_ssim_vs_source > d.mean_ssim_vs_target);
  }

  // defending a clean image: vacuously disrupted, high source similarity
  const DefenseReport clean =
      evaluate_defense(spec.source, spec.source, spec.targets, cfg, 5);
  for (const TargetDisruption& d : clean.targets) {
    CHECK(d.disruption_fraction == 1.0);
    CHECK(d.mean_ssim_vs_source > 0.8);
  }
}

TEST_CASE("integer-multiple intermediate leaks target artifacts") {
  AttackSpec spec;
  spec.source = tu::synthetic_image(256, 256, 1, 21);
  spec.targets = multi_scale_targets(tu::synthetic_image(256, 256, 1, 22),
                                     {{32, 32}, {48, 48}});
  const AttackResult res = craft(spec);
  REQUIRE(res.per_target_residuals[0].pass);

  const ImageU8 src_scaled = scale(spec.source, {32, 32}, ResizeAlgo::Nearest);
  // forced 8x multiple keeps the camouflage aligned with the sampling grid
  const ImageU8 bad =
      inter_resize_fixed(res.attack, {32, 32}, {256, 256}, ResizeAlgo::Nearest);
  DefenseConfig cfg;
  cfg.seed = 3;
  const ImageU8 good = inter_resize(res.attack, {32, 32}, cfg).image;
  CHECK(ssim(good, src_scaled) > ssim(bad, src_scaled));
}
