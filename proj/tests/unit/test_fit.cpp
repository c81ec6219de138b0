#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "helpers.hpp"
#include "wirefit/errors.hpp"
#include "wirefit/eval.hpp"
#include "wirefit/fit.hpp"

using namespace wirefit;

namespace {

double rmse_between(const ParamVector& a, const ParamVector& b, const BaseShapeSet& bases) {
  return rmse_3d(compose_skeleton(a.decode().first, bases),
                 compose_skeleton(b.decode().first, bases));
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("reprojection cost vanishes at the generating parameters") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const ParamVector s = testutil::random_params(bases, rng);
    const Keypoints2D x = project_skeleton(s, bases);
    CHECK(reprojection_cost(s, x, bases) == 0.0);
  }
}

TEST_CASE("a pure 2D shift under parallel projection is absorbed by t") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(32);
  const ParamVector s = testutil::random_params(bases, rng, 0.0, 0.0);
  Keypoints2D x = project_skeleton(s, bases);
  const Eigen::Vector2d delta(0.13, -0.07);
  x.coords.colwise() += delta;

  FitConfig cfg;
  cfg.restarts = 1;
  cfg.freeze_inv_f = true;
  const FitResult r = fit_perspective(x, bases, s, cfg);
  CHECK(r.final_cost < 1e-16);
  CHECK(r.s_hat.t(0) - s.t(0) == doctest::Approx(delta.x()).epsilon(1e-6));
  CHECK(r.s_hat.t(1) - s.t(1) == doctest::Approx(delta.y()).epsilon(1e-6));
  // Structure and viewpoint stay put; only the translation moves.
  for (int i = 0; i < s.num_alpha_free(); ++i) {
    CHECK(std::abs(r.s_hat.alpha_free(i) - s.alpha_free(i)) < 1e-5);
  }
  CHECK(std::abs(r.s_hat.azimuth() - s.azimuth()) < 1e-5);
}

TEST_CASE("cost is invariant to a consistent keypoint permutation") {
  const BaseShapeSet bases = testutil::toy_bases(3);
  Rng rng = make_rng(33);
  const ParamVector s = testutil::random_params(bases, rng);
  const Keypoints2D x = project_skeleton(s, bases);

  const std::vector<int> perm = {2, 0, 3, 1};
  BaseShapeSet permuted = bases;
  for (std::size_t k = 0; k < bases.bases.size(); ++k) {
    for (int i = 0; i < 4; ++i) permuted.bases[k].col(i) = bases.bases[k].col(perm[i]);
  }
  for (int i = 0; i < 4; ++i) permuted.spec.keypoint_names[i] = bases.spec.keypoint_names[perm[i]];
  std::vector<int> inverse(4);
  for (int i = 0; i < 4; ++i) inverse[perm[i]] = i;
  for (auto& [a, b] : permuted.spec.edges) {
    a = inverse[a];
    b = inverse[b];
    if (a > b) std::swap(a, b);
  }
  std::sort(permuted.spec.edges.begin(), permuted.spec.edges.end());
  permuted.validate();

  Eigen::Matrix2Xd xp(2, 4);
  for (int i = 0; i < 4; ++i) xp.col(i) = x.coords.col(perm[i]);
  const double c0 = reprojection_cost(s, x, bases);
  const double c1 = reprojection_cost(s, Keypoints2D::all_visible(xp), permuted);
  CHECK(c0 == doctest::Approx(c1).epsilon(1e-15));
}

TEST_CASE("parallel init reprojects clean parallel views to below 1e-8") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const ParamVector s = testutil::random_params(bases, rng, 0.0, 0.0);
    const Keypoints2D x = project_skeleton(s, bases);
    const ParamVector init = fit_parallel_init(x, bases);
    CHECK(init.inv_f() == 0.0);
    CHECK(reprojection_cost(init, x, bases) < 1e-8);
  }
}

TEST_CASE("the mean shape at identity pose recovers near-zero deformations") {
  const BaseShapeSet& bases = testutil::chair();
  ParamVector s{Eigen::VectorXd::Zero(param_vector_size(bases.num_bases()))};
  const Keypoints2D x = project_skeleton(s, bases);
  const ParamVector init = fit_parallel_init(x, bases);
  for (int i = 0; i < init.num_alpha_free(); ++i) {
    CHECK(std::abs(init.alpha_free(i)) < 1e-4);
  }
}

TEST_CASE("depth-reflected candidates tie in parallel cost on planar shapes") {
  const BaseShapeSet bases = testutil::planar_bases();
  Rng rng = make_rng(35);
  const ParamVector s = testutil::random_params(bases, rng, 0.0, 0.0);
  const Keypoints2D x = project_skeleton(s, bases);
  const std::vector<ParamVector> candidates = parallel_init_candidates(x, bases);
  REQUIRE(candidates.size() == 2);
  const double c0 = reprojection_cost(candidates[0], x, bases);
  const double c1 = reprojection_cost(candidates[1], x, bases);
  CHECK(std::abs(c0 - c1) < 1e-10);
  // The two candidates genuinely differ in viewpoint, not just numerically.
  CHECK(std::abs(candidates[0].azimuth() - candidates[1].azimuth()) +
            std::abs(candidates[0].elevation() - candidates[1].elevation()) >
        1e-6);
}

TEST_CASE("starting at the ground truth converges immediately") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(36);
  for (int trial = 0; trial < 10; ++trial) {
    const ParamVector s = testutil::random_params(bases, rng, 0.0, 0.8);
    const Keypoints2D x = project_skeleton(s, bases);
    FitConfig cfg;
    cfg.restarts = 1;
    const FitResult r = fit_perspective(x, bases, s, cfg);
    CHECK(r.converged);
    CHECK(r.iterations <= 5);
    CHECK(r.final_cost < 1e-12);
  }
}

TEST_CASE("the optimizer never returns a cost above the init cost") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const ParamVector s_true = testutil::random_params(bases, rng);
    const Keypoints2D x = project_skeleton(s_true, bases);
    const ParamVector init = testutil::random_params(bases, rng);
    FitConfig cfg;
    cfg.restarts = 3;
    cfg.max_iters = 40;
    const FitResult r = fit_perspective(x, bases, init, cfg);
    CHECK(r.final_cost <= reprojection_cost(init, x, bases));
  }
}

TEST_CASE("clean perspective round trips recover the 3D shape") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(38);
  int good = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const ParamVector s = testutil::random_params(bases, rng, 0.0, 0.8);
    const Keypoints2D x = project_skeleton(s, bases);
    FitConfig cfg;
    cfg.seed = derive_seed(38, trial);
    const FitResult r = fit_keypoints(x, bases, cfg);
    if (rmse_between(r.s_hat, s, bases) < 1e-3) ++good;
  }
  CHECK(good >= 95);
}

TEST_CASE("final cost equals the best recorded restart cost") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(39);
  for (int trial = 0; trial < 10; ++trial) {
    const ParamVector s = testutil::random_params(bases, rng);
    const Keypoints2D x = project_skeleton(s, bases);
    FitConfig cfg;
    cfg.restarts = 6;
    cfg.max_iters = 60;
    cfg.seed = trial;
    const FitResult r = fit_keypoints(x, bases, cfg);
    REQUIRE(!r.restart_costs.empty());
    CHECK(r.final_cost ==
          *std::min_element(r.restart_costs.begin(), r.restart_costs.end()));
    CHECK(r.restarts_used == static_cast<int>(r.restart_costs.size()));
  }
}

TEST_CASE("frozen inverse focal length stays at the parallel solution") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(40);
  for (int trial = 0; trial < 50; ++trial) {
    const ParamVector s = testutil::random_params(bases, rng, 0.0, 0.0);
    const Keypoints2D x = project_skeleton(s, bases);
    const ParamVector init = fit_parallel_init(x, bases);
    const double parallel_cost = reprojection_cost(init, x, bases);
    FitConfig cfg;
    cfg.restarts = 1;
    cfg.freeze_inv_f = true;
    const FitResult r = fit_perspective(x, bases, init, cfg);
    CHECK(r.s_hat.inv_f() == 0.0);
    CHECK(parallel_cost < 1e-5);  // the init nearly solves clean parallel data
    CHECK(r.final_cost <= parallel_cost + 1e-8);
  }
}

TEST_CASE("noise-free heatmap fits stay under one cell of 3D error") {
  const BaseShapeSet& bases = testutil::chair();
  SamplerConfig cfg;
  cfg.seed = 41;
  cfg.perturbation_ratio = 0.0;  // isolate heatmap quantization
  const std::vector<SynthSample> data = generate_dataset(cfg, bases, 12);
  const double cell_units = 2.0 / cfg.heatmap_width;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    FitConfig fc;
    fc.seed = derive_seed(41, i);
    const FitResult r = fit_from_heatmaps(data[i].heatmaps, bases, fc);
    total += rmse_between(r.s_hat, data[i].s_true, bases);
  }
  CHECK(total / data.size() < cell_units);
}

TEST_CASE("salt-pepper noise does not improve heatmap fits") {
  const BaseShapeSet& bases = testutil::chair();
  SamplerConfig clean_cfg;
  clean_cfg.seed = 43;
  const std::vector<SynthSample> data = generate_dataset(clean_cfg, bases, 10);
  double clean_total = 0.0, noisy_total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    FitConfig fc;
    fc.restarts = 4;
    fc.max_iters = 200;
    fc.seed = derive_seed(43, i);
    const FitResult clean = fit_from_heatmaps(data[i].heatmaps, bases, fc);
    Rng rng = make_rng(derive_seed(44, i));
    const HeatmapStack noisy = corrupt_salt_pepper(data[i].heatmaps, 0.3, rng);
    const FitResult rough = fit_from_heatmaps(noisy, bases, fc);
    clean_total += rmse_between(clean.s_hat, data[i].s_true, bases);
    noisy_total += rmse_between(rough.s_hat, data[i].s_true, bases);
  }
  CHECK(noisy_total >= clean_total);
  MESSAGE("mean clean rmse ", clean_total / data.size(), ", p=0.3 rmse ",
          noisy_total / data.size());
}

TEST_CASE("all-zero heatmaps are handled without crashing") {
  const BaseShapeSet& bases = testutil::chair();
  const HeatmapStack h(bases.num_keypoints(), 30, 40);
  FitConfig cfg;
  cfg.restarts = 2;
  cfg.max_iters = 50;
  const FitResult r = fit_from_heatmaps(h, bases, cfg);
  CHECK(std::isfinite(r.final_cost));
  CHECK(r.s_hat.size() == param_vector_size(bases.num_bases()));
}

TEST_CASE("fewer than four visible keypoints is a degenerate input") {
  const BaseShapeSet& bases = testutil::chair();
  Keypoints2D x = Keypoints2D::all_visible(Eigen::Matrix2Xd::Zero(2, 10));
  for (int i = 3; i < 10; ++i) x.visible[i] = 0;
  CHECK_THROWS_AS(fit_parallel_init(x, bases), DegenerateInputError);
}

TEST_CASE("plain gradient descent also reduces the cost") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(45);
  const ParamVector s = testutil::random_params(bases, rng, 0.0, 0.3);
  const Keypoints2D x = project_skeleton(s, bases);
  ParamVector init = s;
  init.values[0] += 0.2;
  init.values[init.size() - 7] += 0.1;
  const double init_cost = reprojection_cost(init, x, bases);
  FitConfig cfg;
  cfg.restarts = 1;
  cfg.plain_gd = true;
  cfg.max_iters = 300;
  const FitResult r = fit_perspective(x, bases, init, cfg);
  CHECK(r.final_cost < init_cost);
}

}  // TEST_SUITE
