#pragma once

#include <cstdint>
#include <vector>

#include "wirefit/synth.hpp"

namespace wirefit {

struct FitConfig {
  int restarts = 8;
  int max_iters = 500;
  double lambda_init = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double tol_cost_rel = 1e-10;
  double tol_grad = 1e-9;
  bool freeze_inv_f = false;  // keep inv_f fixed at its initial value
  bool plain_gd = false;      // gradient-descent ablation instead of LM
  double gd_step = 0.05;
  std::uint64_t seed = 0;
};

struct FitResult {
  ParamVector s_hat;
  double final_cost = 0.0;
  bool converged = false;
  int restarts_used = 0;
  int iterations = 0;                 // iterations of the winning restart
  std::vector<double> restart_costs;  // best cost per restart trajectory
};

// Mean over visible keypoints of the squared distance between the projected
// skeleton and x_obs; +inf when the depth precondition fails.
double reprojection_cost(const ParamVector& s, const Keypoints2D& x_obs,
                         const BaseShapeSet& bases);

// Parallel-projection (inv_f = 0) initial guess: alternates closed-form
// least squares on (alpha, t_xy) with LM steps on the rotation, from a
// deterministic grid of viewpoint starts. Returns the lower-cost candidate;
// its depth reflection is the second entry of parallel_init_candidates.
ParamVector fit_parallel_init(const Keypoints2D& x_obs, const BaseShapeSet& bases,
                              std::uint64_t seed = 0);

// Both parallel solutions: the optimized one and its depth-reflected twin
// (azimuth and elevation negated, t_z negated), each locally re-optimized.
std::vector<ParamVector> parallel_init_candidates(const Keypoints2D& x_obs,
                                                  const BaseShapeSet& bases,
                                                  std::uint64_t seed = 0);

// LM (or plain GD) descent on the full ParamVector with inv_f projected onto
// [0, inf) after each step; best over cfg.restarts trajectories (the init
// plus jittered copies).
FitResult fit_perspective(const Keypoints2D& x_obs, const BaseShapeSet& bases,
                          const ParamVector& init, const FitConfig& cfg);

// Parallel init (both depth candidates) followed by perspective refinement.
FitResult fit_keypoints(const Keypoints2D& x_obs, const BaseShapeSet& bases,
                        const FitConfig& cfg);

// argmax_keypoints, then fit_keypoints.
FitResult fit_from_heatmaps(const HeatmapStack& h, const BaseShapeSet& bases,
                            const FitConfig& cfg);

}  // namespace wirefit
