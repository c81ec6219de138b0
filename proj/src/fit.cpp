#include "wirefit/fit.hpp"

#include <cmath>
#include <limits>

namespace wirefit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

std::vector<int> visible_indices(const Keypoints2D& x_obs) {
  std::vector<int> idx;
  for (int i = 0; i < x_obs.count(); ++i) {
    if (x_obs.visible[i]) idx.push_back(i);
  }
  return idx;
}

// Stacked residuals (x_hat - x_obs) over visible keypoints; false on a depth
// singularity.
bool residuals(const ParamVector& s, const Keypoints2D& x_obs, const BaseShapeSet& bases,
               const std::vector<int>& vis, Eigen::VectorXd& r) {
  Keypoints2D x_hat;
  int bad = 0;
  if (!try_project_skeleton(s, bases, x_hat, bad)) return false;
  r.resize(2 * static_cast<int>(vis.size()));
  for (std::size_t k = 0; k < vis.size(); ++k) {
    r[2 * k] = x_hat.coords(0, vis[k]) - x_obs.coords(0, vis[k]);
    r[2 * k + 1] = x_hat.coords(1, vis[k]) - x_obs.coords(1, vis[k]);
  }
  return true;
}

// Rows of the projection Jacobian for visible keypoints, restricted to the
// free parameter columns.
Eigen::MatrixXd visible_jacobian(const ParamVector& s, const BaseShapeSet& bases,
                                 const std::vector<int>& vis,
                                 const std::vector<int>& free_cols) {
  const Eigen::MatrixXd full = projection_jacobian(s, bases);
  Eigen::MatrixXd jac(2 * static_cast<int>(vis.size()),
                      static_cast<int>(free_cols.size()));
  for (std::size_t k = 0; k < vis.size(); ++k) {
    for (std::size_t c = 0; c < free_cols.size(); ++c) {
      jac(2 * k, c) = full(2 * vis[k], free_cols[c]);
      jac(2 * k + 1, c) = full(2 * vis[k] + 1, free_cols[c]);
    }
  }
  return jac;
}

struct DescentResult {
  ParamVector s;
  double cost = kInf;
  bool converged = false;
  int iterations = 0;
};

void clamp_inv_f(ParamVector& s, bool frozen) {
  if (!frozen && s.inv_f() < 0.0) s.inv_f() = 0.0;
}

// LM on the free columns; accepted steps never increase the cost.
DescentResult lm_descent(const Keypoints2D& x_obs, const BaseShapeSet& bases,
                         const ParamVector& init, const std::vector<int>& free_cols,
                         const FitConfig& cfg) {
  const std::vector<int> vis = visible_indices(x_obs);
  const double inv_count = 1.0 / static_cast<double>(vis.size());
  const bool inv_f_free =
      !free_cols.empty() && free_cols.back() == init.size() - 1 && !cfg.freeze_inv_f;

  DescentResult res;
  res.s = init;
  Eigen::VectorXd r;
  if (!residuals(res.s, x_obs, bases, vis, r)) return res;
  res.cost = r.squaredNorm() * inv_count;

  double lambda = cfg.lambda_init;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    res.iterations = iter + 1;
    Eigen::MatrixXd jac;
    try {
      jac = visible_jacobian(res.s, bases, vis, free_cols);
    } catch (const DepthSingularityError&) {
      break;
    }
    const Eigen::VectorXd grad = 2.0 * inv_count * (jac.transpose() * r);
    if (grad.lpNorm<Eigen::Infinity>() < cfg.tol_grad) {
      res.converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;

    bool accepted = false;
    while (lambda <= 1e12) {
      Eigen::MatrixXd damped = jtj;
      for (int d = 0; d < damped.rows(); ++d) {
        damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      }
      const Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      ParamVector trial = res.s;
      for (std::size_t c = 0; c < free_cols.size(); ++c) {
        trial.values[free_cols[c]] += delta[static_cast<int>(c)];
      }
      clamp_inv_f(trial, !inv_f_free);
      Eigen::VectorXd r_trial;
      if (residuals(trial, x_obs, bases, vis, r_trial)) {
        const double cost_trial = r_trial.squaredNorm() * inv_count;
        if (cost_trial < res.cost) {
          const double rel_drop = (res.cost - cost_trial) / std::max(res.cost, 1e-300);
          res.s = std::move(trial);
          r = std::move(r_trial);
          res.cost = cost_trial;
          lambda = std::max(lambda * cfg.lambda_down, 1e-12);
          accepted = true;
          if (rel_drop < cfg.tol_cost_rel) res.converged = true;
          break;
        }
      }
      lambda *= cfg.lambda_up;
    }
    if (!accepted || res.converged) break;
  }
  return res;
}

// Fixed-step gradient descent with step halving, for the ablation flag.
DescentResult gd_descent(const Keypoints2D& x_obs, const BaseShapeSet& bases,
                         const ParamVector& init, const std::vector<int>& free_cols,
                         const FitConfig& cfg) {
  const std::vector<int> vis = visible_indices(x_obs);
  const double inv_count = 1.0 / static_cast<double>(vis.size());
  const bool inv_f_free =
      !free_cols.empty() && free_cols.back() == init.size() - 1 && !cfg.freeze_inv_f;

  DescentResult res;
  res.s = init;
  Eigen::VectorXd r;
  if (!residuals(res.s, x_obs, bases, vis, r)) return res;
  res.cost = r.squaredNorm() * inv_count;

  double step = cfg.gd_step;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    res.iterations = iter + 1;
    Eigen::MatrixXd jac;
    try {
      jac = visible_jacobian(res.s, bases, vis, free_cols);
    } catch (const DepthSingularityError&) {
      break;
    }
    const Eigen::VectorXd grad = 2.0 * inv_count * (jac.transpose() * r);
    if (grad.lpNorm<Eigen::Infinity>() < cfg.tol_grad) {
      res.converged = true;
      break;
    }
    bool accepted = false;
    while (step > 1e-12) {
      ParamVector trial = res.s;
      for (std::size_t c = 0; c < free_cols.size(); ++c) {
        trial.values[free_cols[c]] -= step * grad[static_cast<int>(c)];
      }
      clamp_inv_f(trial, !inv_f_free);
      Eigen::VectorXd r_trial;
      if (residuals(trial, x_obs, bases, vis, r_trial)) {
        const double cost_trial = r_trial.squaredNorm() * inv_count;
        if (cost_trial < res.cost) {
          const double rel_drop = (res.cost - cost_trial) / std::max(res.cost, 1e-300);
          res.s = std::move(trial);
          r = std::move(r_trial);
          res.cost = cost_trial;
          accepted = true;
          if (rel_drop < cfg.tol_cost_rel) res.converged = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted || res.converged) break;
  }
  return res;
}

DescentResult descend(const Keypoints2D& x_obs, const BaseShapeSet& bases,
                      const ParamVector& init, const std::vector<int>& free_cols,
                      const FitConfig& cfg) {
  return cfg.plain_gd ? gd_descent(x_obs, bases, init, free_cols, cfg)
                      : lm_descent(x_obs, bases, init, free_cols, cfg);
}

std::vector<int> all_columns(int size, bool freeze_inv_f) {
  std::vector<int> cols;
  for (int c = 0; c < size - (freeze_inv_f ? 1 : 0); ++c) cols.push_back(c);
  return cols;
}

// Closed-form least squares on alpha_free given the viewpoint, under
// parallel projection.
void solve_alpha_parallel(ParamVector& s, const Keypoints2D& x_obs,
                          const BaseShapeSet& bases, const std::vector<int>& vis) {
  const int kfree = s.num_alpha_free();
  if (kfree == 0) return;
  auto [sp, cam] = s.decode();
  const Eigen::Matrix3d rot = rotation_matrix(cam);
  Eigen::MatrixXd a(2 * static_cast<int>(vis.size()), kfree);
  Eigen::VectorXd b(2 * static_cast<int>(vis.size()));
  for (std::size_t row = 0; row < vis.size(); ++row) {
    const int i = vis[row];
    const Eigen::Vector3d base = rot * bases.bases[0].col(i) + cam.t;
    b[2 * row] = x_obs.coords(0, i) - base[0];
    b[2 * row + 1] = x_obs.coords(1, i) - base[1];
    for (int k = 0; k < kfree; ++k) {
      const Eigen::Vector3d dir = rot * bases.bases[k + 1].col(i);
      a(2 * row, k) = dir[0];
      a(2 * row + 1, k) = dir[1];
    }
  }
  const Eigen::VectorXd alpha = a.colPivHouseholderQr().solve(b);
  for (int k = 0; k < kfree; ++k) s.alpha_free(k) = alpha[k];
}

// Alternates the closed-form alpha solve with LM over (angles, t_x, t_y),
// inv_f and t_z pinned at 0.
ParamVector refine_parallel(const Keypoints2D& x_obs, const BaseShapeSet& bases,
                            ParamVector s, const FitConfig& cfg) {
  const std::vector<int> vis = visible_indices(x_obs);
  const int kfree = s.num_alpha_free();
  std::vector<int> viewpoint_cols{kfree, kfree + 1, kfree + 2, kfree + 3, kfree + 4};
  FitConfig inner = cfg;
  inner.max_iters = 40;
  double prev_cost = kInf;
  for (int round = 0; round < 40; ++round) {
    solve_alpha_parallel(s, x_obs, bases, vis);
    DescentResult r = lm_descent(x_obs, bases, s, viewpoint_cols, inner);
    s = r.s;
    if (prev_cost - r.cost < 1e-14) break;
    prev_cost = r.cost;
  }
  solve_alpha_parallel(s, x_obs, bases, vis);
  return s;
}

ParamVector make_parallel_start(int kfree, double azimuth, double elevation) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kfree + 7);
  v[kfree] = azimuth;
  v[kfree + 1] = elevation;
  return ParamVector(std::move(v));
}

}  // namespace

double reprojection_cost(const ParamVector& s, const Keypoints2D& x_obs,
                         const BaseShapeSet& bases) {
  Keypoints2D x_hat;
  int bad = 0;
  if (!try_project_skeleton(s, bases, x_hat, bad)) return kInf;
  double sum = 0.0;
  int n = 0;
  for (int i = 0; i < x_obs.count(); ++i) {
    if (!x_obs.visible[i]) continue;
    sum += (x_hat.coords.col(i) - x_obs.coords.col(i)).squaredNorm();
    ++n;
  }
  if (n == 0) throw DegenerateInputError("reprojection_cost: no visible keypoints");
  return sum / n;
}

ParamVector fit_parallel_init(const Keypoints2D& x_obs, const BaseShapeSet& bases,
                              std::uint64_t seed) {
  if (x_obs.visible_count() < 4) {
    throw DegenerateInputError("parallel init needs at least 4 visible keypoints, got " +
                               std::to_string(x_obs.visible_count()));
  }
  FitConfig cfg;
  cfg.seed = seed;
  const int kfree = bases.num_bases() - 1;
  ParamVector best;
  double best_cost = kInf;
  for (int ai = 0; ai < 8; ++ai) {
    for (const double el : {0.0, 0.6}) {
      const double az = ai * (6.283185307179586 / 8.0);
      ParamVector s = refine_parallel(x_obs, bases, make_parallel_start(kfree, az, el), cfg);
      const double cost = reprojection_cost(s, x_obs, bases);
      if (cost < best_cost) {
        best_cost = cost;
        best = std::move(s);
      }
    }
  }
  return best;
}

std::vector<ParamVector> parallel_init_candidates(const Keypoints2D& x_obs,
                                                  const BaseShapeSet& bases,
                                                  std::uint64_t seed) {
  ParamVector first = fit_parallel_init(x_obs, bases, seed);
  ParamVector mirrored = first;
  mirrored.azimuth() = -first.azimuth();
  mirrored.elevation() = -first.elevation();
  mirrored.t(2) = -first.t(2);
  FitConfig cfg;
  cfg.seed = seed;
  mirrored = refine_parallel(x_obs, bases, std::move(mirrored), cfg);
  std::vector<ParamVector> out;
  out.push_back(std::move(first));
  out.push_back(std::move(mirrored));
  return out;
}

FitResult fit_perspective(const Keypoints2D& x_obs, const BaseShapeSet& bases,
                          const ParamVector& init, const FitConfig& cfg) {
  if (cfg.restarts < 1 || cfg.max_iters < 1) {
    throw Error("fit config: restarts and max_iters must be >= 1");
  }
  if (x_obs.visible_count() == 0) {
    throw DegenerateInputError("fit_perspective: no visible keypoints");
  }
  const std::vector<int> cols = all_columns(init.size(), cfg.freeze_inv_f);

  FitResult out;
  out.restart_costs.reserve(cfg.restarts);
  for (int restart = 0; restart < cfg.restarts; ++restart) {
    ParamVector start = init;
    if (restart > 0) {
      Rng rng = make_rng(cfg.seed, restart);
      const int kfree = start.num_alpha_free();
      for (int i = 0; i < kfree; ++i) start.values[i] += 0.2 * (uniform01(rng) - 0.5);
      for (int i = kfree; i < kfree + 3; ++i) {
        start.values[i] += 0.3 * (uniform01(rng) - 0.5);
      }
      for (int i = kfree + 3; i < kfree + 6; ++i) {
        start.values[i] += 0.1 * (uniform01(rng) - 0.5);
      }
      if (!cfg.freeze_inv_f) {
        start.inv_f() = std::max(0.0, start.inv_f() + 0.1 * (uniform01(rng) - 0.5));
      }
    }
    DescentResult r = descend(x_obs, bases, start, cols, cfg);
    out.restart_costs.push_back(r.cost);
    ++out.restarts_used;
    if (r.cost < out.final_cost || out.restart_costs.size() == 1) {
      out.s_hat = std::move(r.s);
      out.final_cost = r.cost;
      out.converged = r.converged;
      out.iterations = r.iterations;
    }
  }
  return out;
}

FitResult fit_keypoints(const Keypoints2D& x_obs, const BaseShapeSet& bases,
                        const FitConfig& cfg) {
  const std::vector<ParamVector> candidates = parallel_init_candidates(x_obs, bases, cfg.seed);
  std::vector<FitResult> results;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    FitConfig sub = cfg;
    sub.restarts = std::max(1, cfg.restarts / static_cast<int>(candidates.size()));
    sub.seed = derive_seed(cfg.seed, 1000 + c);
    results.push_back(fit_perspective(x_obs, bases, candidates[c], sub));
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < results.size(); ++c) {
    if (results[c].final_cost < results[best].final_cost) best = c;
  }
  FitResult out = results[best];
  out.restart_costs.clear();
  for (const auto& r : results) {
    out.restart_costs.insert(out.restart_costs.end(), r.restart_costs.begin(),
                             r.restart_costs.end());
  }
  out.restarts_used = static_cast<int>(out.restart_costs.size());
  return out;
}

FitResult fit_from_heatmaps(const HeatmapStack& h, const BaseShapeSet& bases,
                            const FitConfig& cfg) {
  return fit_keypoints(argmax_keypoints(h), bases, cfg);
}

}  // namespace wirefit
