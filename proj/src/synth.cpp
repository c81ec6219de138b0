#include "wirefit/synth.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace wirefit {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Distributions are hand-rolled so sampled bytes depend only on the rng
// stream, not on the standard library build.
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

double uniform_in(const Range& r, Rng& rng) {
  return r.lo + uniform01(rng) * (r.hi - r.lo);
}

double gaussian(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps the log finite
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

void require_range(const Range& r, const char* name) {
  if (!(r.lo <= r.hi)) {
    throw Error(std::string("sampler config: empty range for ") + name);
  }
}

}  // namespace

std::pair<double, double> HeatmapStack::cell_center(int row, int col) const {
  const double cell = cell_size();
  const double half_h = 0.5 * height * cell;
  return {-1.0 + (col + 0.5) * cell, -half_h + (row + 0.5) * cell};
}

std::pair<double, double> HeatmapStack::to_cell_coords(double x, double y) const {
  const double cell = cell_size();
  const double half_h = 0.5 * height * cell;
  return {(x + 1.0) / cell - 0.5, (y + half_h) / cell - 0.5};
}

void SamplerConfig::validate() const {
  require_range(alpha, "alpha");
  require_range(azimuth, "azimuth");
  require_range(elevation, "elevation");
  require_range(tilt, "tilt");
  require_range(t_x, "t_x");
  require_range(t_y, "t_y");
  require_range(t_z, "t_z");
  require_range(inv_f, "inv_f");
  if (inv_f.lo < 0.0) throw Error("sampler config: inv_f range must be nonnegative");
  if (perturbation_ratio < 0.0) throw Error("sampler config: perturbation_ratio < 0");
  if (heatmap_sigma <= 0.0) throw Error("sampler config: heatmap_sigma must be positive");
  if (noise_level < 0.0 || noise_level > 1.0) {
    throw Error("sampler config: noise_level outside [0, 1]");
  }
  if (heatmap_height < 1 || heatmap_width < 1) {
    throw Error("sampler config: heatmap dimensions must be positive");
  }
}

ParamVector sample_params(const SamplerConfig& cfg, const BaseShapeSet& bases, Rng& rng) {
  cfg.validate();
  const int kfree = bases.num_bases() - 1;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::VectorXd v(param_vector_size(bases.num_bases()));
    for (int i = 0; i < kfree; ++i) v[i] = uniform_in(cfg.alpha, rng);
    v[kfree] = uniform_in(cfg.azimuth, rng);
    v[kfree + 1] = uniform_in(cfg.elevation, rng);
    v[kfree + 2] = uniform_in(cfg.tilt, rng);
    v[kfree + 3] = uniform_in(cfg.t_x, rng);
    v[kfree + 4] = uniform_in(cfg.t_y, rng);
    v[kfree + 5] = uniform_in(cfg.t_z, rng);
    v[kfree + 6] = uniform_in(cfg.inv_f, rng);
    ParamVector s(std::move(v));
    Keypoints2D unused;
    int bad = 0;
    if (try_project_skeleton(s, bases, unused, bad)) return s;
  }
  throw RejectionExhaustedError("no depth-valid parameter sample in 100 tries");
}

Shape3D perturb_shape(const Shape3D& y, double rho, Rng& rng) {
  if (rho < 0.0) throw Error("perturb_shape: negative ratio");
  if (rho == 0.0) return y;
  const double sigma = rho * diagonal_length(y);
  Shape3D out = y;
  for (int i = 0; i < out.coords.cols(); ++i) {
    for (int r = 0; r < 3; ++r) out.coords(r, i) += sigma * gaussian(rng);
  }
  return out;
}

HeatmapStack render_heatmaps(const Keypoints2D& x, double sigma, int height, int width) {
  if (sigma <= 0.0) throw Error("render_heatmaps: sigma must be positive");
  HeatmapStack h(x.count(), height, width);
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
  for (int ch = 0; ch < x.count(); ++ch) {
    if (!x.visible[ch]) continue;
    const auto [u, v] = h.to_cell_coords(x.coords(0, ch), x.coords(1, ch));
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double d_sq = (c - u) * (c - u) + (r - v) * (r - v);
        h.at(ch, r, c) = static_cast<float>(std::exp(-d_sq * inv_two_sigma_sq));
      }
    }
  }
  return h;
}

HeatmapStack corrupt_salt_pepper(const HeatmapStack& h, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw Error("corrupt_salt_pepper: p outside [0, 1]");
  HeatmapStack out = h;
  if (p == 0.0) return out;
  for (float& v : out.data) {
    const double u = uniform01(rng);
    if (u < p) v = (u < 0.5 * p) ? 0.0f : 1.0f;
  }
  return out;
}

Keypoints2D argmax_keypoints(const HeatmapStack& h) {
  if (h.channels < 1 || h.height < 1 || h.width < 1) {
    throw DimensionError("argmax_keypoints: empty heatmap stack");
  }
  Eigen::Matrix2Xd coords(2, h.channels);
  for (int ch = 0; ch < h.channels; ++ch) {
    int best_r = 0, best_c = 0;
    float best = h.at(ch, 0, 0);
    for (int r = 0; r < h.height; ++r) {
      for (int c = 0; c < h.width; ++c) {
        if (h.at(ch, r, c) > best) {
          best = h.at(ch, r, c);
          best_r = r;
          best_c = c;
        }
      }
    }
    const auto [cx, cy] = h.cell_center(best_r, best_c);
    coords(0, ch) = cx;
    coords(1, ch) = cy;
  }
  return Keypoints2D::all_visible(std::move(coords));
}

SynthSample generate_sample(const SamplerConfig& cfg, const BaseShapeSet& bases,
                            std::uint64_t index) {
  Rng rng = make_rng(cfg.seed, index);
  for (int attempt = 0; attempt < 100; ++attempt) {
    ParamVector s = sample_params(cfg, bases, rng);
    auto [sp, cam] = s.decode();
    const Shape3D y = perturb_shape(compose_skeleton(sp, bases), cfg.perturbation_ratio, rng);
    Keypoints2D x;
    try {
      x = project_shape(y, cam);
    } catch (const DepthSingularityError&) {
      continue;  // the perturbation pushed a point past the depth guard
    }
    SynthSample sample;
    sample.heatmaps = render_heatmaps(x, cfg.heatmap_sigma, cfg.heatmap_height,
                                      cfg.heatmap_width);
    if (cfg.noise_level > 0.0) {
      sample.heatmaps = corrupt_salt_pepper(sample.heatmaps, cfg.noise_level, rng);
    }
    sample.s_true = std::move(s);
    sample.y_true = std::move(y);
    sample.x_true = std::move(x);
    return sample;
  }
  throw RejectionExhaustedError("no projectable perturbed sample in 100 tries at index " +
                                std::to_string(index));
}

std::vector<SynthSample> generate_dataset(const SamplerConfig& cfg, const BaseShapeSet& bases,
                                          int count, int threads) {
  if (count < 1) throw Error("generate_dataset: count must be >= 1");
  cfg.validate();
  std::vector<SynthSample> out(static_cast<std::size_t>(count));
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) out[i] = generate_sample(cfg, bases, i);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      try {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          out[i] = generate_sample(cfg, bases, i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace wirefit
