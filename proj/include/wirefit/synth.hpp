#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wirefit/camera.hpp"
#include "wirefit/rng.hpp"

namespace wirefit {

// N single-channel heatmaps, channel-major then row-major, values in [0, 1].
// Cells are square with side 2/width in normalized image units; the grid is
// centered on the origin, so x spans [-1, 1] and y spans [-h/w, h/w].
struct HeatmapStack {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  HeatmapStack() = default;
  HeatmapStack(int n, int h, int w)
      : channels(n), height(h), width(w), data(static_cast<std::size_t>(n) * h * w, 0.0f) {}

  float& at(int channel, int row, int col) {
    return data[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }
  float at(int channel, int row, int col) const {
    return data[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }
  std::size_t cell_count() const { return data.size(); }

  double cell_size() const { return 2.0 / width; }
  // Center of cell (row, col) in normalized image units.
  std::pair<double, double> cell_center(int row, int col) const;
  // Continuous cell coordinates (u along columns, v along rows) of a
  // normalized-unit point; cell (r, c) center maps to (c, r).
  std::pair<double, double> to_cell_coords(double x, double y) const;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SamplerConfig {
  Range alpha{-1.0, 1.0};
  Range azimuth{0.0, 6.283185307179586476925286766559};  // [0, 2*pi)
  Range elevation{-0.52359877559829887308, 1.0471975511965977462};  // [-pi/6, pi/3]
  Range tilt{-0.26179938779914943654, 0.26179938779914943654};      // [-pi/12, pi/12]
  Range t_x{-0.2, 0.2};
  Range t_y{-0.2, 0.2};
  Range t_z{-0.2, 0.2};
  Range inv_f{0.0, 0.8};
  double perturbation_ratio = 0.01;  // Gaussian std as a fraction of diagonal length
  double heatmap_sigma = 1.5;        // blob width in cells
  double noise_level = 0.0;          // salt-and-pepper probability baked into heatmaps
  int heatmap_height = 30;
  int heatmap_width = 40;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthSample {
  HeatmapStack heatmaps;
  ParamVector s_true;
  Shape3D y_true;      // post-perturbation, object frame
  Keypoints2D x_true;  // projection of y_true under s_true's camera
};

// Uniform draw per component; rejection-samples (up to 100 tries) until the
// composed skeleton satisfies the depth precondition.
ParamVector sample_params(const SamplerConfig& cfg, const BaseShapeSet& bases, Rng& rng);

// Adds i.i.d. zero-mean Gaussian offsets with std = rho * diagonal_length(y).
Shape3D perturb_shape(const Shape3D& y, double rho, Rng& rng);

// Channel i holds exp(-d^2 / (2 sigma^2)) with d the distance in cell units
// from each cell center to keypoint i. Out-of-view keypoints give an
// all-near-zero channel.
HeatmapStack render_heatmaps(const Keypoints2D& x, double sigma, int height, int width);

// Each cell independently is set to 0 or 1 (probability p/2 each).
HeatmapStack corrupt_salt_pepper(const HeatmapStack& h, double p, Rng& rng);

// Per-channel argmax cell center mapped back to normalized units; ties break
// to the lowest row-major index.
Keypoints2D argmax_keypoints(const HeatmapStack& h);

// The sample at a given index is a pure function of (cfg, bases, index).
SynthSample generate_sample(const SamplerConfig& cfg, const BaseShapeSet& bases,
                            std::uint64_t index);

std::vector<SynthSample> generate_dataset(const SamplerConfig& cfg, const BaseShapeSet& bases,
                                          int count, int threads = 1);

}  // namespace wirefit
