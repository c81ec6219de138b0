#pragma once

#include <string>

#include "wirefit/camera.hpp"
#include "wirefit/rng.hpp"
#include "wirefit/skeleton.hpp"

namespace testutil {

inline std::string models_dir() { return WIREFIT_MODELS_DIR; }
inline std::string chair_path() { return models_dir() + "/chair.json"; }
inline std::string car_path() { return models_dir() + "/car.json"; }

inline const wirefit::BaseShapeSet& chair() {
  static const wirefit::BaseShapeSet bases = wirefit::load_base_shapes(chair_path());
  return bases;
}

// 4-keypoint tetrahedron with K-1 deformation bases; diagonal ~1.
inline wirefit::BaseShapeSet toy_bases(int num_bases) {
  wirefit::BaseShapeSet set;
  set.spec.category = "toy";
  set.spec.keypoint_names = {"a", "b", "c", "d"};
  set.spec.edges = {{0, 1}, {0, 2}, {0, 3}, {1, 2}};
  Eigen::Matrix3Xd mean(3, 4);
  mean << 0.0, 0.6, 0.0, 0.2,
          0.0, 0.0, 0.6, 0.2,
          0.0, 0.1, 0.2, 0.5;
  set.bases.push_back(mean);
  for (int k = 1; k < num_bases; ++k) {
    Eigen::Matrix3Xd b = Eigen::Matrix3Xd::Zero(3, 4);
    b(k % 3, 0) = 0.1 + 0.05 * k;
    b((k + 1) % 3, 1) = -0.08;
    b((k + 2) % 3, 3) = 0.12;
    set.bases.push_back(b);
  }
  set.validate();
  return set;
}

// All-z-zero bases: the depth reflection of any view reprojects identically
// under parallel projection.
inline wirefit::BaseShapeSet planar_bases() {
  wirefit::BaseShapeSet set;
  set.spec.category = "planar";
  set.spec.keypoint_names = {"a", "b", "c", "d", "e"};
  set.spec.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  Eigen::Matrix3Xd mean(3, 5);
  mean << 0.0, 0.5, 0.9, 0.2, 0.7,
          0.0, 0.1, 0.5, 0.8, 0.9,
          0.0, 0.0, 0.0, 0.0, 0.0;
  Eigen::Matrix3Xd def = Eigen::Matrix3Xd::Zero(3, 5);
  def(0, 1) = 0.15;
  def(1, 3) = -0.2;
  set.bases = {mean, def};
  set.validate();
  return set;
}

template <typename A, typename B>
bool same_matrix(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

inline double uniform(wirefit::Rng& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  return lo + (hi - lo) * u;
}

// In-range random ParamVector for a K-basis model; inv_f in [lo, hi].
inline wirefit::ParamVector random_params(const wirefit::BaseShapeSet& bases,
                                          wirefit::Rng& rng, double invf_lo = 0.0,
                                          double invf_hi = 0.8) {
  const int k = bases.num_bases();
  Eigen::VectorXd v(wirefit::param_vector_size(k));
  for (int i = 0; i < k - 1; ++i) v[i] = uniform(rng, -1.0, 1.0);
  v[k - 1] = uniform(rng, 0.0, 6.2831853);             // azimuth
  v[k] = uniform(rng, -0.5235987, 1.0471975);          // elevation
  v[k + 1] = uniform(rng, -0.2617993, 0.2617993);      // tilt
  v[k + 2] = uniform(rng, -0.2, 0.2);                  // t_x
  v[k + 3] = uniform(rng, -0.2, 0.2);                  // t_y
  v[k + 4] = uniform(rng, -0.2, 0.2);                  // t_z
  v[k + 5] = uniform(rng, invf_lo, invf_hi);           // inv_f
  return wirefit::ParamVector{v};
}

}  // namespace testutil
