#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wirefit/skeleton.hpp"

namespace wirefit {

// Denominator guard for the projective division.
inline constexpr double kDepthEpsilon = 1e-6;

// Viewpoint parameters. R = R_tilt(z) * R_elevation(x) * R_azimuth(y);
// t is applied in the camera frame after rotation; inv_f = 0 is parallel
// projection.
struct CameraParams {
  double azimuth = 0.0;    // radians, wrapped to [0, 2*pi)
  double elevation = 0.0;  // radians
  double tilt = 0.0;       // radians
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double inv_f = 0.0;      // inverse focal length, >= 0
};

inline int param_vector_size(int num_bases) { return num_bases + 6; }

// Flattened parameter set estimated from an image:
// [alpha_free (K-1), azimuth, elevation, tilt, t_x, t_y, t_z, inv_f].
// The layout is a stable contract shared with the fit and net modules and
// with the weights file format.
struct ParamVector {
  Eigen::VectorXd values;

  ParamVector() = default;
  explicit ParamVector(Eigen::VectorXd v) : values(std::move(v)) {}

  int size() const { return static_cast<int>(values.size()); }
  int num_alpha_free() const { return size() - 7; }

  double& alpha_free(int i) { return values[i]; }
  double alpha_free(int i) const { return values[i]; }
  double& azimuth() { return values[size() - 7]; }
  double azimuth() const { return values[size() - 7]; }
  double& elevation() { return values[size() - 6]; }
  double elevation() const { return values[size() - 6]; }
  double& tilt() { return values[size() - 5]; }
  double tilt() const { return values[size() - 5]; }
  double& t(int i) { return values[size() - 4 + i]; }
  double t(int i) const { return values[size() - 4 + i]; }
  double& inv_f() { return values[size() - 1]; }
  double inv_f() const { return values[size() - 1]; }

  static ParamVector encode(const StructuralParams& sp, const CameraParams& cam);

  // Splits into structural and camera parameters. Azimuth is wrapped to
  // [0, 2*pi) and inv_f is clamped to >= 0.
  std::pair<StructuralParams, CameraParams> decode() const;
};

// 2D keypoints in normalized image units.
struct Keypoints2D {
  Eigen::Matrix2Xd coords;
  std::vector<char> visible;  // 1 = visible

  int count() const { return static_cast<int>(coords.cols()); }
  int visible_count() const;

  static Keypoints2D all_visible(Eigen::Matrix2Xd c);
};

Eigen::Matrix3d rotation_matrix(const CameraParams& cam);

// Recovers (azimuth, elevation, tilt) from an orthonormal R with our
// convention; valid away from |elevation| = pi/2.
void euler_angles_from_rotation(const Eigen::Matrix3d& rot, double& azimuth,
                                double& elevation, double& tilt);

// Projects a camera-frame point: x = (y1, y2) / (inv_f * y3 + 1).
// Throws DepthSingularityError when the denominator <= kDepthEpsilon.
Eigen::Vector2d project_point(const Eigen::Vector3d& camera_frame_point,
                              const CameraParams& cam);

// Projects an arbitrary object-frame shape under cam (used for perturbed
// ground-truth shapes that are not expressible in the basis).
Keypoints2D project_shape(const Shape3D& shape, const CameraParams& cam);

// X = P(R * compose(alpha) + T); all keypoints marked visible.
Keypoints2D project_skeleton(const ParamVector& s, const BaseShapeSet& bases);

// Non-throwing variant; returns false and the offending keypoint index when
// a point fails the depth precondition.
bool try_project_skeleton(const ParamVector& s, const BaseShapeSet& bases,
                          Keypoints2D& out, int& bad_keypoint);

// Analytic (2N) x |S| Jacobian of the flattened projection with respect to
// the ParamVector, row order (x1_0, x2_0, x1_1, ...).
Eigen::MatrixXd projection_jacobian(const ParamVector& s, const BaseShapeSet& bases);

double wrap_angle_2pi(double radians);

}  // namespace wirefit
