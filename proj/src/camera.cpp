#include "wirefit/camera.hpp"

#include <cmath>

namespace wirefit {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Eigen::Matrix3d rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Eigen::Matrix3d rot_x(double e) {
  const double c = std::cos(e), s = std::sin(e);
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Eigen::Matrix3d rot_z(double t) {
  const double c = std::cos(t), s = std::sin(t);
  Eigen::Matrix3d m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Eigen::Matrix3d drot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return m;
}

Eigen::Matrix3d drot_x(double e) {
  const double c = std::cos(e), s = std::sin(e);
  Eigen::Matrix3d m;
  m << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return m;
}

Eigen::Matrix3d drot_z(double t) {
  const double c = std::cos(t), s = std::sin(t);
  Eigen::Matrix3d m;
  m << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return m;
}

}  // namespace

double wrap_angle_2pi(double radians) {
  double r = std::fmod(radians, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

ParamVector ParamVector::encode(const StructuralParams& sp, const CameraParams& cam) {
  const int k = static_cast<int>(sp.alpha.size());
  if (k < 1) throw DimensionError("encode: alpha must have at least the pinned weight");
  Eigen::VectorXd v(param_vector_size(k));
  for (int i = 1; i < k; ++i) v[i - 1] = sp.alpha[i];
  v[k - 1] = cam.azimuth;
  v[k] = cam.elevation;
  v[k + 1] = cam.tilt;
  v.segment<3>(k + 2) = cam.t;
  v[k + 5] = cam.inv_f;
  return ParamVector(std::move(v));
}

std::pair<StructuralParams, CameraParams> ParamVector::decode() const {
  if (size() < 7) throw DimensionError("ParamVector too short: " + std::to_string(size()));
  StructuralParams sp;
  sp.alpha.resize(num_alpha_free() + 1);
  sp.alpha[0] = 1.0;
  for (int i = 0; i < num_alpha_free(); ++i) sp.alpha[i + 1] = alpha_free(i);
  CameraParams cam;
  cam.azimuth = wrap_angle_2pi(azimuth());
  cam.elevation = elevation();
  cam.tilt = tilt();
  cam.t = Eigen::Vector3d(t(0), t(1), t(2));
  cam.inv_f = std::max(0.0, inv_f());
  return {std::move(sp), cam};
}

int Keypoints2D::visible_count() const {
  int n = 0;
  for (const char v : visible) n += (v != 0);
  return n;
}

Keypoints2D Keypoints2D::all_visible(Eigen::Matrix2Xd c) {
  Keypoints2D out;
  out.visible.assign(static_cast<std::size_t>(c.cols()), 1);
  out.coords = std::move(c);
  return out;
}

Eigen::Matrix3d rotation_matrix(const CameraParams& cam) {
  return rot_z(cam.tilt) * rot_x(cam.elevation) * rot_y(cam.azimuth);
}

void euler_angles_from_rotation(const Eigen::Matrix3d& rot, double& azimuth,
                                double& elevation, double& tilt) {
  elevation = std::asin(std::clamp(rot(2, 1), -1.0, 1.0));
  azimuth = std::atan2(-rot(2, 0), rot(2, 2));
  tilt = std::atan2(-rot(0, 1), rot(1, 1));
}

Eigen::Vector2d project_point(const Eigen::Vector3d& camera_frame_point,
                              const CameraParams& cam) {
  const double denom = cam.inv_f * camera_frame_point[2] + 1.0;
  if (denom <= kDepthEpsilon) throw DepthSingularityError(-1);
  return camera_frame_point.head<2>() / denom;
}

Keypoints2D project_shape(const Shape3D& shape, const CameraParams& cam) {
  const Eigen::Matrix3d rot = rotation_matrix(cam);
  const int n = static_cast<int>(shape.coords.cols());
  Eigen::Matrix2Xd coords(2, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d p = rot * shape.coords.col(i) + cam.t;
    const double denom = cam.inv_f * p[2] + 1.0;
    if (denom <= kDepthEpsilon) throw DepthSingularityError(i);
    coords.col(i) = p.head<2>() / denom;
  }
  return Keypoints2D::all_visible(std::move(coords));
}

Keypoints2D project_skeleton(const ParamVector& s, const BaseShapeSet& bases) {
  auto [sp, cam] = s.decode();
  return project_shape(compose_skeleton(sp, bases), cam);
}

bool try_project_skeleton(const ParamVector& s, const BaseShapeSet& bases,
                          Keypoints2D& out, int& bad_keypoint) {
  try {
    out = project_skeleton(s, bases);
    return true;
  } catch (const DepthSingularityError& e) {
    bad_keypoint = e.keypoint_index;
    return false;
  }
}

Eigen::MatrixXd projection_jacobian(const ParamVector& s, const BaseShapeSet& bases) {
  auto [sp, cam] = s.decode();
  if (sp.alpha.size() != bases.num_bases()) {
    throw DimensionError("ParamVector size " + std::to_string(s.size()) +
                         " does not match " + std::to_string(bases.num_bases()) + " bases");
  }
  const Shape3D shape = compose_skeleton(sp, bases);
  const int n = bases.num_keypoints();
  const int kfree = s.num_alpha_free();
  const int cols = s.size();

  const Eigen::Matrix3d ry = rot_y(cam.azimuth);
  const Eigen::Matrix3d rx = rot_x(cam.elevation);
  const Eigen::Matrix3d rz = rot_z(cam.tilt);
  const Eigen::Matrix3d rot = rz * rx * ry;
  const Eigen::Matrix3d drot_az = rz * rx * drot_y(cam.azimuth);
  const Eigen::Matrix3d drot_el = rz * drot_x(cam.elevation) * ry;
  const Eigen::Matrix3d drot_tl = drot_z(cam.tilt) * rx * ry;
  // decode clamps inv_f at 0, so for negative raw values the projection is
  // constant in that coordinate.
  const bool inv_f_clamped = s.inv_f() < 0.0;

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * n, cols);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d y = shape.coords.col(i);
    const Eigen::Vector3d p = rot * y + cam.t;
    const double denom = cam.inv_f * p[2] + 1.0;
    if (denom <= kDepthEpsilon) throw DepthSingularityError(i);

    Eigen::Matrix<double, 2, 3> dx_dp;
    dx_dp << 1.0 / denom, 0.0, -cam.inv_f * p[0] / (denom * denom),
             0.0, 1.0 / denom, -cam.inv_f * p[1] / (denom * denom);

    for (int k = 0; k < kfree; ++k) {
      jac.block<2, 1>(2 * i, k) = dx_dp * (rot * bases.bases[k + 1].col(i));
    }
    jac.block<2, 1>(2 * i, kfree) = dx_dp * (drot_az * y);
    jac.block<2, 1>(2 * i, kfree + 1) = dx_dp * (drot_el * y);
    jac.block<2, 1>(2 * i, kfree + 2) = dx_dp * (drot_tl * y);
    jac.block<2, 3>(2 * i, kfree + 3) = dx_dp;
    if (!inv_f_clamped) {
      jac(2 * i, cols - 1) = -p[0] * p[2] / (denom * denom);
      jac(2 * i + 1, cols - 1) = -p[1] * p[2] / (denom * denom);
    }
  }
  return jac;
}

}  // namespace wirefit
