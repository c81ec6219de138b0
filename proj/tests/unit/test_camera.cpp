#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "wirefit/camera.hpp"
#include "wirefit/errors.hpp"

using namespace wirefit;

namespace {

CameraParams random_cam(Rng& rng) {
  return CameraParams{testutil::uniform(rng, 0.0, 6.2831853),
                      testutil::uniform(rng, -1.4, 1.4),
                      testutil::uniform(rng, -3.1, 3.1),
                      Eigen::Vector3d(testutil::uniform(rng, -0.5, 0.5),
                                      testutil::uniform(rng, -0.5, 0.5),
                                      testutil::uniform(rng, -0.5, 0.5)),
                      testutil::uniform(rng, 0.0, 0.8)};
}

}  // namespace

TEST_SUITE("camera") {

TEST_CASE("zero angles give the identity rotation") {
  const Eigen::Matrix3d rot = rotation_matrix(CameraParams{});
  CHECK((rot - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a half-turn azimuth flips the view axis") {
  CameraParams cam;
  cam.azimuth = M_PI;
  const Eigen::Vector3d mapped = rotation_matrix(cam) * Eigen::Vector3d(0.0, 0.0, 1.0);
  CHECK((mapped - Eigen::Vector3d(0.0, 0.0, -1.0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rotation matrices are orthonormal with unit determinant") {
  Rng rng = make_rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Matrix3d rot = rotation_matrix(random_cam(rng));
    CHECK((rot.transpose() * rot - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK(std::abs(rot.determinant() - 1.0) < 1e-12);
  }
}

TEST_CASE("euler extraction inverts rotation_matrix away from gimbal lock") {
  Rng rng = make_rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const CameraParams cam = random_cam(rng);
    const Eigen::Matrix3d rot = rotation_matrix(cam);
    double az = 0.0, el = 0.0, tl = 0.0;
    euler_angles_from_rotation(rot, az, el, tl);
    const Eigen::Matrix3d rebuilt =
        rotation_matrix(CameraParams{az, el, tl, Eigen::Vector3d::Zero(), 0.0});
    CHECK((rebuilt - rot).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("points on the optical axis project to the origin") {
  CameraParams cam;
  cam.inv_f = 0.37;
  const Eigen::Vector2d x = project_point(Eigen::Vector3d(0.0, 0.0, 2.5), cam);
  CHECK(testutil::same_matrix(x, Eigen::Vector2d(0.0, 0.0)));
}

TEST_CASE("zero inverse focal length is exact parallel projection") {
  CameraParams cam;
  cam.inv_f = 0.0;
  const Eigen::Vector2d x = project_point(Eigen::Vector3d(1.0, 2.0, 7.0), cam);
  CHECK(testutil::same_matrix(x, Eigen::Vector2d(1.0, 2.0)));
}

TEST_CASE("unit inverse focal length halves a depth-1 point") {
  CameraParams cam;
  cam.inv_f = 1.0;
  const Eigen::Vector2d x = project_point(Eigen::Vector3d(1.0, 1.0, 1.0), cam);
  CHECK(testutil::same_matrix(x, Eigen::Vector2d(0.5, 0.5)));
}

TEST_CASE("a point at the depth singularity is rejected") {
  CameraParams cam;
  cam.inv_f = 1.0;
  CHECK_THROWS_AS(project_point(Eigen::Vector3d(1.0, 1.0, -1.0), cam),
                  DepthSingularityError);
}

TEST_CASE("project_shape reports the offending keypoint index") {
  Eigen::Matrix3Xd coords = Eigen::Matrix3Xd::Zero(3, 5);
  coords(2, 3) = -2.0;
  CameraParams cam;
  cam.inv_f = 0.6;
  try {
    project_shape(Shape3D{coords}, cam);
    FAIL("expected DepthSingularityError");
  } catch (const DepthSingularityError& e) {
    CHECK(e.keypoint_index == 3);
  }
}

TEST_CASE("parallel projection of the mean shape is its first two rows") {
  const BaseShapeSet& bases = testutil::chair();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(param_vector_size(bases.num_bases()));
  const Keypoints2D x = project_skeleton(ParamVector{v}, bases);
  CHECK((x.coords - bases.bases[0].topRows(2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("translation shifts parallel projections exactly") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    ParamVector s = testutil::random_params(bases, rng, 0.0, 0.0);
    const Keypoints2D x0 = project_skeleton(s, bases);
    const double delta = testutil::uniform(rng, -1.0, 1.0);
    ParamVector shifted = s;
    shifted.values[shifted.size() - 4] += delta;  // t_x
    const Keypoints2D x1 = project_skeleton(shifted, bases);
    const Eigen::ArrayXd shift_seen =
        (x1.coords.row(0) - x0.coords.row(0)).transpose().array();
    CHECK((shift_seen - delta).abs().maxCoeff() < 1e-15);
    CHECK((x1.coords.row(1) - x0.coords.row(1)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("projection is continuous at the parallel limit") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    ParamVector s = testutil::random_params(bases, rng, 0.0, 0.0);
    ParamVector near = s;
    near.values[near.size() - 1] = 1e-6;
    const Keypoints2D x0 = project_skeleton(s, bases);
    const Keypoints2D x1 = project_skeleton(near, bases);
    CHECK((x1.coords - x0.coords).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("parallel projection zeroes the depth translation column") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    ParamVector s = testutil::random_params(bases, rng, 0.0, 0.0);
    const Eigen::MatrixXd jac = projection_jacobian(s, bases);
    CHECK(jac.col(s.size() - 2).cwiseAbs().maxCoeff() == 0.0);  // t_z column
  }
}

TEST_CASE("analytic jacobian matches central finite differences") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(17);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    // inv_f kept away from 0 so the decode clamp kink is not straddled.
    const ParamVector s = testutil::random_params(bases, rng, 0.02, 0.8);
    const Eigen::MatrixXd jac = projection_jacobian(s, bases);
    for (int c = 0; c < s.size(); ++c) {
      ParamVector plus = s, minus = s;
      plus.values[c] += h;
      minus.values[c] -= h;
      const Keypoints2D xp = project_skeleton(plus, bases);
      const Keypoints2D xm = project_skeleton(minus, bases);
      for (int i = 0; i < xp.count(); ++i) {
        for (int r = 0; r < 2; ++r) {
          const double fd = (xp.coords(r, i) - xm.coords(r, i)) / (2.0 * h);
          const double an = jac(2 * i + r, c);
          worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
        }
      }
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("projection is equivariant under a rotation baked into the bases") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const ParamVector s = testutil::random_params(bases, rng, 0.0, 0.8);
    const Eigen::Matrix3d r0 =
        rotation_matrix(CameraParams{testutil::uniform(rng, 0.0, 6.28),
                                     testutil::uniform(rng, -1.3, 1.3),
                                     testutil::uniform(rng, -3.0, 3.0),
                                     Eigen::Vector3d::Zero(), 0.0});
    BaseShapeSet rotated = bases;
    for (auto& b : rotated.bases) b = r0 * b;

    auto [sp, cam] = s.decode();
    const Eigen::Matrix3d composed = rotation_matrix(cam) * r0.transpose();
    double az = 0.0, el = 0.0, tl = 0.0;
    euler_angles_from_rotation(composed, az, el, tl);
    CameraParams cam2 = cam;
    cam2.azimuth = az;
    cam2.elevation = el;
    cam2.tilt = tl;
    const ParamVector s2 = ParamVector::encode(sp, cam2);

    const Keypoints2D x0 = project_skeleton(s, bases);
    const Keypoints2D x1 = project_skeleton(s2, rotated);
    CHECK((x1.coords - x0.coords).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("encode and decode are mutually inverse on valid parameters") {
  const BaseShapeSet& bases = testutil::chair();
  Rng rng = make_rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const ParamVector s = testutil::random_params(bases, rng, 0.0, 0.8);
    auto [sp, cam] = s.decode();
    CHECK(sp.alpha[0] == 1.0);
    const ParamVector back = ParamVector::encode(sp, cam);
    CHECK((back.values - s.values).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("decode wraps azimuth and clamps negative inverse focal length") {
  const BaseShapeSet& bases = testutil::chair();
  ParamVector s{Eigen::VectorXd::Zero(param_vector_size(bases.num_bases()))};
  s.values[s.size() - 7] = -1.0;  // azimuth below range
  s.values[s.size() - 1] = -0.5;  // inv_f below range
  auto [sp, cam] = s.decode();
  CHECK(cam.azimuth == doctest::Approx(2.0 * M_PI - 1.0).epsilon(1e-15));
  CHECK(cam.inv_f == 0.0);
  CHECK(wrap_angle_2pi(2.0 * M_PI) == 0.0);
  CHECK(wrap_angle_2pi(-0.25) == doctest::Approx(2.0 * M_PI - 0.25).epsilon(1e-15));
}

}  // TEST_SUITE
