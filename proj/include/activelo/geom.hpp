#pragma once

#include <Eigen/Core>
#include <vector>

#include "activelo/cloud.hpp"

namespace activelo {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Intrinsic roll-pitch-yaw: rotate about body x, then the new y, then the
// newer z. Canonical pitch lies in [-pi/2, pi/2].
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return Pose{}; }
};

// Wraps to (-pi, pi].
double wrap_angle(double a);

// c = a * b, i.e. apply b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

// Applies p to every point; intensity and frame_index carry over.
PointCloud transform_cloud(const Pose& p, const PointCloud& cloud);

Mat3 euler_to_rotation(const EulerAngles& e);
EulerAngles rotation_to_euler(const Mat3& r);

// True when |pitch| is within ~1e-9 of pi/2; rotation_to_euler then puts the
// whole x/z split into yaw and sets roll = 0.
bool gimbal_degenerate(const Mat3& r);

// arccos((tr(a^T b) - 1) / 2), argument clamped to [-1, 1].
double geodesic_distance(const Mat3& a, const Mat3& b);

// Componentwise Euler average with angles unwrapped relative to the first
// element. Spread of pi/2 or more between any pair sets *dispersed (when
// given) and logs a warning; the mean is still returned.
Mat3 mean_rotation(const std::vector<Mat3>& rotations, bool* dispersed = nullptr);

// max(per-entry |R^T R - I|, |det - 1|)
double orthonormality_error(const Mat3& r);

// Nearest matrix in SO(3) by Frobenius norm.
Mat3 orthonormalized(const Mat3& r);

bool is_valid_rotation(const Mat3& r, double tol = 1e-9);

}  // namespace activelo
