#include "activelo/geom.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "activelo/util.hpp"

namespace activelo {

namespace {
constexpr double kPi = std::numbers::pi;
}

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose invert(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -(out.rotation * p.translation);
  return out;
}

PointCloud transform_cloud(const Pose& p, const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& q : cloud.points) out.points.push_back(p.rotation * q + p.translation);
  out.intensity = cloud.intensity;
  out.frame_index = cloud.frame_index;
  return out;
}

Mat3 euler_to_rotation(const EulerAngles& e) {
  double cr = std::cos(e.roll), sr = std::sin(e.roll);
  double cp = std::cos(e.pitch), sp = std::sin(e.pitch);
  double cy = std::cos(e.yaw), sy = std::sin(e.yaw);
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
  ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
  rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  return rx * ry * rz;
}

bool gimbal_degenerate(const Mat3& r) {
  return std::abs(r(0, 2)) > 1.0 - 1e-9;
}

EulerAngles rotation_to_euler(const Mat3& r) {
  EulerAngles e;
  double sp = std::clamp(r(0, 2), -1.0, 1.0);
  if (gimbal_degenerate(r)) {
    // Only the sum (pitch = +pi/2) or difference (pitch = -pi/2) of roll and
    // yaw is observable; resolve by putting it all into yaw.
    e.pitch = sp > 0 ? kPi / 2.0 : -kPi / 2.0;
    e.roll = 0.0;
    e.yaw = std::atan2(r(1, 0), r(1, 1));
    return e;
  }
  e.pitch = std::asin(sp);
  e.roll = std::atan2(-r(1, 2), r(2, 2));
  e.yaw = std::atan2(-r(0, 1), r(0, 0));
  return e;
}

double geodesic_distance(const Mat3& a, const Mat3& b) {
  double tr = (a.transpose() * b).trace();
  double c = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

Mat3 mean_rotation(const std::vector<Mat3>& rotations, bool* dispersed) {
  if (rotations.empty()) fail(ErrorKind::invalid_argument, "mean_rotation: empty rotation list");
  if (dispersed) *dispersed = false;

  bool spread = false;
  for (size_t i = 0; i + 1 < rotations.size() && !spread; ++i)
    for (size_t j = i + 1; j < rotations.size(); ++j)
      if (geodesic_distance(rotations[i], rotations[j]) >= kPi / 2.0) {
        spread = true;
        break;
      }
  if (spread) {
    if (dispersed) *dispersed = true;
    log_warn("mean_rotation: rotations spread by pi/2 or more, mean may be unstable");
  }

  EulerAngles first = rotation_to_euler(rotations[0]);
  double sr = 0, sp = 0, sy = 0;
  for (const Mat3& r : rotations) {
    EulerAngles e = rotation_to_euler(r);
    // Unwrap each component next to the first element before averaging.
    sr += first.roll + wrap_angle(e.roll - first.roll);
    sp += first.pitch + wrap_angle(e.pitch - first.pitch);
    sy += first.yaw + wrap_angle(e.yaw - first.yaw);
  }
  double n = static_cast<double>(rotations.size());
  return euler_to_rotation({sr / n, sp / n, sy / n});
}

double orthonormality_error(const Mat3& r) {
  Mat3 d = r.transpose() * r - Mat3::Identity();
  double err = d.cwiseAbs().maxCoeff();
  return std::max(err, std::abs(r.determinant() - 1.0));
}

Mat3 orthonormalized(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

bool is_valid_rotation(const Mat3& r, double tol) {
  return orthonormality_error(r) <= tol;
}

}  // namespace activelo
