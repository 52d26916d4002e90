#pragma once

#include <Eigen/Core>
#include <vector>

namespace activelo {

// Point cloud in sensor-local coordinates. `intensity` is either empty or
// holds one value per point in [0, 1].
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<float> intensity;
  int frame_index = 0;

  bool has_intensity() const { return !intensity.empty(); }
  int size() const { return static_cast<int>(points.size()); }
};

}  // namespace activelo
