#pragma once

#include <vector>

#include "activelo/geom.hpp"

namespace activelo {

// Exact nearest-neighbor index over a fixed set of 3D points. Queries are
// deterministic: equal distances resolve to the lowest point index. Safe for
// concurrent queries once built.
class KdTree {
 public:
  struct Hit {
    int index = -1;
    double distance = 0.0;
  };

  explicit KdTree(const std::vector<Vec3>& points);

  Hit nearest(const Vec3& query) const;

  // k hits sorted by ascending (distance, index). Returns fewer when the
  // index holds fewer than k points.
  std::vector<Hit> knn(const Vec3& query, int k) const;

  int size() const { return static_cast<int>(points_.size()); }

 private:
  struct Node {
    int axis = -1;       // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // index range for leaves
  };

  int build(int begin, int end);

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace activelo
