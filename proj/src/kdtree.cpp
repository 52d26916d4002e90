#include "activelo/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "activelo/util.hpp"

namespace activelo {

namespace {
constexpr int kLeafSize = 8;
}

KdTree::KdTree(const std::vector<Vec3>& points) : points_(points) {
  if (points_.empty()) fail(ErrorKind::invalid_argument, "KdTree: empty point set");
  order_.resize(points_.size());
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<int>(points_.size()));
}

int KdTree::build(int begin, int end) {
  Node node;
  if (end - begin <= kLeafSize) {
    node.begin = begin;
    node.end = end;
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  Vec3 extent = hi - lo;
  int axis = 0;
  if (extent.y() > extent.x()) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;

  int mid = begin + (end - begin) / 2;
  // Comparator includes the index so the tree shape is deterministic even
  // with duplicate coordinates.
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     double ca = points_[a][axis], cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });

  node.axis = axis;
  node.split = points_[order_[mid]][axis];
  int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  int left = build(begin, mid);
  int right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

KdTree::Hit KdTree::nearest(const Vec3& query) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_idx = -1;

  auto consider = [&](int idx) {
    double d2 = (points_[idx] - query).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
      best_d2 = d2;
      best_idx = idx;
    }
  };

  auto walk = [&](auto&& self, int ni) -> void {
    const Node& node = nodes_[ni];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) consider(order_[i]);
      return;
    }
    double delta = query[node.axis] - node.split;
    int near = delta < 0 ? node.left : node.right;
    int far = delta < 0 ? node.right : node.left;
    self(self, near);
    // <= keeps ties reachable so the index tie-break stays exact.
    if (delta * delta <= best_d2) self(self, far);
  };
  walk(walk, root_);

  return Hit{best_idx, std::sqrt(best_d2)};
}

std::vector<KdTree::Hit> KdTree::knn(const Vec3& query, int k) const {
  if (k <= 0) fail(ErrorKind::invalid_argument, "KdTree::knn: k must be positive");
  if (k > size()) k = size();

  // Max-heap on (d2, index); top is the current worst of the best k.
  std::priority_queue<std::pair<double, int>> heap;

  auto consider = [&](int idx) {
    double d2 = (points_[idx] - query).squaredNorm();
    std::pair<double, int> cand{d2, idx};
    if (static_cast<int>(heap.size()) < k) {
      heap.push(cand);
    } else if (cand < heap.top()) {
      heap.pop();
      heap.push(cand);
    }
  };

  auto walk = [&](auto&& self, int ni) -> void {
    const Node& node = nodes_[ni];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) consider(order_[i]);
      return;
    }
    double delta = query[node.axis] - node.split;
    int near = delta < 0 ? node.left : node.right;
    int far = delta < 0 ? node.right : node.left;
    self(self, near);
    if (static_cast<int>(heap.size()) < k || delta * delta <= heap.top().first) self(self, far);
  };
  walk(walk, root_);

  std::vector<Hit> out(heap.size());
  for (int i = static_cast<int>(heap.size()) - 1; i >= 0; --i) {
    out[i] = Hit{heap.top().second, std::sqrt(heap.top().first)};
    heap.pop();
  }
  return out;
}

}  // namespace activelo
