#include "activelo/trajgraph.hpp"

#include <algorithm>
#include <cmath>

#include "activelo/kdtree.hpp"
#include "activelo/util.hpp"

namespace activelo {

namespace {

// Heading of the step leaving each frame; stationary steps carry the last
// moving heading forward (and backward for a stationary start).
std::vector<double> step_headings(const std::vector<Vec3>& p) {
  int steps = static_cast<int>(p.size()) - 1;
  std::vector<double> h(steps, 0.0);
  bool seen = false;
  double last = 0.0;
  for (int f = 0; f < steps; ++f) {
    double dx = p[f + 1].x() - p[f].x();
    double dy = p[f + 1].y() - p[f].y();
    if (dx * dx + dy * dy > 1e-18) {
      last = std::atan2(dy, dx);
      if (!seen) std::fill(h.begin(), h.begin() + f, last);
      seen = true;
    }
    h[f] = last;
  }
  return h;
}

}  // namespace

TrajectoryGraph segment_trajectory(const SequenceRecord& seq, const SegmentParams& params) {
  if (seq.frame_count() < 2)
    fail(ErrorKind::invalid_argument, "sequence '" + seq.id + "' has fewer than 2 frames");

  const std::vector<Vec3>& p = seq.positions;
  int last = seq.frame_count() - 1;

  TrajectoryGraph graph;
  graph.frame_rate = seq.frame_rate;

  int window = std::max(1, static_cast<int>(std::lround(params.window_seconds * seq.frame_rate)));
  int gap = params.min_gap_frames > 0 ? params.min_gap_frames : window;
  int half = std::max(1, window / 2);

  std::vector<double> heading = step_headings(p);
  // delta[f]: heading change at frame f, f in [1, last-1]
  std::vector<double> delta(seq.frame_count(), 0.0);
  for (int f = 1; f < last; ++f) delta[f] = wrap_angle(heading[f] - heading[f - 1]);

  std::vector<double> window_change(seq.frame_count(), 0.0);
  for (int f = 1; f < last; ++f) {
    int lo = std::max(1, f - half);
    int hi = std::min(last - 1, f + half);
    double sum = 0.0;
    for (int g = lo; g <= hi; ++g) sum += delta[g];
    window_change[f] = std::abs(sum);
  }

  // Candidate runs above the threshold; keep the largest per-frame change in
  // each run, preferring the frame nearest the run center.
  struct Candidate {
    int frame;
    double change;
  };
  std::vector<Candidate> picked;
  int f = 1;
  while (f < last) {
    if (window_change[f] <= params.turn_threshold) {
      ++f;
      continue;
    }
    int run_begin = f;
    while (f < last && window_change[f] > params.turn_threshold) ++f;
    int run_end = f - 1;
    double center = 0.5 * (run_begin + run_end);
    int best = run_begin;
    for (int g = run_begin; g <= run_end; ++g) {
      double a = std::abs(delta[g]), b = std::abs(delta[best]);
      if (a > b ||
          (a == b && std::abs(g - center) < std::abs(best - center))) {
        best = g;
      }
    }
    picked.push_back({best, window_change[best]});
  }

  // Merge near-coincident nodes toward the larger window change; nodes
  // hugging an endpoint fold into it.
  std::vector<Candidate> merged;
  for (const Candidate& c : picked) {
    if (c.frame < gap || c.frame > last - gap) continue;
    if (!merged.empty() && c.frame - merged.back().frame < gap) {
      if (c.change > merged.back().change) merged.back() = c;
      continue;
    }
    merged.push_back(c);
  }

  graph.nodes.push_back({0, p[0], 0.0, 0.0});
  for (const Candidate& c : merged) graph.nodes.push_back({c.frame, p[c.frame], 0.0, c.change});
  graph.nodes.push_back({last, p[last], 0.0, 0.0});

  for (int k = 0; k + 1 < graph.node_count(); ++k) {
    TrajEdge e;
    e.frame_begin = graph.nodes[k].frame;
    e.frame_end = graph.nodes[k + 1].frame;
    graph.edges.push_back(e);
  }

  compute_edge_features(graph, seq);
  for (int k = 1; k + 1 < graph.node_count(); ++k) graph.nodes[k].angle = node_angle(graph, k);
  return graph;
}

double node_angle(const TrajectoryGraph& graph, int k) {
  if (k <= 0 || k + 1 >= graph.node_count())
    fail(ErrorKind::invalid_argument, "node_angle: node " + std::to_string(k) + " is not interior");
  Vec3 d1 = graph.nodes[k].position - graph.nodes[k - 1].position;
  Vec3 d2 = graph.nodes[k + 1].position - graph.nodes[k].position;
  double n1 = d1.norm(), n2 = d2.norm();
  if (n1 < 1e-12 || n2 < 1e-12)
    fail(ErrorKind::numeric,
         "node_angle: degenerate zero-length span at node " + std::to_string(k));
  double c = std::clamp(d1.dot(d2) / (n1 * n2), -1.0, 1.0);
  return std::acos(c);
}

std::pair<double, double> angle_stats(const TrajectoryGraph& graph) {
  int m = graph.interior_count();
  if (m == 0) {
    log_warn("angle_stats: no interior nodes, returning (0, 0)");
    return {0.0, 0.0};
  }
  double mean = 0.0;
  for (int k = 1; k <= m; ++k) mean += graph.nodes[k].angle;
  mean /= m;
  double var = 0.0;
  for (int k = 1; k <= m; ++k) {
    double d = graph.nodes[k].angle - mean;
    var += d * d;
  }
  return {mean, std::sqrt(var / m)};
}

void compute_edge_features(TrajectoryGraph& graph, const SequenceRecord& seq) {
  const std::vector<Vec3>& p = seq.positions;
  for (TrajEdge& e : graph.edges) {
    double len = 0.0;
    for (int f = e.frame_begin; f < e.frame_end; ++f) len += (p[f + 1] - p[f]).norm();
    e.length = len;
    double frames = static_cast<double>(e.frame_end - e.frame_begin + 1);
    e.speed = len / (frames / seq.frame_rate);
  }
}

EdgeStats edge_stats(const TrajectoryGraph& graph) {
  EdgeStats s;
  int m = graph.edge_count();
  if (m == 0) return s;
  for (const TrajEdge& e : graph.edges) {
    s.speed_mean += e.speed;
    s.length_mean += e.length;
  }
  s.speed_mean /= m;
  s.length_mean /= m;
  double vv = 0, vl = 0;
  for (const TrajEdge& e : graph.edges) {
    vv += (e.speed - s.speed_mean) * (e.speed - s.speed_mean);
    vl += (e.length - s.length_mean) * (e.length - s.length_mean);
  }
  s.speed_std = std::sqrt(vv / m);
  s.length_std = std::sqrt(vl / m);
  return s;
}

double turn_energy(const TrajectoryGraph& graph) {
  double sum = 0.0;
  for (int k = 1; k + 1 < graph.node_count(); ++k) {
    double dv = std::abs(graph.edges[k - 1].speed - graph.edges[k].speed);
    sum += dv * graph.nodes[k].angle;
  }
  return sum;
}

OutlierResult outlier_proportion(const SequenceRecord& seq, double epsilon) {
  if (epsilon <= 0) fail(ErrorKind::invalid_argument, "outlier epsilon must be positive");
  if (!seq.clouds)
    fail(ErrorKind::invalid_argument, "sequence '" + seq.id + "' has no point clouds");
  if (!seq.has_gt())
    fail(ErrorKind::invalid_argument, "sequence '" + seq.id + "' has no ground truth");
  if (seq.clouds->frame_count() < seq.frame_count())
    fail(ErrorKind::invalid_argument, "sequence '" + seq.id + "' is missing cloud frames");

  OutlierResult res;
  int pairs = seq.frame_count() - 1;
  res.per_frame.resize(pairs, 0.0);

  std::shared_ptr<const PointCloud> target = seq.clouds->frame(0);
  for (int i = 0; i < pairs; ++i) {
    std::shared_ptr<const PointCloud> source = target;
    target = seq.clouds->frame(i + 1);
    if (source->points.empty() || target->points.empty()) {
      log_warn("sequence '" + seq.id + "': empty frame near pair " + std::to_string(i) +
               ", skipped");
      ++res.skipped_frames;
      continue;
    }

    Pose rel = seq.relative_gt(i);
    KdTree index(target->points);
    long outliers = 0;
    for (const Vec3& q : source->points) {
      Vec3 moved = rel.rotation * q + rel.translation;
      if (index.nearest(moved).distance > epsilon) ++outliers;
    }
    res.per_frame[i] = static_cast<double>(outliers) / static_cast<double>(source->points.size());
    res.total_outliers += outliers;
    res.total_points += static_cast<long>(source->points.size());
  }

  res.s_o = res.total_points > 0
                ? static_cast<double>(res.total_outliers) / static_cast<double>(res.total_points)
                : 0.0;
  return res;
}

SequenceFeatures extract_features(const SequenceRecord& seq, const SegmentParams& params,
                                  double epsilon, bool with_outliers) {
  TrajectoryGraph graph = segment_trajectory(seq, params);

  SequenceFeatures f;
  auto [tm, ts] = angle_stats(graph);
  f.theta_mean = tm;
  f.theta_std = ts;
  EdgeStats es = edge_stats(graph);
  f.speed_mean = es.speed_mean;
  f.speed_std = es.speed_std;
  f.length_mean = es.length_mean;
  f.length_std = es.length_std;
  f.turn_energy = turn_energy(graph);
  f.edge_count = graph.edge_count();
  for (const TrajEdge& e : graph.edges) f.total_length += e.length;

  if (with_outliers) {
    OutlierResult o = outlier_proportion(seq, epsilon);
    f.outlier_proportion = o.s_o;
    f.per_frame_outliers = std::move(o.per_frame);
  }
  return f;
}

}  // namespace activelo
