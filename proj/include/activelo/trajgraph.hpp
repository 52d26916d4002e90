#pragma once

#include <utility>
#include <vector>

#include "activelo/ingest.hpp"

namespace activelo {

struct SegmentParams {
  double window_seconds = 2.0;
  double turn_threshold = 0.2617993877991494;  // 15 degrees
  int min_gap_frames = 0;                      // 0 derives window_seconds * frame_rate
};

struct TrajNode {
  int frame = 0;
  Vec3 position = Vec3::Zero();
  double angle = 0.0;          // defined for interior nodes only
  double window_change = 0.0;  // accumulated heading change that triggered it
};

struct TrajEdge {
  int frame_begin = 0;
  int frame_end = 0;  // inclusive span [frame_begin, frame_end]
  double length = 0.0;
  double speed = 0.0;
};

// First and last frames are always nodes; edges connect consecutive nodes
// and tile the frame range.
struct TrajectoryGraph {
  std::vector<TrajNode> nodes;
  std::vector<TrajEdge> edges;
  double frame_rate = 10.0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }
  int interior_count() const { return node_count() > 2 ? node_count() - 2 : 0; }
};

// An interior frame becomes a node when the accumulated planar heading
// change over a sliding window exceeds the threshold; within each candidate
// run the frame with the largest per-frame heading change wins. Nodes closer
// than min_gap_frames merge into the one with the larger window change.
// Node angles and edge features come out filled in.
TrajectoryGraph segment_trajectory(const SequenceRecord& seq, const SegmentParams& params);

// Angle at interior node k between the straight segments into and out of it,
// in [0, pi]. Zero-length adjacent vectors are an error naming the node.
double node_angle(const TrajectoryGraph& graph, int k);

// Mean and standard deviation over interior-node angles, both with the
// interior count as divisor. No interior nodes gives (0, 0) with a warning.
std::pair<double, double> angle_stats(const TrajectoryGraph& graph);

// Fills length (sum of consecutive-frame distances across the span) and
// speed (length divided by span frame count over the frame rate).
void compute_edge_features(TrajectoryGraph& graph, const SequenceRecord& seq);

struct EdgeStats {
  double speed_mean = 0, speed_std = 0;
  double length_mean = 0, length_std = 0;
};

// Population statistics with the edge count as divisor.
EdgeStats edge_stats(const TrajectoryGraph& graph);

// Sum over interior nodes of |incoming speed - outgoing speed| * angle.
double turn_energy(const TrajectoryGraph& graph);

struct OutlierResult {
  std::vector<double> per_frame;  // one entry per consecutive pair
  double s_o = 0.0;               // pooled outliers / pooled points
  long total_points = 0;
  long total_outliers = 0;
  int skipped_frames = 0;
};

// Transforms each frame by its ground-truth relative pose and counts points
// whose nearest neighbor in the next frame lies farther than epsilon.
OutlierResult outlier_proportion(const SequenceRecord& seq, double epsilon = 0.3);

struct SequenceFeatures {
  double theta_mean = 0, theta_std = 0;
  double speed_mean = 0, speed_std = 0;
  double length_mean = 0, length_std = 0;
  double outlier_proportion = 0;  // s_o
  std::vector<double> per_frame_outliers;
  double turn_energy = 0;
  double total_length = 0;
  int edge_count = 0;
};

// with_outliers requires clouds and ground truth on the sequence.
SequenceFeatures extract_features(const SequenceRecord& seq, const SegmentParams& params,
                                  double epsilon, bool with_outliers = true);

}  // namespace activelo
