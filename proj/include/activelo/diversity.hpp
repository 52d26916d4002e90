#pragma once

#include <string>
#include <vector>

#include "activelo/trajgraph.hpp"

namespace activelo {

struct DiversityWeights {
  double lambda1 = 1.0 / 3.0;  // angle spread
  double lambda2 = 1.0 / 3.0;  // edge length spread
  double lambda3 = 1.0 / 3.0;  // speed spread
  double lambda4 = 0.5;        // turn energy
  double lambda5 = 0.5;        // length share
};

// Per-feature mean/std across the candidate pool, used for z-scoring the
// three spread features. A zero std maps the normalized value to 0.
struct PoolStats {
  double theta_mean = 0, theta_std = 0;
  double length_mean = 0, length_std = 0;
  double speed_mean = 0, speed_std = 0;
};

PoolStats compute_pool_stats(const std::vector<SequenceFeatures>& pool);

// Weighted sum of the three spread features; stats == nullptr skips
// normalization and combines raw values.
double variability(const SequenceFeatures& f, const DiversityWeights& w,
                   const PoolStats* stats);

// lambda4 * turn energy + lambda5 * (sequence length / pool length).
double importance(const TrajectoryGraph& graph, double pool_total_length,
                  const DiversityWeights& w);
double importance_from_features(const SequenceFeatures& f, double pool_total_length,
                                const DiversityWeights& w);

struct ScoredSequence {
  std::string id;
  double f_var = 0;
  double f_impor = 0;
  double s_o = 0;         // outlier-proportion bin axis value
  double speed_mean = 0;  // speed bin axis value
  int bin_outlier = -1;
  int bin_speed = -1;

  double score() const { return f_var + f_impor; }
};

// Equal-population quantile bins per axis, ascending. Ties share the lower
// bin so equal values never split across a cut.
void assign_bins(std::vector<ScoredSequence>& pool, int bins_outlier, int bins_speed);

struct ItssConfig {
  int u = 6;
  int bins_outlier = 3;
  int bins_speed = 3;
  DiversityWeights weights;
  bool normalize = true;
};

struct ItssResult {
  std::vector<std::string> selected;  // sorted by id
  double objective = 0;
  bool exact = true;
  int min_feasible_u = 0;
};

// Smallest selection size that can still cover every non-empty bin on both
// axes (bipartite edge-cover bound). Requires bins assigned.
int minimal_feasible_u(const std::vector<ScoredSequence>& pool, int bins_outlier,
                       int bins_speed);

// Maximizes the summed score subject to: exactly u selected, and every
// non-empty bin on each axis holds at least one selected sequence. Exact
// branch and bound up to 24 candidates; greedy with bin repair beyond that,
// flagged exact = false. Score ties resolve to the lexicographically
// smallest id set. Requires bins assigned.
ItssResult select_itss(const std::vector<ScoredSequence>& pool, const ItssConfig& cfg);

}  // namespace activelo
