#include "activelo/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "activelo/util.hpp"

namespace activelo {

PoolStats compute_pool_stats(const std::vector<SequenceFeatures>& pool) {
  PoolStats s;
  if (pool.empty()) return s;
  double n = static_cast<double>(pool.size());
  for (const auto& f : pool) {
    s.theta_mean += f.theta_std;
    s.length_mean += f.length_std;
    s.speed_mean += f.speed_std;
  }
  s.theta_mean /= n;
  s.length_mean /= n;
  s.speed_mean /= n;
  double vt = 0, vl = 0, vv = 0;
  for (const auto& f : pool) {
    vt += (f.theta_std - s.theta_mean) * (f.theta_std - s.theta_mean);
    vl += (f.length_std - s.length_mean) * (f.length_std - s.length_mean);
    vv += (f.speed_std - s.speed_mean) * (f.speed_std - s.speed_mean);
  }
  s.theta_std = std::sqrt(vt / n);
  s.length_std = std::sqrt(vl / n);
  s.speed_std = std::sqrt(vv / n);
  return s;
}

namespace {
double zscore(double x, double mean, double std) {
  return std > 0 ? (x - mean) / std : 0.0;
}
}  // namespace

double variability(const SequenceFeatures& f, const DiversityWeights& w,
                   const PoolStats* stats) {
  if (!stats) return w.lambda1 * f.theta_std + w.lambda2 * f.length_std + w.lambda3 * f.speed_std;
  return w.lambda1 * zscore(f.theta_std, stats->theta_mean, stats->theta_std) +
         w.lambda2 * zscore(f.length_std, stats->length_mean, stats->length_std) +
         w.lambda3 * zscore(f.speed_std, stats->speed_mean, stats->speed_std);
}

double importance_from_features(const SequenceFeatures& f, double pool_total_length,
                                const DiversityWeights& w) {
  if (pool_total_length <= 0)
    fail(ErrorKind::invalid_argument, "importance: pool total length must be positive");
  return w.lambda4 * f.turn_energy + w.lambda5 * (f.total_length / pool_total_length);
}

double importance(const TrajectoryGraph& graph, double pool_total_length,
                  const DiversityWeights& w) {
  SequenceFeatures f;
  f.turn_energy = turn_energy(graph);
  for (const TrajEdge& e : graph.edges) f.total_length += e.length;
  return importance_from_features(f, pool_total_length, w);
}

namespace {

template <typename Value, typename SetBin>
void assign_axis(std::vector<ScoredSequence>& pool, int bins, Value value, SetBin set_bin) {
  int n = static_cast<int>(pool.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double va = value(pool[a]), vb = value(pool[b]);
    return va < vb || (va == vb && pool[a].id < pool[b].id);
  });
  for (int r = 0; r < n; ++r) {
    int bin = static_cast<int>(static_cast<long long>(r) * bins / n);
    // Equal values inherit the lower bin so ties never straddle a cut.
    if (r > 0 && value(pool[order[r]]) == value(pool[order[r - 1]])) {
      bin = std::min(bin, *set_bin(pool[order[r - 1]]));
    }
    *set_bin(pool[order[r]]) = bin;
  }
}

}  // namespace

void assign_bins(std::vector<ScoredSequence>& pool, int bins_outlier, int bins_speed) {
  if (pool.empty()) fail(ErrorKind::invalid_argument, "assign_bins: empty pool");
  if (bins_outlier < 1 || bins_speed < 1)
    fail(ErrorKind::invalid_argument, "assign_bins: bin counts must be positive");
  assign_axis(pool, bins_outlier, [](const ScoredSequence& s) { return s.s_o; },
              [](ScoredSequence& s) { return &s.bin_outlier; });
  assign_axis(pool, bins_speed, [](const ScoredSequence& s) { return s.speed_mean; },
              [](ScoredSequence& s) { return &s.bin_speed; });
}

namespace {

struct BinIndex {
  std::vector<int> o_bins, v_bins;  // sorted non-empty bin labels
  std::vector<int> o_of, v_of;      // per-sequence dense bin index

  explicit BinIndex(const std::vector<ScoredSequence>& pool) {
    std::set<int> os, vs;
    for (const auto& s : pool) {
      if (s.bin_outlier < 0 || s.bin_speed < 0)
        fail(ErrorKind::internal, "select_itss: bins not assigned");
      os.insert(s.bin_outlier);
      vs.insert(s.bin_speed);
    }
    o_bins.assign(os.begin(), os.end());
    v_bins.assign(vs.begin(), vs.end());
    o_of.reserve(pool.size());
    v_of.reserve(pool.size());
    for (const auto& s : pool) {
      o_of.push_back(static_cast<int>(std::lower_bound(o_bins.begin(), o_bins.end(),
                                                       s.bin_outlier) -
                                      o_bins.begin()));
      v_of.push_back(static_cast<int>(std::lower_bound(v_bins.begin(), v_bins.end(),
                                                       s.bin_speed) -
                                      v_bins.begin()));
    }
  }
};

// Maximum bipartite matching between non-empty outlier bins and non-empty
// speed bins through the available (o, v) pairs.
int max_bin_matching(const BinIndex& bins, const std::vector<ScoredSequence>& pool) {
  int no = static_cast<int>(bins.o_bins.size());
  int nv = static_cast<int>(bins.v_bins.size());
  std::vector<std::set<int>> adj(no);
  for (size_t i = 0; i < pool.size(); ++i) adj[bins.o_of[i]].insert(bins.v_of[i]);

  std::vector<int> match_v(nv, -1);
  std::vector<char> visited;
  auto augment = [&](auto&& self, int o) -> bool {
    for (int v : adj[o]) {
      if (visited[v]) continue;
      visited[v] = 1;
      if (match_v[v] < 0 || self(self, match_v[v])) {
        match_v[v] = o;
        return true;
      }
    }
    return false;
  };

  int matching = 0;
  for (int o = 0; o < no; ++o) {
    visited.assign(nv, 0);
    if (augment(augment, o)) ++matching;
  }
  return matching;
}

std::vector<std::string> sorted_ids(const std::vector<ScoredSequence>& pool,
                                    const std::vector<int>& indices) {
  std::vector<std::string> ids;
  ids.reserve(indices.size());
  for (int i : indices) ids.push_back(pool[i].id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

struct ExactSolver {
  const std::vector<ScoredSequence>& pool;
  const BinIndex& bins;
  int u;

  std::vector<int> order;      // candidate indices, score descending
  std::vector<double> prefix;  // prefix sums of ordered scores

  std::vector<int> cov_o, cov_v;
  std::vector<int> rem_o, rem_v;  // candidates at or after the cursor per bin
  int uncovered_o = 0, uncovered_v = 0;

  std::vector<int> chosen;
  double best_score = -std::numeric_limits<double>::infinity();
  bool has_best = false;
  std::vector<std::string> best_ids;
  std::vector<int> best_set;

  ExactSolver(const std::vector<ScoredSequence>& p, const BinIndex& b, int target)
      : pool(p), bins(b), u(target) {
    int n = static_cast<int>(pool.size());
    order.resize(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b2) {
      double sa = pool[a].score(), sb = pool[b2].score();
      return sa > sb || (sa == sb && pool[a].id < pool[b2].id);
    });
    prefix.resize(n + 1, 0.0);
    for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + pool[order[i]].score();

    cov_o.assign(bins.o_bins.size(), 0);
    cov_v.assign(bins.v_bins.size(), 0);
    rem_o.assign(bins.o_bins.size(), 0);
    rem_v.assign(bins.v_bins.size(), 0);
    for (int i = 0; i < n; ++i) {
      ++rem_o[bins.o_of[i]];
      ++rem_v[bins.v_of[i]];
    }
    uncovered_o = static_cast<int>(bins.o_bins.size());
    uncovered_v = static_cast<int>(bins.v_bins.size());
  }

  void record(double score) {
    std::vector<std::string> ids = sorted_ids(pool, chosen);
    if (!has_best || score > best_score || (score == best_score && ids < best_ids)) {
      has_best = true;
      best_score = score;
      best_ids = std::move(ids);
      best_set = chosen;
    }
  }

  void dfs(int pos, double score) {
    int count = static_cast<int>(chosen.size());
    if (count == u) {
      if (uncovered_o == 0 && uncovered_v == 0) record(score);
      return;
    }
    int n = static_cast<int>(order.size());
    int need = u - count;
    if (need > n - pos) return;
    if (uncovered_o > need || uncovered_v > need) return;
    if (has_best && score + prefix[pos + need] - prefix[pos] < best_score) return;

    int idx = order[pos];
    int ob = bins.o_of[idx], vb = bins.v_of[idx];

    // Include branch first so strong incumbents appear early.
    chosen.push_back(idx);
    if (cov_o[ob]++ == 0) --uncovered_o;
    if (cov_v[vb]++ == 0) --uncovered_v;
    --rem_o[ob];
    --rem_v[vb];
    dfs(pos + 1, score + pool[idx].score());
    chosen.pop_back();
    if (--cov_o[ob] == 0) ++uncovered_o;
    if (--cov_v[vb] == 0) ++uncovered_v;

    // Exclude branch; an uncovered bin with no remaining candidates is dead.
    bool dead = (cov_o[ob] == 0 && rem_o[ob] == 0) || (cov_v[vb] == 0 && rem_v[vb] == 0);
    if (!dead) dfs(pos + 1, score);
    ++rem_o[ob];
    ++rem_v[vb];
  }
};

struct GreedySolver {
  const std::vector<ScoredSequence>& pool;
  const BinIndex& bins;
  int u;

  std::vector<int> by_score;
  std::vector<char> selected;
  std::vector<int> cov_o, cov_v;

  GreedySolver(const std::vector<ScoredSequence>& p, const BinIndex& b, int target)
      : pool(p), bins(b), u(target) {
    int n = static_cast<int>(pool.size());
    by_score.resize(n);
    for (int i = 0; i < n; ++i) by_score[i] = i;
    std::sort(by_score.begin(), by_score.end(), [&](int a, int b2) {
      double sa = pool[a].score(), sb = pool[b2].score();
      return sa > sb || (sa == sb && pool[a].id < pool[b2].id);
    });
    selected.assign(n, 0);
    cov_o.assign(bins.o_bins.size(), 0);
    cov_v.assign(bins.v_bins.size(), 0);
  }

  void add(int i) {
    selected[i] = 1;
    ++cov_o[bins.o_of[i]];
    ++cov_v[bins.v_of[i]];
  }
  void remove(int i) {
    selected[i] = 0;
    --cov_o[bins.o_of[i]];
    --cov_v[bins.v_of[i]];
  }
  int count() const {
    int c = 0;
    for (char s : selected) c += s;
    return c;
  }
  bool removable(int i) const {
    return cov_o[bins.o_of[i]] > 1 && cov_v[bins.v_of[i]] > 1;
  }

  bool solve(std::vector<int>* out) {
    // Cover each axis bin with its best candidate, cheapest cover first.
    for (size_t b = 0; b < bins.o_bins.size(); ++b) {
      for (int i : by_score)
        if (bins.o_of[i] == static_cast<int>(b) && !selected[i]) {
          add(i);
          break;
        }
    }
    for (size_t b = 0; b < bins.v_bins.size(); ++b) {
      if (cov_v[b] > 0) continue;
      for (int i : by_score)
        if (bins.v_of[i] == static_cast<int>(b) && !selected[i]) {
          add(i);
          break;
        }
    }

    // Shed redundant low scorers while above the target size.
    while (count() > u) {
      bool shed = false;
      for (auto it = by_score.rbegin(); it != by_score.rend(); ++it) {
        if (selected[*it] && removable(*it)) {
          remove(*it);
          shed = true;
          break;
        }
      }
      if (!shed) return false;
    }

    // Fill the rest by score.
    for (int i : by_score) {
      if (count() >= u) break;
      if (!selected[i]) add(i);
    }

    // Coverage-preserving improvement swaps until a fixed point.
    for (int pass = 0; pass < 16; ++pass) {
      bool improved = false;
      for (auto out_it = by_score.rbegin(); out_it != by_score.rend(); ++out_it) {
        int worst = *out_it;
        if (!selected[worst]) continue;
        for (int cand : by_score) {
          if (selected[cand]) continue;
          if (pool[cand].score() <= pool[worst].score()) break;
          remove(worst);
          add(cand);
          bool ok = true;
          for (int c : cov_o)
            if (c == 0) ok = false;
          for (int c : cov_v)
            if (c == 0) ok = false;
          if (ok) {
            improved = true;
            break;
          }
          remove(cand);
          add(worst);
        }
      }
      if (!improved) break;
    }

    out->clear();
    for (size_t i = 0; i < selected.size(); ++i)
      if (selected[i]) out->push_back(static_cast<int>(i));
    return true;
  }
};

}  // namespace

int minimal_feasible_u(const std::vector<ScoredSequence>& pool, int, int) {
  BinIndex bins(pool);
  int matching = max_bin_matching(bins, pool);
  return static_cast<int>(bins.o_bins.size() + bins.v_bins.size()) - matching;
}

ItssResult select_itss(const std::vector<ScoredSequence>& pool, const ItssConfig& cfg) {
  if (pool.empty()) fail(ErrorKind::invalid_argument, "select_itss: empty pool");
  int n = static_cast<int>(pool.size());
  if (cfg.u < 1) fail(ErrorKind::infeasible, "select_itss: u must be at least 1");
  if (cfg.u > n) {
    fail(ErrorKind::infeasible, "select_itss: u=" + std::to_string(cfg.u) +
                                    " exceeds the pool size " + std::to_string(n));
  }

  BinIndex bins(pool);
  int min_u = static_cast<int>(bins.o_bins.size() + bins.v_bins.size()) -
              max_bin_matching(bins, pool);

  ItssResult res;
  res.min_feasible_u = min_u;
  if (cfg.u < min_u) {
    fail(ErrorKind::infeasible, "select_itss: u=" + std::to_string(cfg.u) +
                                    " cannot cover every non-empty bin; minimal feasible u is " +
                                    std::to_string(min_u));
  }

  std::vector<int> picked;
  if (n <= 24) {
    ExactSolver solver(pool, bins, cfg.u);
    solver.dfs(0, 0.0);
    if (!solver.has_best) fail(ErrorKind::internal, "select_itss: search found no solution");
    picked = solver.best_set;
    res.exact = true;
  } else {
    GreedySolver solver(pool, bins, cfg.u);
    if (!solver.solve(&picked)) {
      // Rare stall: fall back to the exact search rather than fail.
      ExactSolver exact(pool, bins, cfg.u);
      exact.dfs(0, 0.0);
      if (!exact.has_best) fail(ErrorKind::internal, "select_itss: search found no solution");
      picked = exact.best_set;
    }
    res.exact = false;
  }

  for (int i : picked) res.objective += pool[i].score();
  res.selected = sorted_ids(pool, picked);
  return res;
}

}  // namespace activelo
