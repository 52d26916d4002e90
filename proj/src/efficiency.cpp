#include "activelo/efficiency.hpp"

#include <cstdio>
#include <sstream>

#include "activelo/util.hpp"

namespace activelo {

namespace {
void validate(const BudgetParams& p) {
  if (p.n_total < 1 || p.n_init < 1 || p.n_init > p.n_total)
    fail(ErrorKind::invalid_argument, "budget: need 1 <= n_init <= n_total");
  if (p.h < 1) fail(ErrorKind::invalid_argument, "budget: h must be at least 1");
  if (p.e_init < 0 || p.e_round < 0 || p.e_full < 0)
    fail(ErrorKind::invalid_argument, "budget: epoch counts must be non-negative");
}
}  // namespace

long long cost_full(const BudgetParams& p) {
  validate(p);
  return static_cast<long long>(p.n_total) * p.e_full;
}

long long cost_active_train(const BudgetParams& p, int rounds) {
  validate(p);
  if (rounds < 0) fail(ErrorKind::invalid_argument, "budget: negative round count");
  long long cost = static_cast<long long>(p.n_init) * p.e_init;
  for (int itr = 1; itr <= rounds; ++itr)
    cost += static_cast<long long>(p.n_init + p.h * itr) * p.e_round;
  return cost;
}

long long cost_active_infer(const BudgetParams& p, int rounds) {
  validate(p);
  if (rounds < 0) fail(ErrorKind::invalid_argument, "budget: negative round count");
  long long cost = 0;
  for (int itr = 0; itr <= rounds; ++itr) {
    long long remaining = p.n_total - p.n_init - static_cast<long long>(p.h) * itr;
    if (remaining < 0)
      fail(ErrorKind::invalid_argument,
           "budget: round " + std::to_string(itr) + " has no sequences left to score");
    cost += remaining;
  }
  return cost;
}

CostReport make_cost_report(const BudgetParams& p, int train_rounds, int infer_rounds) {
  CostReport r;
  r.params = p;
  r.train_rounds = train_rounds;
  r.infer_rounds = infer_rounds;
  r.full = cost_full(p);
  r.train = cost_active_train(p, train_rounds);
  r.infer = cost_active_infer(p, infer_rounds);
  r.total = r.train + r.infer;
  r.selected = p.n_init + p.h * infer_rounds;
  if (r.selected > p.n_total)
    fail(ErrorKind::invalid_argument, "budget: selection exceeds the pool");
  r.fraction = static_cast<double>(r.selected) / p.n_total;
  return r;
}

std::string cost_report_text(const CostReport& r) {
  std::ostringstream out;
  out << "epoch cost, full training:    " << r.full << "\n";
  out << "epoch cost, active training:  " << r.train << "\n";
  out << "epoch cost, active inference: " << r.infer << "\n";
  out << "epoch cost, active total:     " << r.total << "\n";
  char pct[32];
  std::snprintf(pct, sizeof(pct), "%.1f", 100.0 * r.fraction);
  out << "selected " << r.selected << "/" << r.params.n_total << " sequences (" << pct
      << "%)\n";
  return out.str();
}

}  // namespace activelo
