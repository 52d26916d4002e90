#pragma once

#include <string>

namespace activelo {

// Epoch accounting for curating with the active loop versus training on the
// whole pool. One unit is one sequence-epoch.
struct BudgetParams {
  int n_total = 69;   // pool size
  int n_init = 6;     // initial selection
  int h = 5;          // admitted per round
  int e_init = 15;    // epochs on the initial selection
  int e_round = 5;    // epochs per retraining round
  int e_full = 50;    // epochs for the full-pool baseline
};

// n_total * e_full.
long long cost_full(const BudgetParams& p);

// Initial training plus `rounds` retrainings, each on the grown selection:
// n_init * e_init + sum over itr=1..rounds of (n_init + h*itr) * e_round.
long long cost_active_train(const BudgetParams& p, int rounds);

// Scoring passes over what remains: one pass before any admission plus one
// after each of `rounds` admission rounds, the remainder shrinking by h each
// time. A negative remainder is an error.
long long cost_active_infer(const BudgetParams& p, int rounds);

struct CostReport {
  BudgetParams params;
  int train_rounds = 0;
  int infer_rounds = 0;
  long long full = 0;
  long long train = 0;
  long long infer = 0;
  long long total = 0;      // train + infer
  int selected = 0;         // n_init + h * infer_rounds
  double fraction = 0.0;    // selected / n_total
};

CostReport make_cost_report(const BudgetParams& p, int train_rounds, int infer_rounds);

// Human-readable summary, one line per figure plus the selected share.
std::string cost_report_text(const CostReport& r);

}  // namespace activelo
