#include <doctest.h>

#include <string>

#include "activelo/efficiency.hpp"
#include "oracles.hpp"

using namespace activelo;

TEST_SUITE("efficiency") {

TEST_CASE("default budget figures") {
  BudgetParams p;
  CHECK(cost_full(p) == 3450);
  CHECK(cost_active_train(p, 7) == 1000);
  CHECK(cost_active_infer(p, 6) == 336);
  CHECK(cost_active_train(p, 0) == 90);
  CHECK(cost_active_infer(p, 0) == 63);

  CostReport r = make_cost_report(p, 7, 6);
  CHECK(r.total == 1336);
  CHECK(r.selected == 36);
  CHECK(r.fraction == 36.0 / 69.0);

  std::string text = cost_report_text(r);
  CHECK(text.find("3450") != std::string::npos);
  CHECK(text.find("1000") != std::string::npos);
  CHECK(text.find("336") != std::string::npos);
  CHECK(text.find("1336") != std::string::npos);
  CHECK(text.find("selected 36/69 sequences (52.2%)") != std::string::npos);
}

TEST_CASE("small budget by hand") {
  BudgetParams p;
  p.n_total = 10;
  p.n_init = 2;
  p.h = 2;
  p.e_init = 3;
  p.e_round = 2;
  p.e_full = 4;
  CHECK(cost_full(p) == 40);
  // 2*3, then rounds on 4 and 6 sequences at 2 epochs each
  CHECK(cost_active_train(p, 2) == 26);
  // remainders 8, 6, 4
  CHECK(cost_active_infer(p, 2) == 18);
  CostReport r = make_cost_report(p, 2, 2);
  CHECK(r.selected == 6);
  CHECK(r.total == 44);
}

TEST_CASE("budget guards") {
  BudgetParams p;
  CHECK(oracle::thrown_kind([&] { cost_active_train(p, -1); }) ==
        ErrorKind::invalid_argument);
  CHECK(oracle::thrown_kind([&] { cost_active_infer(p, -1); }) ==
        ErrorKind::invalid_argument);
  // the remainder goes negative at round 13 with the default pool
  CHECK(oracle::thrown_kind([&] { cost_active_infer(p, 13); }) ==
        ErrorKind::invalid_argument);
  CHECK(cost_active_infer(p, 12) > 0);

  BudgetParams bad = p;
  bad.n_init = 0;
  CHECK(oracle::thrown_kind([&] { cost_full(bad); }) == ErrorKind::invalid_argument);
  bad = p;
  bad.n_init = 70;
  CHECK(oracle::thrown_kind([&] { cost_full(bad); }) == ErrorKind::invalid_argument);
  bad = p;
  bad.h = 0;
  CHECK(oracle::thrown_kind([&] { cost_full(bad); }) == ErrorKind::invalid_argument);
  bad = p;
  bad.e_round = -1;
  CHECK(oracle::thrown_kind([&] { cost_full(bad); }) == ErrorKind::invalid_argument);
  CHECK(oracle::thrown_kind([&] { make_cost_report(p, 7, 13); }) ==
        ErrorKind::invalid_argument);
}

}  // TEST_SUITE
