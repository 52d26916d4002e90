#include <doctest.h>

#include <json.hpp>

#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "activelo/config.hpp"
#include "activelo/runner.hpp"
#include "activelo/util.hpp"
#include "oracles.hpp"

using namespace activelo;
using doctest::Approx;

namespace {

FeatureRow make_row(std::string id, Weather w, double s_o, double v_mean,
                    double score_bias) {
  FeatureRow r;
  r.id = std::move(id);
  r.weather = w;
  r.features.edge_count = 2;
  r.features.theta_mean = 1.0 + score_bias;
  r.features.theta_std = 0.1;
  r.features.speed_mean = v_mean;
  r.features.speed_std = 0.2;
  r.features.length_mean = 30.0;
  r.features.length_std = 3.0;
  r.features.outlier_proportion = s_o;
  r.features.turn_energy = score_bias;
  r.features.total_length = 60.0;
  return r;
}

SequenceRecord tiny_synth(const std::string& id, uint64_t seed, double speed,
                          double turn, double clutter) {
  SynthSpec spec;
  spec.frame_rate = 10.0;
  spec.segments = {{3.0, speed, 0.0}, {3.0, speed, turn}};
  spec.clutter_fraction = clutter;
  return synth_sequence(spec, seed, id);
}

std::string run_manifest_json() {
  nlohmann::ordered_json m;
  m["sequences"] = nlohmann::ordered_json::array();
  double speeds[6] = {1.0, 1.5, 2.0, 2.5, 3.0, 2.0};
  double turns[6] = {0.0, 30.0, 45.0, 60.0, 90.0, 45.0};
  double clutter[6] = {0.0, 0.1, 0.2, 0.3, 0.35, 0.2};
  for (int i = 0; i < 6; ++i) {
    nlohmann::ordered_json seq;
    seq["id"] = "s" + std::to_string(i);
    seq["weather"] = i == 5 ? "snowy" : "general";
    seq["synthetic"] = {
        {"seed", i + 1},
        {"clutter_fraction", clutter[i]},
        {"segments", {{{"length", 6.0}, {"speed", speeds[i]}, {"turn_deg", turns[i]}}}}};
    m["sequences"].push_back(seq);
  }
  return m.dump(2) + "\n";
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("feature table survives a round trip, quoting included") {
  std::vector<FeatureRow> rows;
  rows.push_back(make_row("plain", Weather::general, 0.1, 3.5, 0.0));
  rows.push_back(make_row("odd,id\"x", Weather::snowy, 1e-17, -2.25, 0.5));
  rows[0].features.theta_mean = std::numbers::pi;

  std::string csv = features_to_csv(rows);
  CHECK(csv.rfind("id,weather,m,theta_mean", 0) == 0);
  CHECK(csv.find("\"odd,id\"\"x\"") != std::string::npos);

  std::vector<FeatureRow> back = features_from_csv(csv);
  REQUIRE(back.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(back[i].id == rows[i].id);
    CHECK(back[i].weather == rows[i].weather);
    CHECK(back[i].features.edge_count == rows[i].features.edge_count);
    CHECK(back[i].features.theta_mean == rows[i].features.theta_mean);
    CHECK(back[i].features.outlier_proportion == rows[i].features.outlier_proportion);
    CHECK(back[i].features.speed_mean == rows[i].features.speed_mean);
    CHECK(back[i].features.total_length == rows[i].features.total_length);
  }
  CHECK(features_to_csv(back) == csv);

  // blank lines and CR line endings are tolerated
  std::string crlf;
  for (char c : csv) crlf += (c == '\n') ? std::string("\r\n") : std::string(1, c);
  crlf += "\r\n\r\n";
  CHECK(features_from_csv(crlf).size() == 2);
}

TEST_CASE("feature table parse failures name the line") {
  std::string good = features_to_csv({make_row("a", Weather::general, 0.125, 2.0, 0.0)});

  std::string msg = oracle::thrown_message([&] { features_from_csv("id,bogus\n"); });
  CHECK(msg.find("expected header") != std::string::npos);

  std::string short_line = good + "b,general,1,2,3\n";
  msg = oracle::thrown_message([&] { features_from_csv(short_line); });
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("expected 12 fields, got 5") != std::string::npos);

  std::string bad_num = good;
  bad_num.replace(bad_num.find("0.125"), 5, "xyz");
  msg = oracle::thrown_message([&] { features_from_csv(bad_num); });
  CHECK(msg.find("bad s_o value 'xyz'") != std::string::npos);

  std::string bad_weather = good;
  bad_weather.replace(bad_weather.find("general"), 7, "drizzle");
  CHECK(oracle::thrown_kind([&] { features_from_csv(bad_weather); }) ==
        ErrorKind::parse);

  msg = oracle::thrown_message(
      [&] { features_from_csv(std::string(good) + "\"open,general,2,0,0,1,0,30,3,0.1,0,60\n"); });
  CHECK(msg.find("unbalanced quote") != std::string::npos);
}

TEST_CASE("cmd_analyze keeps going past broken sequences") {
  SamplePool pool;
  pool.sequences.push_back(tiny_synth("ok0", 3, 2.0, std::numbers::pi / 2, 0.2));
  SequenceRecord bad = oracle::record_from_positions(
      {Vec3(0, 0, 0), Vec3(0.2, 0, 0), Vec3(0.4, 0, 0)}, 10.0, "no-clouds");
  pool.sequences.push_back(bad);
  pool.sequences.push_back(tiny_synth("ok1", 4, 1.0, std::numbers::pi / 4, 0.1));

  RunConfig cfg;
  cfg.workers = 2;
  AnalyzeResult res = cmd_analyze(pool, cfg);
  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[0].id == "ok0");
  CHECK(res.rows[1].id == "ok1");
  CHECK(res.rows[0].features.edge_count >= 1);
  CHECK(res.rows[0].features.outlier_proportion > 0.0);
  REQUIRE(res.failures.size() == 1);
  CHECK(res.failures[0].id == "no-clouds");
  CHECK_FALSE(res.failures[0].message.empty());
}

TEST_CASE("cmd_itss scores only the general-weather rows") {
  std::vector<FeatureRow> rows;
  double so[6] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  double v[6] = {1, 2, 3, 4, 5, 6};
  for (int i = 0; i < 6; ++i)
    rows.push_back(make_row("g" + std::to_string(i), Weather::general, so[i], v[i],
                            0.1 * i));
  rows.push_back(make_row("snow", Weather::snowy, 0.9, 9.0, 5.0));

  RunConfig cfg;
  cfg.itss.u = 3;
  cfg.itss.bins_outlier = 3;
  cfg.itss.bins_speed = 3;
  ItssCommandResult out = cmd_itss(rows, cfg);

  REQUIRE(out.scored.size() == 6);
  for (const ScoredSequence& s : out.scored) CHECK(s.id != "snow");
  for (int i = 0; i < 6; ++i) {
    CHECK(out.scored[i].id == "g" + std::to_string(i));
    CHECK(out.scored[i].bin_outlier == i / 2);
    CHECK(out.scored[i].bin_speed == i / 2);
  }

  REQUIRE(out.result.selected.size() == 3);
  double total = 0.0;
  std::set<int> bo, bv;
  for (const std::string& id : out.result.selected) {
    for (const ScoredSequence& s : out.scored)
      if (s.id == id) {
        total += s.score();
        bo.insert(s.bin_outlier);
        bv.insert(s.bin_speed);
      }
  }
  CHECK(out.result.objective == Approx(total).epsilon(1e-12));
  CHECK(bo == std::set<int>{0, 1, 2});
  CHECK(bv == std::set<int>{0, 1, 2});

  std::vector<FeatureRow> only_snow = {rows.back()};
  CHECK(oracle::thrown_kind([&] { cmd_itss(only_snow, cfg); }) ==
        ErrorKind::invalid_argument);
}

TEST_CASE("cmd_ais needs a seed and repeats bit for bit") {
  SamplePool pool;
  pool.sequences.push_back(tiny_synth("a0", 7, 2.0, std::numbers::pi / 2, 0.1));
  pool.sequences.push_back(tiny_synth("a1", 8, 1.5, std::numbers::pi / 4, 0.3));
  pool.sequences.push_back(tiny_synth("a2", 9, 2.5, -std::numbers::pi / 2, 0.2));

  RunConfig cfg;
  cfg.predictor = "noisy:0.01,0.02";
  cfg.ais.h = 1;
  cfg.ais.iterations = 2;
  cfg.ais.stride = 4;
  cfg.ais.aug.count = 3;

  CHECK(oracle::thrown_kind([&] { cmd_ais(pool, cfg, {"a0"}); }) ==
        ErrorKind::invalid_argument);

  cfg.seed = 9;
  cfg.has_seed = true;
  AisResult one = cmd_ais(pool, cfg, {"a0"});
  AisResult two = cmd_ais(pool, cfg, {"a0"});
  REQUIRE(one.rounds.size() == 2);
  CHECK(one.selected.size() == 3);
  CHECK(one.selected_round == std::vector<int>{0, 1, 2});
  CHECK(one.selected == two.selected);
  REQUIRE(two.rounds.size() == 2);
  for (size_t r = 0; r < one.rounds.size(); ++r) {
    REQUIRE(one.rounds[r].losses.size() == two.rounds[r].losses.size());
    for (size_t i = 0; i < one.rounds[r].losses.size(); ++i) {
      CHECK(one.rounds[r].losses[i].loss == two.rounds[r].losses[i].loss);
      CHECK(one.rounds[r].losses[i].recon == two.rounds[r].losses[i].recon);
      CHECK(one.rounds[r].losses[i].incon == two.rounds[r].losses[i].incon);
    }
  }
}

TEST_CASE("cmd_run writes a reproducible artifact set") {
  oracle::TempDir dir("activelo-run");
  write_text_file(dir.str("manifest.json"), run_manifest_json());

  nlohmann::ordered_json c;
  c["manifest"] = dir.str("manifest.json");
  c["seed"] = 4;
  c["workers"] = 2;
  c["predictor"] = "noisy:0.005,0.01";
  c["itss"] = {{"u", 4}, {"bins_outlier", 2}, {"bins_speed", 2}};
  c["ais"] = {{"h", 1},
              {"iterations", 1},
              {"stride", 4},
              {"augmentations", {{"count", 3}}}};
  RunConfig cfg = parse_run_config(c.dump());

  RunResult r1 = cmd_run(cfg, dir.str("out1"));
  RunResult r2 = cmd_run(cfg, dir.str("out2"));

  std::vector<std::string> expected = {"config_snapshot.json", "features.csv",
                                       "itss.json",            "ais_round_1.json",
                                       "ais.json",             "selection.txt",
                                       "report.json"};
  CHECK(r1.artifacts == expected);
  CHECK(r2.artifacts == expected);
  for (const std::string& name : expected) {
    std::string a = read_text_file(dir.str("out1/" + name));
    std::string b = read_text_file(dir.str("out2/" + name));
    CHECK(a == b);
    CHECK_FALSE(a.empty());
  }

  CHECK(r1.itss.result.selected.size() == 4);
  CHECK(r1.ais.rounds.size() == 1);
  CHECK(r1.ais.selected.size() == 5);

  // selection order: the four initial picks at round 0, the admission at 1
  std::string sel = read_text_file(dir.str("out1/selection.txt"));
  CHECK(sel.rfind("id,round\n", 0) == 0);
  CHECK(sel.find(",1\n") != std::string::npos);

  nlohmann::json report = nlohmann::json::parse(read_text_file(dir.str("out1/report.json")));
  CHECK(report["params"]["n_total"] == 6);
  CHECK(report["params"]["n_init"] == 4);
  CHECK(report["train_rounds"] == 2);
  CHECK(report["infer_rounds"] == 1);
  CHECK(report["cost_full"] == 300);
  CHECK(report["cost_train"] == 115);
  CHECK(report["cost_infer"] == 3);
  CHECK(report["cost_total"] == 118);
  CHECK(report["selected"] == 5);
  CHECK(report["fraction"].get<double>() == Approx(5.0 / 6.0).epsilon(1e-12));

  nlohmann::json itss = nlohmann::json::parse(read_text_file(dir.str("out1/itss.json")));
  CHECK(itss["selected"].size() == 4);
  CHECK(itss["scored"].size() == 5);  // the snowy sequence is not scored
}

TEST_CASE("cmd_run refuses incomplete configs and broken pools") {
  oracle::TempDir dir("activelo-runbad");
  RunConfig cfg;
  cfg.seed = 1;
  cfg.has_seed = true;
  CHECK(oracle::thrown_kind([&] { cmd_run(cfg, dir.str("o")); }) ==
        ErrorKind::invalid_argument);

  cfg.manifest = dir.str("manifest.json");
  cfg.has_seed = false;
  CHECK(oracle::thrown_kind([&] { cmd_run(cfg, dir.str("o")); }) ==
        ErrorKind::invalid_argument);

  // a pose-only sequence cannot be scanned for outliers, which sinks the run
  write_text_file(dir.str("p0.txt"),
                  "1 0 0 0 0 1 0 0 0 0 1 0\n"
                  "1 0 0 1 0 1 0 0 0 0 1 0\n"
                  "1 0 0 2 0 1 0 0 0 0 1 0\n");
  nlohmann::ordered_json m;
  m["sequences"] = {{{"id", "p0"}, {"pose_file", "p0.txt"}}};
  write_text_file(dir.str("manifest.json"), m.dump());
  cfg.has_seed = true;
  std::string msg = oracle::thrown_message([&] { cmd_run(cfg, dir.str("o")); });
  CHECK(msg.find("feature extraction failed") != std::string::npos);
  CHECK(msg.find("'p0'") != std::string::npos);
}

TEST_CASE("run config parses strictly") {
  RunConfig def = parse_run_config("{}");
  CHECK(def.predictor == "icp");
  CHECK_FALSE(def.has_seed);
  CHECK(def.ais.h == 5);
  CHECK(def.report_train_rounds == 7);
  CHECK(def.report_infer_rounds == 6);

  RunConfig cfg = parse_run_config(R"({
    "seed": 7,
    "segmentation": {"turn_threshold_deg": 45.0},
    "ais": {"augmentations": {"count": 4, "alpha": 0.2}},
    "icp": {"gate": 0.8},
    "budget": {"e_full": 60},
    "report": {"train_rounds": 3, "infer_rounds": 2}
  })");
  CHECK(cfg.has_seed);
  CHECK(cfg.seed == 7);
  CHECK(cfg.segmentation.turn_threshold ==
        Approx(std::numbers::pi / 4).epsilon(1e-12));
  CHECK(cfg.ais.aug.count == 4);
  CHECK(cfg.ais.aug.alpha == 0.2);
  CHECK(cfg.icp.gate == 0.8);
  CHECK(cfg.budget.e_full == 60);
  CHECK(cfg.report_train_rounds == 3);
  CHECK(cfg.report_infer_rounds == 2);

  std::string msg =
      oracle::thrown_message([] { parse_run_config(R"({"frobnicate": 1})"); });
  CHECK(msg.find("unknown key 'frobnicate'") != std::string::npos);
  msg = oracle::thrown_message(
      [] { parse_run_config(R"({"ais": {"epochs": 3}})"); });
  CHECK(msg.find("unknown key 'epochs'") != std::string::npos);
  CHECK(msg.find("'ais'") != std::string::npos);

  CHECK(oracle::thrown_kind([] { parse_run_config(R"({"itss": {"u": "six"}})"); }) ==
        ErrorKind::parse);
  CHECK(oracle::thrown_kind([] { parse_run_config(R"({"seed": -5})"); }) ==
        ErrorKind::parse);
  CHECK(oracle::thrown_kind([] { parse_run_config(R"({"seed": 1.5})"); }) ==
        ErrorKind::parse);
  CHECK(oracle::thrown_kind([] { parse_run_config("[1,2]"); }) == ErrorKind::parse);
  CHECK(oracle::thrown_kind([] { parse_run_config("{nope"); }) == ErrorKind::parse);
  CHECK(oracle::thrown_kind(
            [] { parse_run_config(R"({"itss": {"normalize": "yes"}})"); }) ==
        ErrorKind::parse);

  CHECK(oracle::thrown_kind([] { load_run_config("/nonexistent/config.json"); }) ==
        ErrorKind::io);
}

TEST_CASE("config snapshot is stable and complete") {
  RunConfig cfg = parse_run_config(R"({"seed": 9, "segmentation": {"turn_threshold_deg": 25.0}})");
  std::string snap1 = config_snapshot_text(cfg);
  std::string snap2 = config_snapshot_text(cfg);
  CHECK(snap1 == snap2);
  CHECK(snap1.back() == '\n');

  nlohmann::json j = nlohmann::json::parse(snap1);
  CHECK(j["version"] == kVersion);
  CHECK(j["seed"] == 9);
  CHECK(j["segmentation"]["turn_threshold_deg"].get<double>() == Approx(25.0).epsilon(1e-12));
  CHECK(j["predictor"] == "icp");
  CHECK(j["ais"]["augmentations"]["count"] == 8);

  nlohmann::json unseeded = nlohmann::json::parse(config_snapshot_text(parse_run_config("{}")));
  CHECK(unseeded["seed"].is_null());
}

TEST_CASE("selection text quotes awkward ids") {
  AisResult r;
  r.selected = {"a", "x,y"};
  r.selected_round = {0, 1};
  CHECK(selection_text(r) == "id,round\na,0\n\"x,y\",1\n");
}

}  // TEST_SUITE
