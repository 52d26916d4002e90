#include "activelo/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <sstream>

#include "activelo/rng.hpp"
#include "activelo/trajgraph.hpp"
#include "activelo/util.hpp"

namespace fs = std::filesystem;

namespace activelo {

namespace {

const char* kCsvHeader =
    "id,weather,m,theta_mean,theta_std,v_mean,v_std,l_mean,l_std,s_o,"
    "turn_energy,length_total";

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted)
    fail(ErrorKind::parse, "feature table line " + std::to_string(line_no) +
                               ": unbalanced quote");
  fields.push_back(cur);
  return fields;
}

double parse_field_double(const std::string& s, int line_no, const char* name) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::parse, "feature table line " + std::to_string(line_no) + ": bad " +
                               name + " value '" + s + "'");
  }
}

int parse_field_int(const std::string& s, int line_no, const char* name) {
  try {
    size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::parse, "feature table line " + std::to_string(line_no) + ": bad " +
                               name + " value '" + s + "'");
  }
}

}  // namespace

std::string features_to_csv(const std::vector<FeatureRow>& rows) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const FeatureRow& r : rows) {
    const SequenceFeatures& f = r.features;
    out << csv_escape(r.id) << ',' << weather_name(r.weather) << ',' << f.edge_count
        << ',' << format_double(f.theta_mean) << ',' << format_double(f.theta_std) << ','
        << format_double(f.speed_mean) << ',' << format_double(f.speed_std) << ','
        << format_double(f.length_mean) << ',' << format_double(f.length_std) << ','
        << format_double(f.outlier_proportion) << ',' << format_double(f.turn_energy)
        << ',' << format_double(f.total_length) << "\n";
  }
  return out.str();
}

std::vector<FeatureRow> features_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<FeatureRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kCsvHeader)
        fail(ErrorKind::parse, std::string("feature table: expected header '") +
                                   kCsvHeader + "'");
      continue;
    }
    std::vector<std::string> f = split_csv_line(line, line_no);
    if (f.size() != 12)
      fail(ErrorKind::parse, "feature table line " + std::to_string(line_no) +
                                 ": expected 12 fields, got " + std::to_string(f.size()));
    FeatureRow row;
    row.id = f[0];
    try {
      row.weather = weather_from_name(f[1]);
    } catch (const Error& e) {
      fail(ErrorKind::parse,
           "feature table line " + std::to_string(line_no) + ": " + e.what());
    }
    row.features.edge_count = parse_field_int(f[2], line_no, "m");
    row.features.theta_mean = parse_field_double(f[3], line_no, "theta_mean");
    row.features.theta_std = parse_field_double(f[4], line_no, "theta_std");
    row.features.speed_mean = parse_field_double(f[5], line_no, "v_mean");
    row.features.speed_std = parse_field_double(f[6], line_no, "v_std");
    row.features.length_mean = parse_field_double(f[7], line_no, "l_mean");
    row.features.length_std = parse_field_double(f[8], line_no, "l_std");
    row.features.outlier_proportion = parse_field_double(f[9], line_no, "s_o");
    row.features.turn_energy = parse_field_double(f[10], line_no, "turn_energy");
    row.features.total_length = parse_field_double(f[11], line_no, "length_total");
    rows.push_back(std::move(row));
  }
  return rows;
}

AnalyzeResult cmd_analyze(const SamplePool& pool, const RunConfig& cfg) {
  int n = pool.size();
  std::vector<std::optional<FeatureRow>> rows(n);
  std::vector<std::optional<AnalyzeFailure>> failures(n);
  parallel_for(n, cfg.workers, [&](int i) {
    const SequenceRecord& seq = pool.sequences[i];
    try {
      FeatureRow row;
      row.id = seq.id;
      row.weather = seq.weather;
      row.features = extract_features(seq, cfg.segmentation, cfg.outlier_epsilon, true);
      rows[i] = std::move(row);
    } catch (const Error& e) {
      failures[i] = AnalyzeFailure{seq.id, e.what()};
    }
  });

  AnalyzeResult res;
  for (int i = 0; i < n; ++i) {
    if (rows[i]) res.rows.push_back(std::move(*rows[i]));
    if (failures[i]) res.failures.push_back(std::move(*failures[i]));
  }
  return res;
}

ItssCommandResult cmd_itss(const std::vector<FeatureRow>& rows, const RunConfig& cfg) {
  std::vector<const FeatureRow*> general;
  for (const FeatureRow& r : rows)
    if (r.weather == Weather::general) general.push_back(&r);
  if (general.empty())
    fail(ErrorKind::invalid_argument, "no general-weather sequences in the feature table");

  std::vector<SequenceFeatures> feats;
  feats.reserve(general.size());
  double pool_length = 0.0;
  for (const FeatureRow* r : general) {
    feats.push_back(r->features);
    pool_length += r->features.total_length;
  }
  PoolStats stats = compute_pool_stats(feats);

  ItssCommandResult out;
  ItssConfig icfg = cfg.itss;
  icfg.weights = cfg.weights;
  for (const FeatureRow* r : general) {
    ScoredSequence s;
    s.id = r->id;
    s.f_var = variability(r->features, icfg.weights, icfg.normalize ? &stats : nullptr);
    s.f_impor = importance_from_features(r->features, pool_length, icfg.weights);
    s.s_o = r->features.outlier_proportion;
    s.speed_mean = r->features.speed_mean;
    out.scored.push_back(std::move(s));
  }
  assign_bins(out.scored, icfg.bins_outlier, icfg.bins_speed);
  out.result = select_itss(out.scored, icfg);
  return out;
}

AisResult cmd_ais(const SamplePool& pool, const RunConfig& cfg,
                  const std::vector<std::string>& initial) {
  if (!cfg.has_seed)
    fail(ErrorKind::invalid_argument, "config: 'seed' is required for active selection");
  AisConfig acfg = cfg.ais;
  acfg.workers = cfg.workers;
  acfg.aug.seed = mix_seed(cfg.seed, 1);

  PredictorSpec spec = parse_predictor_spec(cfg.predictor);
  std::shared_ptr<const Predictor> predictor =
      make_predictor(spec, &pool, mix_seed(cfg.seed, 2), cfg.icp);

  // Stateless stand-in for retraining: every round scores with the same
  // predictor. A learned model would rebuild itself from `selected` here.
  TrainingHook hook = [&predictor](int, const std::vector<std::string>&) {
    return predictor;
  };
  return run_active_loop(pool, initial, acfg, hook);
}

nlohmann::ordered_json itss_to_json(const ItssCommandResult& r) {
  nlohmann::ordered_json j;
  j["selected"] = r.result.selected;
  j["objective"] = r.result.objective;
  j["exact"] = r.result.exact;
  j["min_feasible_u"] = r.result.min_feasible_u;
  j["scored"] = nlohmann::ordered_json::array();
  for (const ScoredSequence& s : r.scored) {
    j["scored"].push_back({{"id", s.id},
                           {"f_var", s.f_var},
                           {"f_impor", s.f_impor},
                           {"score", s.score()},
                           {"s_o", s.s_o},
                           {"v_mean", s.speed_mean},
                           {"bin_outlier", s.bin_outlier},
                           {"bin_speed", s.bin_speed}});
  }
  return j;
}

nlohmann::ordered_json ais_round_to_json(const RoundReport& r) {
  nlohmann::ordered_json j;
  j["round"] = r.round;
  j["losses"] = nlohmann::ordered_json::array();
  for (const SequenceLossReport& s : r.losses) {
    j["losses"].push_back({{"id", s.id},
                           {"recon", s.recon},
                           {"incon", s.incon},
                           {"loss_raw", s.loss_raw},
                           {"loss", s.loss},
                           {"pairs", s.pairs},
                           {"pairs_failed", s.pairs_failed}});
  }
  j["admitted"] = r.admitted;
  return j;
}

nlohmann::ordered_json ais_to_json(const AisResult& r) {
  nlohmann::ordered_json j;
  j["selected"] = r.selected;
  j["selected_round"] = r.selected_round;
  j["rounds"] = nlohmann::ordered_json::array();
  for (const RoundReport& rr : r.rounds) j["rounds"].push_back(ais_round_to_json(rr));
  return j;
}

nlohmann::ordered_json report_to_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["params"] = {{"n_total", r.params.n_total}, {"n_init", r.params.n_init},
                 {"h", r.params.h},             {"e_init", r.params.e_init},
                 {"e_round", r.params.e_round}, {"e_full", r.params.e_full}};
  j["train_rounds"] = r.train_rounds;
  j["infer_rounds"] = r.infer_rounds;
  j["cost_full"] = r.full;
  j["cost_train"] = r.train;
  j["cost_infer"] = r.infer;
  j["cost_total"] = r.total;
  j["selected"] = r.selected;
  j["fraction"] = r.fraction;
  return j;
}

std::string selection_text(const AisResult& r) {
  std::ostringstream out;
  out << "id,round\n";
  for (size_t i = 0; i < r.selected.size(); ++i)
    out << csv_escape(r.selected[i]) << ',' << r.selected_round[i] << "\n";
  return out.str();
}

RunResult cmd_run(const RunConfig& cfg, const std::string& out_dir) {
  if (cfg.manifest.empty())
    fail(ErrorKind::invalid_argument, "config: 'manifest' is required for a run");
  if (!cfg.has_seed)
    fail(ErrorKind::invalid_argument, "config: 'seed' is required for a run");

  SamplePool pool = build_pool(cfg.manifest);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory: " + out_dir);

  RunResult res;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text_file((fs::path(out_dir) / name).string(), text);
    res.artifacts.push_back(name);
  };

  emit("config_snapshot.json", config_snapshot_text(cfg));

  res.analysis = cmd_analyze(pool, cfg);
  if (!res.analysis.failures.empty()) {
    const AnalyzeFailure& f = res.analysis.failures.front();
    fail(ErrorKind::numeric, "feature extraction failed for " +
                                 std::to_string(res.analysis.failures.size()) +
                                 " sequence(s); first: '" + f.id + "': " + f.message);
  }
  emit("features.csv", features_to_csv(res.analysis.rows));

  res.itss = cmd_itss(res.analysis.rows, cfg);
  emit("itss.json", itss_to_json(res.itss).dump(2) + "\n");

  res.ais = cmd_ais(pool, cfg, res.itss.result.selected);
  for (const RoundReport& rr : res.ais.rounds) {
    emit("ais_round_" + std::to_string(rr.round) + ".json",
         ais_round_to_json(rr).dump(2) + "\n");
  }
  emit("ais.json", ais_to_json(res.ais).dump(2) + "\n");
  emit("selection.txt", selection_text(res.ais));

  int rounds = static_cast<int>(res.ais.rounds.size());
  BudgetParams p = cfg.budget;
  p.n_total = pool.size();
  p.n_init = static_cast<int>(res.itss.result.selected.size());
  p.h = cfg.ais.h;
  // Published accounting: a final retrain and a final scoring pass follow the
  // last admission. Cap the round count where the remainder runs out.
  int max_rounds = p.h > 0 ? (p.n_total - p.n_init) / p.h : 0;
  int report_rounds = std::min(rounds, max_rounds);
  res.cost = make_cost_report(p, report_rounds == 0 ? 0 : report_rounds + 1, report_rounds);
  res.cost.selected = static_cast<int>(res.ais.selected.size());
  res.cost.fraction = static_cast<double>(res.cost.selected) / p.n_total;
  emit("report.json", report_to_json(res.cost).dump(2) + "\n");

  return res;
}

}  // namespace activelo
