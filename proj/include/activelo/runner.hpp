#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "activelo/ais.hpp"
#include "activelo/config.hpp"
#include "activelo/diversity.hpp"
#include "activelo/efficiency.hpp"
#include "activelo/ingest.hpp"

namespace activelo {

struct FeatureRow {
  std::string id;
  Weather weather = Weather::general;
  SequenceFeatures features;
};

// Header: id,weather,m,theta_mean,theta_std,v_mean,v_std,l_mean,l_std,s_o,
// turn_energy,length_total. Doubles use the shortest round-trip form.
std::string features_to_csv(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> features_from_csv(const std::string& text);

struct AnalyzeFailure {
  std::string id;
  std::string message;
};

struct AnalyzeResult {
  std::vector<FeatureRow> rows;  // pool order, failed sequences omitted
  std::vector<AnalyzeFailure> failures;
};

// Trajectory and outlier features for every sequence, in parallel. A
// sequence that cannot be featurized (no clouds, no ground truth, numeric
// trouble) lands in `failures` instead of aborting the rest.
AnalyzeResult cmd_analyze(const SamplePool& pool, const RunConfig& cfg);

struct ItssCommandResult {
  std::vector<ScoredSequence> scored;  // general-weather rows, input order
  ItssResult result;
};

// Scores the general-weather rows (normalization at this pool's scope),
// bins both axes, and solves the constrained selection.
ItssCommandResult cmd_itss(const std::vector<FeatureRow>& rows, const RunConfig& cfg);

// Active admission rounds on top of `initial`. Requires cfg.has_seed.
AisResult cmd_ais(const SamplePool& pool, const RunConfig& cfg,
                  const std::vector<std::string>& initial);

struct RunResult {
  AnalyzeResult analysis;
  ItssCommandResult itss;
  AisResult ais;
  CostReport cost;
  std::vector<std::string> artifacts;  // file names written into out_dir
};

// Full pipeline: analyze -> itss -> ais -> report, writing every artifact
// into out_dir. Reruns with the same config and pool produce byte-identical
// files. Any stage failure aborts.
RunResult cmd_run(const RunConfig& cfg, const std::string& out_dir);

nlohmann::ordered_json itss_to_json(const ItssCommandResult& r);
nlohmann::ordered_json ais_round_to_json(const RoundReport& r);
nlohmann::ordered_json ais_to_json(const AisResult& r);
nlohmann::ordered_json report_to_json(const CostReport& r);

// Admission order, one "id,round" line per selected sequence; round 0 is the
// initial set.
std::string selection_text(const AisResult& r);

}  // namespace activelo
