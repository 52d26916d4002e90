#pragma once

#include <cstdint>
#include <string>

#include "activelo/ais.hpp"
#include "activelo/diversity.hpp"
#include "activelo/efficiency.hpp"
#include "activelo/predictor.hpp"
#include "activelo/trajgraph.hpp"

namespace activelo {

inline constexpr const char* kVersion = "0.1.0";

// Everything the pipeline commands read. JSON keys mirror the field names;
// unknown keys are rejected so typos fail loudly.
struct RunConfig {
  std::string manifest;
  uint64_t seed = 0;
  bool has_seed = false;  // selection and scoring commands require a seed
  int workers = 0;        // 0 = all hardware threads

  SegmentParams segmentation;
  double outlier_epsilon = 0.3;
  DiversityWeights weights;
  ItssConfig itss;
  AisConfig ais;
  std::string predictor = "icp";
  IcpParams icp;
  BudgetParams budget;
  int report_train_rounds = 7;
  int report_infer_rounds = 6;
};

// Parses strictly: unknown keys and wrong types are ErrorKind::parse.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// The effective configuration (defaults filled in) plus the tool version,
// serialized for the run snapshot. Stable key order.
std::string config_snapshot_text(const RunConfig& cfg);

}  // namespace activelo
