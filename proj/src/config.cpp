#include "activelo/config.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <set>

#include "activelo/util.hpp"

namespace activelo {

namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& scope) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key()))
      fail(ErrorKind::parse, "config: unknown key '" + it.key() + "' in " + scope);
  }
}

const json* field(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double num_or(const json& obj, const char* key, double def, const std::string& scope) {
  const json* v = field(obj, key);
  if (!v) return def;
  if (!v->is_number())
    fail(ErrorKind::parse, "config: '" + std::string(key) + "' in " + scope +
                               " must be a number");
  return v->get<double>();
}

int int_or(const json& obj, const char* key, int def, const std::string& scope) {
  const json* v = field(obj, key);
  if (!v) return def;
  if (!v->is_number_integer())
    fail(ErrorKind::parse, "config: '" + std::string(key) + "' in " + scope +
                               " must be an integer");
  return v->get<int>();
}

bool bool_or(const json& obj, const char* key, bool def, const std::string& scope) {
  const json* v = field(obj, key);
  if (!v) return def;
  if (!v->is_boolean())
    fail(ErrorKind::parse, "config: '" + std::string(key) + "' in " + scope +
                               " must be a boolean");
  return v->get<bool>();
}

std::string str_or(const json& obj, const char* key, const std::string& def,
                   const std::string& scope) {
  const json* v = field(obj, key);
  if (!v) return def;
  if (!v->is_string())
    fail(ErrorKind::parse, "config: '" + std::string(key) + "' in " + scope +
                               " must be a string");
  return v->get<std::string>();
}

const json& object_at(const json& obj, const char* key) {
  const json* v = field(obj, key);
  if (!v || !v->is_object())
    fail(ErrorKind::parse, "config: '" + std::string(key) + "' must be an object");
  return *v;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("config: ") + e.what());
  }
  if (!root.is_object()) fail(ErrorKind::parse, "config: top level must be an object");
  check_keys(root,
             {"manifest", "seed", "workers", "segmentation", "outlier_epsilon", "weights",
              "itss", "ais", "predictor", "icp", "budget", "report"},
             "the top level");

  RunConfig cfg;
  cfg.manifest = str_or(root, "manifest", "", "the top level");
  if (const json* v = field(root, "seed")) {
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                    v->get<long long>() < 0))
      fail(ErrorKind::parse, "config: 'seed' must be a non-negative integer");
    cfg.seed = v->get<uint64_t>();
    cfg.has_seed = true;
  }
  cfg.workers = int_or(root, "workers", 0, "the top level");
  cfg.outlier_epsilon = num_or(root, "outlier_epsilon", 0.3, "the top level");

  if (field(root, "segmentation")) {
    const json& s = object_at(root, "segmentation");
    check_keys(s, {"window_seconds", "turn_threshold_deg", "min_gap_frames"},
               "'segmentation'");
    cfg.segmentation.window_seconds =
        num_or(s, "window_seconds", cfg.segmentation.window_seconds, "'segmentation'");
    double deg = num_or(s, "turn_threshold_deg",
                        cfg.segmentation.turn_threshold * 180.0 / std::numbers::pi,
                        "'segmentation'");
    cfg.segmentation.turn_threshold = deg * std::numbers::pi / 180.0;
    cfg.segmentation.min_gap_frames =
        int_or(s, "min_gap_frames", cfg.segmentation.min_gap_frames, "'segmentation'");
  }

  if (field(root, "weights")) {
    const json& w = object_at(root, "weights");
    check_keys(w, {"lambda1", "lambda2", "lambda3", "lambda4", "lambda5"}, "'weights'");
    cfg.weights.lambda1 = num_or(w, "lambda1", cfg.weights.lambda1, "'weights'");
    cfg.weights.lambda2 = num_or(w, "lambda2", cfg.weights.lambda2, "'weights'");
    cfg.weights.lambda3 = num_or(w, "lambda3", cfg.weights.lambda3, "'weights'");
    cfg.weights.lambda4 = num_or(w, "lambda4", cfg.weights.lambda4, "'weights'");
    cfg.weights.lambda5 = num_or(w, "lambda5", cfg.weights.lambda5, "'weights'");
  }

  if (field(root, "itss")) {
    const json& s = object_at(root, "itss");
    check_keys(s, {"u", "bins_outlier", "bins_speed", "normalize"}, "'itss'");
    cfg.itss.u = int_or(s, "u", cfg.itss.u, "'itss'");
    cfg.itss.bins_outlier = int_or(s, "bins_outlier", cfg.itss.bins_outlier, "'itss'");
    cfg.itss.bins_speed = int_or(s, "bins_speed", cfg.itss.bins_speed, "'itss'");
    cfg.itss.normalize = bool_or(s, "normalize", cfg.itss.normalize, "'itss'");
  }

  if (field(root, "ais")) {
    const json& s = object_at(root, "ais");
    check_keys(s,
               {"h", "iterations", "w_recon", "w_incon", "normalize", "stride",
                "recon_gate", "normal_k", "voxel", "augmentations"},
               "'ais'");
    cfg.ais.h = int_or(s, "h", cfg.ais.h, "'ais'");
    cfg.ais.iterations = int_or(s, "iterations", cfg.ais.iterations, "'ais'");
    cfg.ais.w_recon = num_or(s, "w_recon", cfg.ais.w_recon, "'ais'");
    cfg.ais.w_incon = num_or(s, "w_incon", cfg.ais.w_incon, "'ais'");
    cfg.ais.normalize = bool_or(s, "normalize", cfg.ais.normalize, "'ais'");
    cfg.ais.stride = int_or(s, "stride", cfg.ais.stride, "'ais'");
    cfg.ais.recon_gate = num_or(s, "recon_gate", cfg.ais.recon_gate, "'ais'");
    cfg.ais.normal_k = int_or(s, "normal_k", cfg.ais.normal_k, "'ais'");
    cfg.ais.voxel = num_or(s, "voxel", cfg.ais.voxel, "'ais'");
    if (field(s, "augmentations")) {
      const json& a = object_at(s, "augmentations");
      check_keys(a, {"count", "alpha", "floor_trans", "floor_rot"}, "'ais.augmentations'");
      cfg.ais.aug.count = int_or(a, "count", cfg.ais.aug.count, "'ais.augmentations'");
      cfg.ais.aug.alpha = num_or(a, "alpha", cfg.ais.aug.alpha, "'ais.augmentations'");
      cfg.ais.aug.floor_trans =
          num_or(a, "floor_trans", cfg.ais.aug.floor_trans, "'ais.augmentations'");
      cfg.ais.aug.floor_rot =
          num_or(a, "floor_rot", cfg.ais.aug.floor_rot, "'ais.augmentations'");
    }
  }

  cfg.predictor = str_or(root, "predictor", cfg.predictor, "the top level");

  if (field(root, "icp")) {
    const json& s = object_at(root, "icp");
    check_keys(s, {"k_neighbors", "gate", "max_iters", "tol", "voxel"}, "'icp'");
    cfg.icp.k_neighbors = int_or(s, "k_neighbors", cfg.icp.k_neighbors, "'icp'");
    cfg.icp.gate = num_or(s, "gate", cfg.icp.gate, "'icp'");
    cfg.icp.max_iters = int_or(s, "max_iters", cfg.icp.max_iters, "'icp'");
    cfg.icp.tol = num_or(s, "tol", cfg.icp.tol, "'icp'");
    cfg.icp.voxel = num_or(s, "voxel", cfg.icp.voxel, "'icp'");
  }

  if (field(root, "budget")) {
    const json& s = object_at(root, "budget");
    check_keys(s, {"n_total", "n_init", "h", "e_init", "e_round", "e_full"}, "'budget'");
    cfg.budget.n_total = int_or(s, "n_total", cfg.budget.n_total, "'budget'");
    cfg.budget.n_init = int_or(s, "n_init", cfg.budget.n_init, "'budget'");
    cfg.budget.h = int_or(s, "h", cfg.budget.h, "'budget'");
    cfg.budget.e_init = int_or(s, "e_init", cfg.budget.e_init, "'budget'");
    cfg.budget.e_round = int_or(s, "e_round", cfg.budget.e_round, "'budget'");
    cfg.budget.e_full = int_or(s, "e_full", cfg.budget.e_full, "'budget'");
  }

  if (field(root, "report")) {
    const json& s = object_at(root, "report");
    check_keys(s, {"train_rounds", "infer_rounds"}, "'report'");
    cfg.report_train_rounds = int_or(s, "train_rounds", cfg.report_train_rounds, "'report'");
    cfg.report_infer_rounds = int_or(s, "infer_rounds", cfg.report_infer_rounds, "'report'");
  }

  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path));
}

std::string config_snapshot_text(const RunConfig& cfg) {
  ordered j;
  j["version"] = kVersion;
  j["manifest"] = cfg.manifest;
  if (cfg.has_seed)
    j["seed"] = cfg.seed;
  else
    j["seed"] = nullptr;
  j["workers"] = cfg.workers;
  j["segmentation"] = {
      {"window_seconds", cfg.segmentation.window_seconds},
      {"turn_threshold_deg", cfg.segmentation.turn_threshold * 180.0 / std::numbers::pi},
      {"min_gap_frames", cfg.segmentation.min_gap_frames}};
  j["outlier_epsilon"] = cfg.outlier_epsilon;
  j["weights"] = {{"lambda1", cfg.weights.lambda1},
                  {"lambda2", cfg.weights.lambda2},
                  {"lambda3", cfg.weights.lambda3},
                  {"lambda4", cfg.weights.lambda4},
                  {"lambda5", cfg.weights.lambda5}};
  j["itss"] = {{"u", cfg.itss.u},
               {"bins_outlier", cfg.itss.bins_outlier},
               {"bins_speed", cfg.itss.bins_speed},
               {"normalize", cfg.itss.normalize}};
  j["ais"] = {{"h", cfg.ais.h},
              {"iterations", cfg.ais.iterations},
              {"w_recon", cfg.ais.w_recon},
              {"w_incon", cfg.ais.w_incon},
              {"normalize", cfg.ais.normalize},
              {"stride", cfg.ais.stride},
              {"recon_gate", cfg.ais.recon_gate},
              {"normal_k", cfg.ais.normal_k},
              {"voxel", cfg.ais.voxel},
              {"augmentations",
               {{"count", cfg.ais.aug.count},
                {"alpha", cfg.ais.aug.alpha},
                {"floor_trans", cfg.ais.aug.floor_trans},
                {"floor_rot", cfg.ais.aug.floor_rot}}}};
  j["predictor"] = cfg.predictor;
  j["icp"] = {{"k_neighbors", cfg.icp.k_neighbors},
              {"gate", cfg.icp.gate},
              {"max_iters", cfg.icp.max_iters},
              {"tol", cfg.icp.tol},
              {"voxel", cfg.icp.voxel}};
  j["budget"] = {{"n_total", cfg.budget.n_total}, {"n_init", cfg.budget.n_init},
                 {"h", cfg.budget.h},             {"e_init", cfg.budget.e_init},
                 {"e_round", cfg.budget.e_round}, {"e_full", cfg.budget.e_full}};
  j["report"] = {{"train_rounds", cfg.report_train_rounds},
                 {"infer_rounds", cfg.report_infer_rounds}};
  return j.dump(2) + "\n";
}

}  // namespace activelo
