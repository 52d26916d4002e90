// Command line front end. Everything goes through the C API in activelo.h;
// the JSON handling here is only for merging flag overrides into the config
// document before handing it over.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "activelo.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

int exit_code_for(activelo_status st) {
  switch (st) {
    case ACTIVELO_OK:
      return kExitOk;
    case ACTIVELO_ERROR_INVALID_ARGUMENT:
    case ACTIVELO_ERROR_PARSE:
    case ACTIVELO_ERROR_INFEASIBLE:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

void report_api_error() {
  std::fprintf(stderr, "activelo: %s\n", activelo_last_error());
}

bool read_file(const std::string& path, std::string* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  *out = ss.str();
  return true;
}

bool write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::fputs(text.c_str(), stdout);
    return true;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << text;
  return out.good();
}

// Shared flag set merged into the config document; unset flags leave the
// file's values alone.
struct CommonOpts {
  std::string config_path;
  std::string manifest;
  std::optional<unsigned long long> seed;
  std::optional<int> workers;
  std::optional<int> u;
  std::optional<int> h;
  std::optional<int> iterations;
  std::string predictor;
};

void add_common(CLI::App* cmd, CommonOpts* o) {
  cmd->add_option("-c,--config", o->config_path, "JSON config file");
  cmd->add_option("--workers", o->workers,
                  "worker threads (0 = all cores; overrides ACTIVELO_WORKERS)");
}

// Builds the effective config JSON: file, then ACTIVELO_WORKERS, then flags.
// Returns false (with a message) when something cannot be parsed.
bool merge_config(const CommonOpts& o, std::string* out_text) {
  json cfg = json::object();
  if (!o.config_path.empty()) {
    std::string text;
    if (!read_file(o.config_path, &text)) {
      std::fprintf(stderr, "activelo: cannot read config file: %s\n",
                   o.config_path.c_str());
      return false;
    }
    try {
      cfg = json::parse(text);
    } catch (const json::exception& e) {
      std::fprintf(stderr, "activelo: config: %s\n", e.what());
      return false;
    }
    if (!cfg.is_object()) {
      std::fprintf(stderr, "activelo: config: top level must be an object\n");
      return false;
    }
  }

  if (const char* env = std::getenv("ACTIVELO_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (!end || *end != '\0' || v < 0) {
      std::fprintf(stderr, "activelo: ACTIVELO_WORKERS must be a non-negative integer\n");
      return false;
    }
    cfg["workers"] = static_cast<int>(v);
  }

  if (!o.manifest.empty()) cfg["manifest"] = o.manifest;
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.workers) cfg["workers"] = *o.workers;
  if (o.u) cfg["itss"]["u"] = *o.u;
  if (o.h) cfg["ais"]["h"] = *o.h;
  if (o.iterations) cfg["ais"]["iterations"] = *o.iterations;
  if (!o.predictor.empty()) cfg["predictor"] = o.predictor;

  *out_text = cfg.dump();
  return true;
}

// The manifest can come from the flag or the config file; pool commands need
// one of them.
bool manifest_from(const CommonOpts& o, const std::string& config_text,
                   std::string* manifest) {
  if (!o.manifest.empty()) {
    *manifest = o.manifest;
    return true;
  }
  json cfg = json::parse(config_text);
  if (cfg.contains("manifest") && cfg["manifest"].is_string() &&
      !cfg["manifest"].get<std::string>().empty()) {
    *manifest = cfg["manifest"].get<std::string>();
    return true;
  }
  std::fprintf(stderr, "activelo: a manifest is required (--manifest or config)\n");
  return false;
}

struct PoolHandle {
  activelo_pool* pool = nullptr;
  ~PoolHandle() { activelo_pool_free(pool); }
};

struct ApiString {
  char* s = nullptr;
  ~ApiString() { activelo_string_free(s); }
  std::string str() const { return s ? std::string(s) : std::string(); }
};

int run_analyze(const CommonOpts& o, const std::string& out_path,
                const std::string& failures_path) {
  std::string config_text;
  if (!merge_config(o, &config_text)) return kExitConfig;
  std::string manifest;
  if (!manifest_from(o, config_text, &manifest)) return kExitConfig;

  PoolHandle pool;
  activelo_status st = activelo_pool_open(manifest.c_str(), &pool.pool);
  if (st != ACTIVELO_OK) {
    report_api_error();
    return exit_code_for(st);
  }

  ApiString csv, failures;
  st = activelo_analyze(pool.pool, config_text.c_str(), &csv.s, &failures.s);
  if (st != ACTIVELO_OK && st != ACTIVELO_PARTIAL) {
    report_api_error();
    return exit_code_for(st);
  }
  if (!write_output(out_path, csv.str())) {
    std::fprintf(stderr, "activelo: cannot write %s\n", out_path.c_str());
    return kExitRuntime;
  }
  if (st == ACTIVELO_PARTIAL) {
    report_api_error();
    if (!failures_path.empty() && !write_output(failures_path, failures.str())) {
      std::fprintf(stderr, "activelo: cannot write %s\n", failures_path.c_str());
    }
    return kExitRuntime;
  }
  return kExitOk;
}

int run_itss(const CommonOpts& o, const std::string& features_path,
             const std::string& out_path) {
  std::string config_text;
  if (!merge_config(o, &config_text)) return kExitConfig;
  std::string features;
  if (!read_file(features_path, &features)) {
    std::fprintf(stderr, "activelo: cannot read feature table: %s\n",
                 features_path.c_str());
    return kExitRuntime;
  }
  ApiString out;
  activelo_status st = activelo_itss(features.c_str(), config_text.c_str(), &out.s);
  if (st != ACTIVELO_OK) {
    report_api_error();
    return exit_code_for(st);
  }
  if (!write_output(out_path, out.str())) {
    std::fprintf(stderr, "activelo: cannot write %s\n", out_path.c_str());
    return kExitRuntime;
  }
  return kExitOk;
}

int run_ais(const CommonOpts& o, const std::vector<std::string>& initial,
            const std::string& out_path) {
  std::string config_text;
  if (!merge_config(o, &config_text)) return kExitConfig;
  std::string manifest;
  if (!manifest_from(o, config_text, &manifest)) return kExitConfig;

  PoolHandle pool;
  activelo_status st = activelo_pool_open(manifest.c_str(), &pool.pool);
  if (st != ACTIVELO_OK) {
    report_api_error();
    return exit_code_for(st);
  }

  std::string ids = json(initial).dump();
  ApiString out;
  st = activelo_ais(pool.pool, config_text.c_str(), ids.c_str(), &out.s);
  if (st != ACTIVELO_OK) {
    report_api_error();
    return exit_code_for(st);
  }
  if (!write_output(out_path, out.str())) {
    std::fprintf(stderr, "activelo: cannot write %s\n", out_path.c_str());
    return kExitRuntime;
  }
  return kExitOk;
}

int run_run(const CommonOpts& o, const std::string& out_dir) {
  std::string config_text;
  if (!merge_config(o, &config_text)) return kExitConfig;
  ApiString summary;
  activelo_status st = activelo_run(config_text.c_str(), out_dir.c_str(), &summary.s);
  if (st != ACTIVELO_OK) {
    report_api_error();
    return exit_code_for(st);
  }
  std::fputs(summary.str().c_str(), stdout);
  return kExitOk;
}

int run_report(const CommonOpts& o, bool as_json, const std::string& out_path) {
  std::string config_text;
  if (!merge_config(o, &config_text)) return kExitConfig;
  ApiString out;
  activelo_status st = as_json ? activelo_report(config_text.c_str(), &out.s)
                               : activelo_report_text(config_text.c_str(), &out.s);
  if (st != ACTIVELO_OK) {
    report_api_error();
    return exit_code_for(st);
  }
  if (!write_output(out_path, out.str())) {
    std::fprintf(stderr, "activelo: cannot write %s\n", out_path.c_str());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"training-set curation for lidar odometry"};
  app.set_version_flag("--version", activelo_version());
  app.require_subcommand(1);

  CommonOpts opts;
  std::string out_path, out_dir = "out", features_path, failures_path;
  std::vector<std::string> initial;
  bool report_json = false;

  CLI::App* analyze = app.add_subcommand(
      "analyze", "extract trajectory and outlier features into a CSV table");
  add_common(analyze, &opts);
  analyze->add_option("-m,--manifest", opts.manifest, "pool manifest JSON");
  analyze->add_option("-o,--out", out_path, "output file (default stdout)");
  analyze->add_option("--failures", failures_path, "write per-sequence failures JSON here");

  CLI::App* itss = app.add_subcommand(
      "itss", "diverse initial selection from a feature table");
  add_common(itss, &opts);
  itss->add_option("-f,--features", features_path, "feature table CSV")->required();
  itss->add_option("-u,--u", opts.u, "selection size");
  itss->add_option("-o,--out", out_path, "output file (default stdout)");

  CLI::App* ais = app.add_subcommand(
      "ais", "active admission rounds on top of an initial selection");
  add_common(ais, &opts);
  ais->add_option("-m,--manifest", opts.manifest, "pool manifest JSON");
  ais->add_option("-i,--initial", initial, "initial sequence ids")
      ->required()
      ->delimiter(',');
  ais->add_option("--seed", opts.seed, "seed for perturbations and noisy predictors");
  ais->add_option("--rounds", opts.iterations, "admission rounds");
  ais->add_option("--per-round", opts.h, "sequences admitted per round");
  ais->add_option("--predictor", opts.predictor,
                  "icp | oracle | noisy:<sigma_rot>,<sigma_trans>");
  ais->add_option("-o,--out", out_path, "output file (default stdout)");

  CLI::App* run = app.add_subcommand("run", "full pipeline, writing all artifacts");
  add_common(run, &opts);
  run->add_option("-m,--manifest", opts.manifest, "pool manifest JSON");
  run->add_option("--seed", opts.seed, "seed for perturbations and noisy predictors");
  run->add_option("-u,--u", opts.u, "initial selection size");
  run->add_option("--rounds", opts.iterations, "admission rounds");
  run->add_option("--per-round", opts.h, "sequences admitted per round");
  run->add_option("--predictor", opts.predictor,
                  "icp | oracle | noisy:<sigma_rot>,<sigma_trans>");
  run->add_option("-o,--out", out_dir, "artifact directory (default ./out)");

  CLI::App* report = app.add_subcommand("report", "epoch-cost accounting");
  add_common(report, &opts);
  report->add_flag("--json", report_json, "emit JSON instead of text");
  report->add_option("-o,--out", out_path, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  if (analyze->parsed()) return run_analyze(opts, out_path, failures_path);
  if (itss->parsed()) return run_itss(opts, features_path, out_path);
  if (ais->parsed()) return run_ais(opts, initial, out_path);
  if (run->parsed()) return run_run(opts, out_dir);
  if (report->parsed()) return run_report(opts, report_json, out_path);
  return kExitConfig;
}
