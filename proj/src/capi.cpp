#include "activelo.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "activelo/config.hpp"
#include "activelo/runner.hpp"
#include "activelo/util.hpp"

namespace {

thread_local std::string g_last_error;

activelo_status status_from(activelo::ErrorKind kind) {
  using activelo::ErrorKind;
  switch (kind) {
    case ErrorKind::invalid_argument: return ACTIVELO_ERROR_INVALID_ARGUMENT;
    case ErrorKind::io: return ACTIVELO_ERROR_IO;
    case ErrorKind::parse: return ACTIVELO_ERROR_PARSE;
    case ErrorKind::infeasible: return ACTIVELO_ERROR_INFEASIBLE;
    case ErrorKind::numeric: return ACTIVELO_ERROR_NUMERIC;
    case ErrorKind::internal: return ACTIVELO_ERROR_INTERNAL;
  }
  return ACTIVELO_ERROR_INTERNAL;
}

template <typename Fn>
activelo_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const activelo::Error& e) {
    g_last_error = e.what();
    return status_from(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ACTIVELO_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return ACTIVELO_ERROR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) return nullptr;
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

activelo_status set_out(char** out, const std::string& value) {
  if (!out) return ACTIVELO_OK;
  *out = dup_string(value);
  if (!*out) {
    g_last_error = "out of memory";
    return ACTIVELO_ERROR_INTERNAL;
  }
  return ACTIVELO_OK;
}

activelo::RunConfig config_from(const char* config_json) {
  if (!config_json || !*config_json) return activelo::RunConfig{};
  return activelo::parse_run_config(config_json);
}

}  // namespace

struct activelo_pool {
  activelo::SamplePool pool;
};

extern "C" {

const char* activelo_version(void) { return activelo::kVersion; }

const char* activelo_last_error(void) { return g_last_error.c_str(); }

void activelo_string_free(char* s) { std::free(s); }

activelo_status activelo_pool_open(const char* manifest_path, activelo_pool** out_pool) {
  return guarded([&]() -> activelo_status {
    if (!manifest_path || !out_pool)
      activelo::fail(activelo::ErrorKind::invalid_argument,
                     "pool_open: manifest_path and out_pool are required");
    auto handle = new activelo_pool{activelo::build_pool(manifest_path)};
    *out_pool = handle;
    return ACTIVELO_OK;
  });
}

void activelo_pool_free(activelo_pool* pool) { delete pool; }

int activelo_pool_size(const activelo_pool* pool) {
  return pool ? pool->pool.size() : 0;
}

activelo_status activelo_pool_sequence_id(const activelo_pool* pool, int index,
                                          char** out_id) {
  return guarded([&]() -> activelo_status {
    if (!pool || !out_id)
      activelo::fail(activelo::ErrorKind::invalid_argument,
                     "pool_sequence_id: pool and out_id are required");
    if (index < 0 || index >= pool->pool.size())
      activelo::fail(activelo::ErrorKind::invalid_argument,
                     "pool_sequence_id: index out of range");
    return set_out(out_id, pool->pool.sequences[index].id);
  });
}

activelo_status activelo_analyze(const activelo_pool* pool, const char* config_json,
                                 char** out_features_csv, char** out_failures_json) {
  return guarded([&]() -> activelo_status {
    if (!pool)
      activelo::fail(activelo::ErrorKind::invalid_argument, "analyze: pool is required");
    activelo::RunConfig cfg = config_from(config_json);
    activelo::AnalyzeResult res = activelo::cmd_analyze(pool->pool, cfg);

    activelo_status st = set_out(out_features_csv, activelo::features_to_csv(res.rows));
    if (st != ACTIVELO_OK) return st;

    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const auto& f : res.failures)
      failures.push_back({{"id", f.id}, {"message", f.message}});
    st = set_out(out_failures_json, failures.dump(2) + "\n");
    if (st != ACTIVELO_OK) return st;

    if (!res.failures.empty()) {
      g_last_error = std::to_string(res.failures.size()) +
                     " sequence(s) could not be featurized; first: '" +
                     res.failures.front().id + "': " + res.failures.front().message;
      return ACTIVELO_PARTIAL;
    }
    return ACTIVELO_OK;
  });
}

activelo_status activelo_itss(const char* features_csv, const char* config_json,
                              char** out_json) {
  return guarded([&]() -> activelo_status {
    if (!features_csv || !out_json)
      activelo::fail(activelo::ErrorKind::invalid_argument,
                     "itss: features_csv and out_json are required");
    activelo::RunConfig cfg = config_from(config_json);
    std::vector<activelo::FeatureRow> rows = activelo::features_from_csv(features_csv);
    activelo::ItssCommandResult res = activelo::cmd_itss(rows, cfg);
    return set_out(out_json, activelo::itss_to_json(res).dump(2) + "\n");
  });
}

activelo_status activelo_ais(const activelo_pool* pool, const char* config_json,
                             const char* initial_ids_json, char** out_json) {
  return guarded([&]() -> activelo_status {
    if (!pool || !initial_ids_json || !out_json)
      activelo::fail(activelo::ErrorKind::invalid_argument,
                     "ais: pool, initial_ids_json and out_json are required");
    activelo::RunConfig cfg = config_from(config_json);

    nlohmann::json ids_json;
    try {
      ids_json = nlohmann::json::parse(initial_ids_json);
    } catch (const nlohmann::json::exception& e) {
      activelo::fail(activelo::ErrorKind::parse,
                     std::string("ais: initial ids: ") + e.what());
    }
    if (!ids_json.is_array())
      activelo::fail(activelo::ErrorKind::parse,
                     "ais: initial ids must be a JSON array of strings");
    std::vector<std::string> initial;
    for (const auto& v : ids_json) {
      if (!v.is_string())
        activelo::fail(activelo::ErrorKind::parse,
                       "ais: initial ids must be a JSON array of strings");
      initial.push_back(v.get<std::string>());
    }

    activelo::AisResult res = activelo::cmd_ais(pool->pool, cfg, initial);
    return set_out(out_json, activelo::ais_to_json(res).dump(2) + "\n");
  });
}

activelo_status activelo_run(const char* config_json, const char* out_dir,
                             char** out_summary_json) {
  return guarded([&]() -> activelo_status {
    if (!config_json || !out_dir)
      activelo::fail(activelo::ErrorKind::invalid_argument,
                     "run: config_json and out_dir are required");
    activelo::RunConfig cfg = config_from(config_json);
    activelo::RunResult res = activelo::cmd_run(cfg, out_dir);

    nlohmann::ordered_json summary;
    summary["out_dir"] = out_dir;
    summary["artifacts"] = res.artifacts;
    summary["selected"] = res.ais.selected;
    summary["selected_round"] = res.ais.selected_round;
    summary["report"] = activelo::report_to_json(res.cost);
    return set_out(out_summary_json, summary.dump(2) + "\n");
  });
}

activelo_status activelo_report(const char* config_json, char** out_json) {
  return guarded([&]() -> activelo_status {
    if (!out_json)
      activelo::fail(activelo::ErrorKind::invalid_argument, "report: out_json is required");
    activelo::RunConfig cfg = config_from(config_json);
    activelo::CostReport rep = activelo::make_cost_report(
        cfg.budget, cfg.report_train_rounds, cfg.report_infer_rounds);
    return set_out(out_json, activelo::report_to_json(rep).dump(2) + "\n");
  });
}

activelo_status activelo_report_text(const char* config_json, char** out_text) {
  return guarded([&]() -> activelo_status {
    if (!out_text)
      activelo::fail(activelo::ErrorKind::invalid_argument,
                     "report_text: out_text is required");
    activelo::RunConfig cfg = config_from(config_json);
    activelo::CostReport rep = activelo::make_cost_report(
        cfg.budget, cfg.report_train_rounds, cfg.report_infer_rounds);
    return set_out(out_text, activelo::cost_report_text(rep));
  });
}

}  // extern "C"
