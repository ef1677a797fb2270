#include "plrank/plrank.h"

#include <cstring>
#include <stdexcept>
#include <string>

#include "chain.hpp"
#include "io.hpp"

using plrank::PosteriorChain;

struct plr_dataset {
  plrank::io::Dataset data;
};

struct plr_chain {
  PosteriorChain chain;
};

namespace {

thread_local std::string g_last_error;

plr_status fail(plr_status code, const char* what) {
  g_last_error = what ? what : "unknown error";
  return code;
}

template <typename Fn>
plr_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PLR_OK;
  } catch (const std::invalid_argument& e) {
    return fail(PLR_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return fail(PLR_ERR_DOMAIN, e.what());
  } catch (const std::runtime_error& e) {
    // file-system problems surface with the path in the message
    const bool is_io = std::strstr(e.what(), "file") != nullptr;
    return fail(is_io ? PLR_ERR_IO : PLR_ERR_PARSE, e.what());
  } catch (const std::exception& e) {
    return fail(PLR_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* plr_version(void) { return "0.1.0"; }

const char* plr_status_name(plr_status status) {
  switch (status) {
    case PLR_OK: return "ok";
    case PLR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PLR_ERR_PARSE: return "parse error";
    case PLR_ERR_IO: return "io error";
    case PLR_ERR_DOMAIN: return "domain error";
    case PLR_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* plr_last_error(void) { return g_last_error.c_str(); }

plr_status plr_dataset_load_csv(const char* path, plr_dataset** out) {
  if (!path || !out) return fail(PLR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new plr_dataset{plrank::io::ingest_csv_file(path)}; });
}

plr_status plr_dataset_parse_csv(const char* text, plr_dataset** out) {
  if (!text || !out) return fail(PLR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new plr_dataset{plrank::io::ingest_csv_text(text)}; });
}

plr_status plr_dataset_save_csv(const plr_dataset* data, const char* path) {
  if (!data || !path) return fail(PLR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded(
      [&] { plrank::io::write_file(path, plrank::io::dataset_to_csv(data->data)); });
}

int plr_dataset_num_epochs(const plr_dataset* data) {
  return data ? data->data.epochs() : 0;
}

int plr_dataset_num_items(const plr_dataset* data) {
  return data ? data->data.num_items() : 0;
}

void plr_dataset_free(plr_dataset* data) { delete data; }

plr_status plr_simulate(const char* config_json, plr_dataset** out_data,
                        char** out_truth_json) {
  if (!config_json || !out_data) return fail(PLR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const plrank::io::SimulateSpec spec = plrank::io::parse_simulate_spec(config_json);
    plrank::io::SimulateResult res = plrank::io::simulate(spec);
    *out_data = new plr_dataset{std::move(res.data)};
    if (out_truth_json) *out_truth_json = dup_string(res.truth_json);
  });
}

plr_status plr_fit(const plr_dataset* data, const char* config_json, plr_chain** out) {
  if (!data || !config_json || !out)
    return fail(PLR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const plrank::io::RunConfig cfg = plrank::io::parse_run_config(config_json);
    *out = new plr_chain{plrank::io::fit(data->data, cfg)};
  });
}

plr_status plr_chain_save_jsonl(const plr_chain* chain, const char* path) {
  if (!chain || !path) return fail(PLR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded(
      [&] { plrank::io::write_file(path, plrank::io::chain_to_jsonl(chain->chain)); });
}

plr_status plr_chain_load_jsonl(const char* path, plr_chain** out) {
  if (!path || !out) return fail(PLR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new plr_chain{plrank::io::chain_from_jsonl(plrank::io::read_file(path))};
  });
}

plr_status plr_chain_summary_csv(const plr_chain* chain, const char* path) {
  if (!chain || !path) return fail(PLR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded(
      [&] { plrank::io::write_file(path, plrank::io::summary_to_csv(chain->chain)); });
}

plr_status plr_chain_append(plr_chain* dst, const plr_chain* src) {
  if (!dst || !src) return fail(PLR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { plrank::io::append_chain(dst->chain, src->chain); });
}

long plr_chain_num_draws(const plr_chain* chain) {
  return chain ? static_cast<long>(chain->chain.draws.size()) : 0;
}

void plr_chain_free(plr_chain* chain) { delete chain; }

plr_status plr_diagnose(const char* suite, const char* config_json,
                        char** out_report_json) {
  if (!suite || !out_report_json) return fail(PLR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out_report_json =
        dup_string(plrank::io::diagnose(suite, config_json ? config_json : ""));
  });
}

void plr_string_free(char* s) { delete[] s; }

}  // extern "C"
