#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chain.hpp"
#include "dynamic_model.hpp"
#include "static_model.hpp"

namespace plrank::io {

// In-memory dataset: one ranking list per epoch as persisted in CSV
// (the library API accepts several lists per epoch directly).
struct Dataset {
  bool dated = false;
  std::vector<std::string> epoch_labels;           // original epoch strings, sorted
  std::vector<double> gaps;                        // gap to next epoch (days if dated)
  std::vector<std::string> item_labels;            // ItemId k == index k
  std::vector<std::vector<PartialRanking>> lists;  // [t][l]

  int epochs() const { return static_cast<int>(lists.size()); }
  int num_items() const { return static_cast<int>(item_labels.size()); }
};

// CSV with header epoch,rank,item; epochs either all integers or all
// ISO dates. Throws std::runtime_error with the offending line or
// epoch in the message.
Dataset ingest_csv_text(const std::string& text);
Dataset ingest_csv_file(const std::string& path);
std::string dataset_to_csv(const Dataset& data);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

struct RunConfig {
  std::string model = "static";     // "static" | "dynamic"
  long iterations = 20000;
  long burn_in = 10000;
  long thinning = 1;
  std::uint64_t seed = 0;
  double tau = 1.0;
  bool alpha_fixed = false;
  double alpha_value = 1.0;         // fixed value or chain start
  AlphaPrior alpha_prior{};         // improper by default
  std::string phi_mode = "infer";   // "infer" | "fixed" | "xi"
  double phi_value = 1.0;           // fixed value or chain start
  PhiPrior phi_prior{};             // improper by default
  double xi = 1.0;
  std::string time_unit = "weeks";  // for dated epochs under the xi mapping
  double mh_sigma = 0.1;
  bool adapt_mh = true;
  bool first_appearance_filter = true;
  int chains = 1;
};

RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

PosteriorChain fit(const Dataset& data, const RunConfig& cfg);

struct SimulateSpec {
  std::string model = "dynamic";
  double alpha = 1.0;
  double tau = 1.0;
  bool use_xi = false;
  double phi = 10.0;
  double xi = 1.0;
  int epochs = 10;       // list count for the static model
  int list_len = 5;
  std::uint64_t seed = 0;
  double epsilon = 1e-8;
};

SimulateSpec parse_simulate_spec(const std::string& json_text);

struct SimulateResult {
  Dataset data;
  std::string truth_json;
};

SimulateResult simulate(const SimulateSpec& spec);

// chain persistence: one meta line followed by one JSON object per draw
std::string chain_to_jsonl(const PosteriorChain& chain);
PosteriorChain chain_from_jsonl(const std::string& text);
void append_chain(PosteriorChain& dst, const PosteriorChain& src);

std::string summary_to_csv(const PosteriorChain& chain);

// oracle suites behind the CLI: psi-kappa | enumerate | marginal |
// geweke | lifetime | stationarity. Returns a JSON report.
std::string diagnose(const std::string& suite, const std::string& config_json);

}  // namespace plrank::io
