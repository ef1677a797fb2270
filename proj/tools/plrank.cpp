// Command-line front end. Everything model-related goes through the C
// API in plrank/plrank.h; this file only parses arguments, assembles
// config JSON, and moves files around.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plrank/plrank.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int die(plr_status st, const std::string& context) {
  std::cerr << "plrank: " << context << ": " << plr_status_name(st) << ": "
            << plr_last_error() << "\n";
  return 1;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) {
    std::cerr << "plrank: cannot write " << path << "\n";
    std::exit(1);
  }
}

fs::path resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("PLRANK_OUT_DIR")) return env;
  return ".";
}

struct ChainHandle {
  plr_chain* p = nullptr;
  ~ChainHandle() { plr_chain_free(p); }
};

struct DatasetHandle {
  plr_dataset* p = nullptr;
  ~DatasetHandle() { plr_dataset_free(p); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian nonparametric Plackett-Luce ranking models"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "generate synthetic ranking data");
  std::string sim_model = "dynamic";
  double sim_alpha = 1.0, sim_tau = 1.0;
  std::optional<double> sim_phi, sim_xi;
  int sim_epochs = 10, sim_list_len = 5;
  std::uint64_t sim_seed = 0;
  std::string sim_out;
  sim->add_option("--model", sim_model, "static or dynamic")
      ->check(CLI::IsMember({"static", "dynamic"}));
  sim->add_option("--alpha", sim_alpha, "gamma process concentration");
  sim->add_option("--tau", sim_tau, "gamma process inverse scale");
  sim->add_option("--phi", sim_phi, "dependence parameter");
  sim->add_option("--xi", sim_xi, "continuous-time rate (unit gaps)");
  sim->add_option("--epochs", sim_epochs, "epochs (lists for the static model)");
  sim->add_option("--list-len", sim_list_len, "items per list");
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--out", sim_out, "output directory (default $PLRANK_OUT_DIR or .)");

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler on a dataset");
  std::string fit_model = "static", fit_data, fit_config, fit_out;
  std::uint64_t fit_seed = 0;
  std::optional<long> fit_iterations, fit_burn_in, fit_thinning;
  std::optional<int> fit_chains;
  std::optional<double> fit_phi, fit_xi;
  bool fit_no_filter = false;
  fit->add_option("--model", fit_model, "static or dynamic")
      ->check(CLI::IsMember({"static", "dynamic"}));
  fit->add_option("--data", fit_data, "input CSV (epoch,rank,item)")->required();
  fit->add_option("--config", fit_config, "JSON config file");
  fit->add_option("--seed", fit_seed, "random seed");
  fit->add_option("--iterations", fit_iterations, "total sweeps");
  fit->add_option("--burn-in", fit_burn_in, "burn-in sweeps");
  fit->add_option("--thinning", fit_thinning, "thinning interval");
  fit->add_option("--chains", fit_chains, "independent chains");
  fit->add_option("--phi", fit_phi, "fix the dependence parameter");
  fit->add_option("--xi", fit_xi, "per-gap phi from the continuous-time mapping");
  fit->add_flag("--no-first-appearance-filter", fit_no_filter,
                "include items in the likelihood before their first appearance");
  fit->add_option("--out", fit_out, "output directory (default $PLRANK_OUT_DIR or .)");

  // ---- diagnose ----
  auto* diag = app.add_subcommand("diagnose", "run an oracle validation suite");
  std::string diag_suite, diag_out;
  std::uint64_t diag_seed = 20240801ULL;
  std::optional<long> diag_n;
  diag->add_option("--suite", diag_suite, "suite name")
      ->required()
      ->check(CLI::IsMember(
          {"psi-kappa", "enumerate", "marginal", "geweke", "lifetime", "stationarity"}));
  diag->add_option("--seed", diag_seed, "random seed");
  diag->add_option("--n", diag_n, "sample-size override");
  diag->add_option("--out", diag_out, "write the JSON report here instead of stdout");

  // ---- summarize ----
  auto* summ = app.add_subcommand("summarize", "re-derive summaries from a stored chain");
  std::string summ_chain, summ_out;
  summ->add_option("--chain", summ_chain, "chain JSON-lines file")->required();
  summ->add_option("--out", summ_out, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    json cfg;
    cfg["model"] = sim_model;
    cfg["alpha"] = sim_alpha;
    cfg["tau"] = sim_tau;
    if (sim_phi && sim_xi) {
      std::cerr << "plrank: --phi and --xi are mutually exclusive\n";
      return 1;
    }
    if (sim_xi)
      cfg["xi"] = *sim_xi;
    else
      cfg["phi"] = sim_phi.value_or(10.0);
    cfg["epochs"] = sim_epochs;
    cfg["list_len"] = sim_list_len;
    cfg["seed"] = sim_seed;

    DatasetHandle data;
    char* truth = nullptr;
    if (plr_status st = plr_simulate(cfg.dump().c_str(), &data.p, &truth); st != PLR_OK)
      return die(st, "simulate");
    const fs::path dir = resolve_out_dir(sim_out);
    fs::create_directories(dir);
    if (plr_status st = plr_dataset_save_csv(data.p, (dir / "data.csv").c_str());
        st != PLR_OK)
      return die(st, "writing data.csv");
    write_text_file(dir / "truth.json", truth);
    plr_string_free(truth);
    std::cout << "wrote " << (dir / "data.csv").string() << " and "
              << (dir / "truth.json").string() << "\n";
    return 0;
  }

  if (fit->parsed()) {
    json cfg = json::object();
    if (!fit_config.empty()) cfg = json::parse(read_text_file(fit_config));
    cfg["model"] = fit_model;
    cfg["seed"] = fit_seed;
    if (fit_iterations) cfg["iterations"] = *fit_iterations;
    if (fit_burn_in) cfg["burn_in"] = *fit_burn_in;
    if (fit_thinning) cfg["thinning"] = *fit_thinning;
    if (fit_chains) cfg["chains"] = *fit_chains;
    if (fit_phi && fit_xi) {
      std::cerr << "plrank: --phi and --xi are mutually exclusive\n";
      return 1;
    }
    if (fit_phi) cfg["phi"] = {{"mode", "fixed"}, {"value", *fit_phi}};
    if (fit_xi) cfg["phi"] = {{"mode", "xi"}, {"xi", *fit_xi}};
    if (fit_no_filter) cfg["first_appearance_filter"] = false;

    DatasetHandle data;
    if (plr_status st = plr_dataset_load_csv(fit_data.c_str(), &data.p); st != PLR_OK)
      return die(st, "loading " + fit_data);

    const int chains = cfg.value("chains", 1);
    const std::uint64_t base_seed = cfg.value("seed", std::uint64_t{0});
    const fs::path dir = resolve_out_dir(fit_out);
    fs::create_directories(dir);

    ChainHandle pooled;
    for (int c = 0; c < chains; ++c) {
      json chain_cfg = cfg;
      chain_cfg["seed"] = base_seed + static_cast<std::uint64_t>(c);
      ChainHandle chain;
      if (plr_status st = plr_fit(data.p, chain_cfg.dump().c_str(), &chain.p);
          st != PLR_OK)
        return die(st, "fit");
      const fs::path chain_path =
          chains == 1 ? dir / "chain.jsonl"
                      : dir / ("chain-" + std::to_string(c + 1) + ".jsonl");
      if (plr_status st = plr_chain_save_jsonl(chain.p, chain_path.c_str()); st != PLR_OK)
        return die(st, "writing chain file");
      if (pooled.p == nullptr) {
        pooled.p = chain.p;
        chain.p = nullptr;
      } else if (plr_status st = plr_chain_append(pooled.p, chain.p); st != PLR_OK) {
        return die(st, "pooling chains");
      }
    }
    if (plr_status st = plr_chain_summary_csv(pooled.p, (dir / "summary.csv").c_str());
        st != PLR_OK)
      return die(st, "writing summary.csv");
    std::cout << "wrote " << (dir / "summary.csv").string() << " ("
              << plr_chain_num_draws(pooled.p) << " draws)\n";
    return 0;
  }

  if (diag->parsed()) {
    json cfg;
    cfg["seed"] = diag_seed;
    if (diag_n) cfg["n"] = *diag_n;
    char* report = nullptr;
    if (plr_status st = plr_diagnose(diag_suite.c_str(), cfg.dump().c_str(), &report);
        st != PLR_OK)
      return die(st, "diagnose");
    const std::string text = report;
    plr_string_free(report);
    if (!diag_out.empty())
      write_text_file(diag_out, text);
    else
      std::cout << text;
    const bool pass = json::parse(text).value("pass", false);
    return pass ? 0 : 2;
  }

  if (summ->parsed()) {
    ChainHandle chain;
    if (plr_status st = plr_chain_load_jsonl(summ_chain.c_str(), &chain.p); st != PLR_OK)
      return die(st, "loading " + summ_chain);
    if (plr_status st = plr_chain_summary_csv(chain.p, summ_out.c_str()); st != PLR_OK)
      return die(st, "writing " + summ_out);
    std::cout << "wrote " << summ_out << "\n";
    return 0;
  }

  return 0;
}
