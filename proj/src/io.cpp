#include "io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "oracle.hpp"

namespace plrank::io {

using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_long(const std::string& s, long& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stol(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

// days since 1970-01-01, proleptic Gregorian
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return static_cast<long>(era) * 146097L + static_cast<long>(doe) - 719468L;
}

bool parse_iso_date(const std::string& s, long& days) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  const int y = std::stoi(s.substr(0, 4));
  const int m = std::stoi(s.substr(5, 2));
  const int d = std::stoi(s.substr(8, 2));
  if (m < 1 || m > 12 || d < 1 || d > 31) return false;
  days = days_from_civil(y, m, d);
  return true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string item_label_for_id(ItemId id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "item%04lld", static_cast<long long>(id + 1));
  return buf;
}

}  // namespace

Dataset ingest_csv_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  long line_no = 0;

  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (trim(line) != "epoch,rank,item")
    throw std::runtime_error("csv line 1: expected header 'epoch,rank,item'");

  struct Row {
    long rank;
    std::string item;
    long line_no;
  };
  // epoch key -> rows; ordering resolved after the scan
  std::map<std::string, std::vector<Row>> by_epoch;
  std::map<std::string, long> epoch_order;  // numeric value or day count
  int dated = -1;                           // -1 unknown, 0 integer, 1 date

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 3)
      throw std::runtime_error("csv line " + std::to_string(line_no) +
                               ": expected 3 fields 'epoch,rank,item'");
    const std::string epoch = trim(fields[0]);
    const std::string rank_s = trim(fields[1]);
    const std::string item = trim(fields[2]);
    long rank = 0;
    if (!parse_long(rank_s, rank) || rank < 1)
      throw std::runtime_error("csv line " + std::to_string(line_no) +
                               ": rank must be a positive integer");
    if (item.empty())
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": empty item");
    long order = 0;
    long days = 0;
    if (parse_iso_date(epoch, days)) {
      if (dated == 0)
        throw std::runtime_error("csv line " + std::to_string(line_no) +
                                 ": mixed integer and date epochs");
      dated = 1;
      order = days;
    } else if (parse_long(epoch, order)) {
      if (dated == 1)
        throw std::runtime_error("csv line " + std::to_string(line_no) +
                                 ": mixed integer and date epochs");
      dated = 0;
    } else {
      throw std::runtime_error("csv line " + std::to_string(line_no) +
                               ": epoch must be an integer or YYYY-MM-DD date");
    }
    epoch_order[epoch] = order;
    by_epoch[epoch].push_back({rank, item, line_no});
  }
  if (by_epoch.empty()) throw std::runtime_error("csv: no data rows");

  std::vector<std::pair<long, std::string>> ordered;
  for (const auto& [label, order] : epoch_order) ordered.emplace_back(order, label);
  std::sort(ordered.begin(), ordered.end());

  Dataset data;
  data.dated = dated == 1;
  std::map<std::string, ItemId> intern;
  for (std::size_t t = 0; t < ordered.size(); ++t) {
    const std::string& label = ordered[t].second;
    auto rows = by_epoch[label];
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.rank < b.rank; });
    PartialRanking ranking;
    std::map<std::string, long> seen_items;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].rank == rows[i - 1].rank)
        throw std::runtime_error("csv line " + std::to_string(rows[i].line_no) +
                                 ": duplicate rank " + std::to_string(rows[i].rank) +
                                 " in epoch " + label);
      if (rows[i].rank != static_cast<long>(i + 1))
        throw std::runtime_error("csv: epoch " + label +
                                 " has non-contiguous ranks (missing rank " +
                                 std::to_string(i + 1) + ")");
      auto [it, inserted] = seen_items.emplace(rows[i].item, rows[i].line_no);
      if (!inserted)
        throw std::runtime_error("csv line " + std::to_string(rows[i].line_no) +
                                 ": duplicate item '" + rows[i].item + "' in epoch " +
                                 label);
      auto [entry, fresh] =
          intern.emplace(rows[i].item, static_cast<ItemId>(data.item_labels.size()));
      if (fresh) data.item_labels.push_back(rows[i].item);
      ranking.items.push_back(entry->second);
    }
    data.epoch_labels.push_back(label);
    data.lists.push_back({std::move(ranking)});
    if (t + 1 < ordered.size())
      data.gaps.push_back(static_cast<double>(ordered[t + 1].first - ordered[t].first));
  }
  return data;
}

Dataset ingest_csv_file(const std::string& path) {
  return ingest_csv_text(read_file(path));
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out = "epoch,rank,item\n";
  for (int t = 0; t < data.epochs(); ++t) {
    if (data.lists[t].size() != 1)
      throw std::runtime_error("csv export supports exactly one list per epoch");
    const PartialRanking& r = data.lists[t][0];
    for (int i = 0; i < r.size(); ++i) {
      out += data.epoch_labels[t];
      out += ',';
      out += std::to_string(i + 1);
      out += ',';
      out += data.item_labels[static_cast<std::size_t>(r.items[i])];
      out += '\n';
    }
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---- configuration -------------------------------------------------------

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  cfg.model = j.value("model", cfg.model);
  if (cfg.model != "static" && cfg.model != "dynamic")
    throw std::runtime_error("config: model must be 'static' or 'dynamic'");
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.burn_in = j.value("burn_in", cfg.burn_in);
  cfg.thinning = j.value("thinning", cfg.thinning);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.tau = j.value("tau", cfg.tau);
  cfg.mh_sigma = j.value("mh_sigma", cfg.mh_sigma);
  cfg.adapt_mh = j.value("adapt_mh", cfg.adapt_mh);
  cfg.first_appearance_filter =
      j.value("first_appearance_filter", cfg.first_appearance_filter);
  cfg.chains = j.value("chains", cfg.chains);
  if (j.contains("alpha")) {
    const json& a = j["alpha"];
    if (a.contains("fixed")) {
      cfg.alpha_fixed = true;
      cfg.alpha_value = a["fixed"].get<double>();
    } else {
      const std::string p = a.value("prior", "improper");
      if (p == "improper") {
        cfg.alpha_prior = {0.0, 0.0};
      } else if (p == "gamma") {
        cfg.alpha_prior = {a.value("a", 1.0), a.value("b", 1.0)};
      } else {
        throw std::runtime_error("config: alpha.prior must be 'improper' or 'gamma'");
      }
      cfg.alpha_value = a.value("init", cfg.alpha_value);
    }
  }
  if (j.contains("phi")) {
    const json& p = j["phi"];
    cfg.phi_mode = p.value("mode", cfg.phi_mode);
    if (cfg.phi_mode != "infer" && cfg.phi_mode != "fixed" && cfg.phi_mode != "xi")
      throw std::runtime_error("config: phi.mode must be 'infer', 'fixed' or 'xi'");
    cfg.phi_value = p.value("value", p.value("init", cfg.phi_value));
    cfg.xi = p.value("xi", cfg.xi);
    const std::string prior = p.value("prior", "improper");
    if (prior == "improper") {
      cfg.phi_prior = {true, 0.0, 0.0};
    } else if (prior == "gamma") {
      cfg.phi_prior = {false, p.value("a", 1.0), p.value("b", 1.0)};
    } else {
      throw std::runtime_error("config: phi.prior must be 'improper' or 'gamma'");
    }
  }
  cfg.time_unit = j.value("time_unit", cfg.time_unit);
  if (cfg.time_unit != "weeks" && cfg.time_unit != "days")
    throw std::runtime_error("config: time_unit must be 'weeks' or 'days'");
  if (cfg.iterations <= cfg.burn_in || cfg.burn_in < 0 || cfg.thinning < 1)
    throw std::runtime_error("config: need iterations > burn_in >= 0 and thinning >= 1");
  if (cfg.chains < 1) throw std::runtime_error("config: chains must be >= 1");
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["model"] = cfg.model;
  j["iterations"] = cfg.iterations;
  j["burn_in"] = cfg.burn_in;
  j["thinning"] = cfg.thinning;
  j["seed"] = cfg.seed;
  j["tau"] = cfg.tau;
  if (cfg.alpha_fixed) {
    j["alpha"] = {{"fixed", cfg.alpha_value}};
  } else if (cfg.alpha_prior.improper()) {
    j["alpha"] = {{"prior", "improper"}, {"init", cfg.alpha_value}};
  } else {
    j["alpha"] = {{"prior", "gamma"}, {"a", cfg.alpha_prior.a}, {"b", cfg.alpha_prior.b},
                  {"init", cfg.alpha_value}};
  }
  json p;
  p["mode"] = cfg.phi_mode;
  p["value"] = cfg.phi_value;
  p["xi"] = cfg.xi;
  p["prior"] = cfg.phi_prior.improper ? "improper" : "gamma";
  if (!cfg.phi_prior.improper) {
    p["a"] = cfg.phi_prior.a;
    p["b"] = cfg.phi_prior.b;
  }
  j["phi"] = p;
  j["time_unit"] = cfg.time_unit;
  j["mh_sigma"] = cfg.mh_sigma;
  j["adapt_mh"] = cfg.adapt_mh;
  j["first_appearance_filter"] = cfg.first_appearance_filter;
  j["chains"] = cfg.chains;
  return j.dump();
}

// ---- fit -------------------------------------------------------------------

PosteriorChain fit(const Dataset& data, const RunConfig& cfg) {
  if (data.epochs() == 0) throw std::runtime_error("fit: empty dataset");
  PosteriorChain chain;
  if (cfg.model == "static") {
    std::vector<PartialRanking> flat;
    for (const auto& epoch : data.lists)
      for (const auto& r : epoch) flat.push_back(r);
    StaticConfig sc;
    sc.iterations = cfg.iterations;
    sc.burn_in = cfg.burn_in;
    sc.thinning = cfg.thinning;
    sc.seed = cfg.seed;
    sc.tau = cfg.tau;
    sc.alpha_prior = cfg.alpha_prior;
    sc.infer_alpha = !cfg.alpha_fixed;
    sc.alpha_init = cfg.alpha_value;
    chain = run_static_gibbs(flat, sc);
  } else {
    DynamicConfig dc;
    dc.iterations = cfg.iterations;
    dc.burn_in = cfg.burn_in;
    dc.thinning = cfg.thinning;
    dc.seed = cfg.seed;
    dc.tau = cfg.tau;
    dc.alpha_prior = cfg.alpha_prior;
    dc.infer_alpha = !cfg.alpha_fixed;
    dc.alpha_init = cfg.alpha_value;
    dc.phi_prior = cfg.phi_prior;
    dc.mh_sigma = cfg.mh_sigma;
    dc.adapt_mh = cfg.adapt_mh;
    dc.first_appearance_filter = cfg.first_appearance_filter;
    if (cfg.phi_mode == "infer") {
      dc.infer_phi = true;
      dc.phi_init = cfg.phi_value;
    } else if (cfg.phi_mode == "fixed") {
      dc.infer_phi = false;
      dc.phi_init = cfg.phi_value;
    } else {
      dc.infer_phi = false;
      dc.phi_init = 1.0;
      for (double gap : data.gaps) {
        const double dt = data.dated
                              ? gap / (cfg.time_unit == "weeks" ? 7.0 : 1.0)
                              : gap;
        dc.phi_schedule.push_back(phi_from_continuous_time(cfg.tau, cfg.xi, dt));
      }
    }
    chain = run_dynamic_gibbs(data.lists, dc);
  }
  // replace the in-memory ids with the dataset's labels
  for (std::size_t k = 0; k < chain.item_ids.size(); ++k)
    chain.item_labels[k] = data.item_labels[static_cast<std::size_t>(chain.item_ids[k])];
  chain.epoch_labels = cfg.model == "static" ? std::vector<std::string>{"1"}
                                             : data.epoch_labels;
  return chain;
}

// ---- simulate ---------------------------------------------------------------

SimulateSpec parse_simulate_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("simulate config: invalid JSON: ") + e.what());
  }
  SimulateSpec spec;
  spec.model = j.value("model", spec.model);
  if (spec.model != "static" && spec.model != "dynamic")
    throw std::runtime_error("simulate: model must be 'static' or 'dynamic'");
  spec.alpha = j.value("alpha", spec.alpha);
  spec.tau = j.value("tau", spec.tau);
  spec.epochs = j.value("epochs", spec.epochs);
  spec.list_len = j.value("list_len", spec.list_len);
  spec.seed = j.value("seed", spec.seed);
  spec.epsilon = j.value("epsilon", spec.epsilon);
  if (j.contains("xi")) {
    spec.use_xi = true;
    spec.xi = j["xi"].get<double>();
  }
  if (j.contains("phi")) {
    spec.use_xi = false;
    spec.phi = j["phi"].get<double>();
  }
  if (spec.epochs < 1 || spec.list_len < 1)
    throw std::runtime_error("simulate: epochs and list_len must be >= 1");
  return spec;
}

SimulateResult simulate(const SimulateSpec& spec) {
  Rng rng(spec.seed);
  const GammaProcessParams params(spec.alpha, spec.tau);
  SimulateResult res;
  json truth;
  truth["model"] = spec.model;
  truth["alpha"] = spec.alpha;
  truth["tau"] = spec.tau;

  auto weights_json = [&](const AtomicMeasure& g) {
    json w = json::object();
    for (const Atom& a : g.atoms()) w[item_label_for_id(a.id)] = a.weight;
    return w;
  };

  if (spec.model == "static") {
    AtomicMeasure g({}, rng.gamma(spec.alpha, spec.tau));
    for (int l = 0; l < spec.epochs; ++l) {
      PartialRanking r = sample_top_m(params, g, spec.list_len, rng);
      res.data.epoch_labels.push_back(std::to_string(l + 1));
      res.data.lists.push_back({std::move(r)});
      if (l + 1 < spec.epochs) res.data.gaps.push_back(1.0);
    }
    for (ItemId id = 0; id < g.next_id(); ++id)
      res.data.item_labels.push_back(item_label_for_id(id));
    truth["weights"] = weights_json(g);
    truth["remainder"] = g.remainder();
    truth["total_mass"] = g.total_mass();
  } else {
    const double phi =
        spec.use_xi ? phi_from_continuous_time(spec.tau, spec.xi, 1.0) : spec.phi;
    truth["phi"] = phi;
    if (spec.use_xi) truth["xi"] = spec.xi;
    DynamicSimulation sim = simulate_dynamic_dataset(params, phi, spec.epochs,
                                                     spec.list_len, 1, rng, spec.epsilon);
    ItemId max_id = 0;
    for (const auto& g : sim.truth) max_id = std::max(max_id, g.next_id());
    for (ItemId id = 0; id < max_id; ++id)
      res.data.item_labels.push_back(item_label_for_id(id));
    json epochs = json::array();
    for (int t = 0; t < spec.epochs; ++t) {
      res.data.epoch_labels.push_back(std::to_string(t + 1));
      res.data.lists.push_back(sim.lists[t]);
      if (t + 1 < spec.epochs) res.data.gaps.push_back(1.0);
      json e;
      e["weights"] = weights_json(sim.truth[t]);
      e["remainder"] = sim.truth[t].remainder();
      e["total_mass"] = sim.truth[t].total_mass();
      epochs.push_back(std::move(e));
    }
    truth["epochs"] = epochs;
  }
  res.truth_json = truth.dump(2);
  res.truth_json += '\n';
  return res;
}

// ---- chain persistence --------------------------------------------------------

std::string chain_to_jsonl(const PosteriorChain& chain) {
  json meta;
  meta["type"] = "meta";
  meta["format"] = "plrank-chain";
  meta["version"] = 1;
  meta["model"] = chain.model;
  meta["tau"] = chain.tau;
  meta["epochs"] = chain.epochs;
  meta["has_phi"] = chain.has_phi;
  meta["first_appearance_filter"] = chain.first_appearance_filter;
  meta["items"] = chain.item_labels;
  meta["item_first_epoch"] = chain.first_epoch;
  meta["epoch_labels"] = chain.epoch_labels;
  std::string out = meta.dump();
  out += '\n';
  for (const ChainDraw& d : chain.draws) {
    json j;
    j["sweep"] = d.sweep;
    j["alpha"] = d.alpha;
    if (chain.has_phi) j["phi"] = d.phi;
    j["w_star"] = d.w_star;
    j["w"] = d.w;
    out += j.dump();
    out += '\n';
  }
  return out;
}

PosteriorChain chain_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("chain file: empty");
  json meta = json::parse(line);
  if (meta.value("type", "") != "meta" || meta.value("format", "") != "plrank-chain")
    throw std::runtime_error("chain file: missing plrank-chain meta line");
  PosteriorChain chain;
  chain.model = meta.at("model").get<std::string>();
  chain.tau = meta.at("tau").get<double>();
  chain.epochs = meta.at("epochs").get<int>();
  chain.has_phi = meta.at("has_phi").get<bool>();
  chain.first_appearance_filter = meta.at("first_appearance_filter").get<bool>();
  chain.item_labels = meta.at("items").get<std::vector<std::string>>();
  chain.first_epoch = meta.at("item_first_epoch").get<std::vector<int>>();
  chain.epoch_labels = meta.at("epoch_labels").get<std::vector<std::string>>();
  for (std::size_t k = 0; k < chain.item_labels.size(); ++k)
    chain.item_ids.push_back(static_cast<ItemId>(k));
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    ChainDraw d;
    d.sweep = j.at("sweep").get<long>();
    d.alpha = j.at("alpha").get<double>();
    d.phi = chain.has_phi ? j.at("phi").get<double>()
                          : std::numeric_limits<double>::quiet_NaN();
    d.w_star = j.at("w_star").get<std::vector<double>>();
    d.w = j.at("w").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(d.w_star.size()) != chain.epochs ||
        static_cast<int>(d.w.size()) != chain.epochs)
      throw std::runtime_error("chain file: draw dimensions do not match meta");
    chain.draws.push_back(std::move(d));
  }
  if (chain.draws.empty()) throw std::runtime_error("chain file: no draws");
  return chain;
}

void append_chain(PosteriorChain& dst, const PosteriorChain& src) {
  if (dst.model != src.model || dst.epochs != src.epochs ||
      dst.item_labels != src.item_labels)
    throw std::runtime_error("append_chain: incompatible chains");
  dst.draws.insert(dst.draws.end(), src.draws.begin(), src.draws.end());
}

std::string summary_to_csv(const PosteriorChain& chain) {
  const std::vector<SummaryRow> rows = summarize_normalized_weights(chain);
  std::string out = "epoch,item,mean,q025,q975\n";
  for (const SummaryRow& r : rows) {
    out += chain.epoch_labels[static_cast<std::size_t>(r.epoch - 1)];
    out += ',';
    out += r.item;
    out += ',';
    out += fmt_double(r.mean);
    out += ',';
    out += fmt_double(r.q025);
    out += ',';
    out += fmt_double(r.q975);
    out += '\n';
  }
  return out;
}

// ---- diagnose ------------------------------------------------------------------

namespace {

json check_entry(const std::string& name, bool pass, double statistic, double threshold,
                 const std::string& detail = "") {
  json j;
  j["name"] = name;
  j["pass"] = pass;
  j["statistic"] = statistic;
  j["threshold"] = threshold;
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

json diagnose_psi_kappa() {
  json checks = json::array();
  const double alphas[] = {0.3, 0.8, 1.0, 2.5, 7.0};
  const double taus[] = {0.5, 1.0, 1.5, 3.0, 8.0};
  const double zs[] = {0.1, 0.9, 4.0, 25.0};
  double max_rel_psi = 0.0, max_rel_kappa = 0.0;
  for (double a : alphas)
    for (double t : taus)
      for (double z : zs) {
        const GammaProcessParams p(a, t);
        const double psi_cf = levy_psi(p, z);
        const double psi_q = oracle::quad_levy_psi(p, z);
        max_rel_psi = std::max(max_rel_psi, std::fabs(psi_cf - psi_q) / std::fabs(psi_q));
        for (int n = 1; n <= 4; ++n) {
          const double k_cf = levy_kappa(p, n, z);
          const double k_q = oracle::quad_levy_kappa(p, n, z);
          max_rel_kappa = std::max(max_rel_kappa, std::fabs(k_cf - k_q) / std::fabs(k_q));
        }
      }
  checks.push_back(check_entry("psi_vs_quadrature_max_rel_err", max_rel_psi <= 1e-6,
                               max_rel_psi, 1e-6));
  checks.push_back(check_entry("kappa_vs_quadrature_max_rel_err", max_rel_kappa <= 1e-6,
                               max_rel_kappa, 1e-6));
  // kappa(n+1, z) = -d/dz kappa(n, z), central differences
  double max_rel_deriv = 0.0;
  for (double a : alphas)
    for (double z : zs) {
      const GammaProcessParams p(a, 1.0);
      for (int n = 1; n <= 3; ++n) {
        const double h = 1e-5 * (z + 1.0);
        const double deriv =
            -(levy_kappa(p, n, z + h) - levy_kappa(p, n, z - h)) / (2.0 * h);
        const double expect = levy_kappa(p, n + 1, z);
        max_rel_deriv = std::max(max_rel_deriv, std::fabs(deriv - expect) / expect);
      }
    }
  checks.push_back(check_entry("kappa_recurrence_finite_diff", max_rel_deriv <= 1e-4,
                               max_rel_deriv, 1e-4));
  return checks;
}

json diagnose_enumerate(Rng& rng) {
  json checks = json::array();
  double worst_sum = 0.0, worst_agree = 0.0;
  for (int M = 2; M <= 6; ++M) {
    std::vector<double> weights(M);
    for (double& w : weights) w = 0.2 + 2.0 * rng.uniform();
    for (int m = 1; m <= M; ++m) {
      const oracle::TopMDistribution dist =
          oracle::enumerate_topm_distribution(weights, 0.0, m);
      if (m == M || m == 1)
        worst_sum = std::max(worst_sum, std::fabs(dist.total - 1.0));
      AtomicMeasure g({}, 0.0);
      std::vector<ItemId> ids;
      for (double w : weights) ids.push_back(g.add_atom(w));
      for (const auto& [ordering, prob] : dist.prob) {
        PartialRanking r;
        for (int idx : ordering) r.items.push_back(ids[idx]);
        const double lp = pl_log_probability(g, r);
        worst_agree = std::max(worst_agree, std::fabs(std::exp(lp) - prob));
      }
    }
  }
  checks.push_back(check_entry("enumeration_total_prob", worst_sum <= 1e-10, worst_sum,
                               1e-10));
  checks.push_back(check_entry("enumeration_vs_pl_log_probability",
                               worst_agree <= 1e-12, worst_agree, 1e-12));
  return checks;
}

json diagnose_marginal(long n, Rng& rng) {
  json checks = json::array();
  {
    oracle::MarginalFixture f;
    f.lists.push_back({{0}});
    f.z = {{0.7}};
    const auto res = oracle::marginal_check(f, GammaProcessParams(1.2, 1.0), n, 1e-8, rng);
    checks.push_back(check_entry("marginal_K1_z_score", std::fabs(res.z_score) < 3.0,
                                 res.z_score, 3.0));
  }
  {
    oracle::MarginalFixture f;
    f.lists.push_back({{0, 1}});
    f.z = {{0.4, 1.1}};
    const auto res = oracle::marginal_check(f, GammaProcessParams(0.8, 1.0), n, 1e-8, rng);
    checks.push_back(check_entry("marginal_K2_z_score", std::fabs(res.z_score) < 3.0,
                                 res.z_score, 3.0));
  }
  return checks;
}

json diagnose_geweke(long n, Rng& rng) {
  json checks = json::array();
  oracle::StaticGewekeSpec sspec;
  sspec.n = n;
  const auto srep = oracle::geweke_static(sspec, rng);
  checks.push_back(check_entry("geweke_static_max_abs_z", srep.pass, srep.max_abs_z(),
                               srep.threshold));
  oracle::DynamicGewekeSpec dspec;
  dspec.n = n;
  const auto drep = oracle::geweke_dynamic(dspec, rng);
  checks.push_back(check_entry("geweke_dynamic_max_abs_z", drep.pass, drep.max_abs_z(),
                               drep.threshold));
  return checks;
}

json diagnose_lifetime(long n, Rng& rng) {
  json checks = json::array();
  struct Setting {
    double phi, tau, w;
  };
  const Setting settings[] = {{1.0, 1.0, 1.0}, {2.0, 1.0, 0.7}, {0.5, 1.0, 2.0}};
  const GammaProcessParams dummy(1.0, 1.0);
  (void)dummy;
  double worst = 0.0;
  for (const Setting& st : settings) {
    const std::vector<double> phis(8, st.phi);
    for (int horizon = 2; horizon <= 6; ++horizon) {
      long dead = 0;
      for (long i = 0; i < n; ++i) {
        double w = st.w;
        bool alive = true;
        for (int step = 0; step < horizon - 1 && alive; ++step) {
          const long c = rng.poisson(st.phi * w);
          if (c == 0)
            alive = false;
          else
            w = rng.gamma(static_cast<double>(c), st.tau + st.phi);
        }
        if (!alive) ++dead;
      }
      const double expect = lifetime_death_prob(st.w, phis, st.tau, horizon);
      const double p_hat = static_cast<double>(dead) / static_cast<double>(n);
      const double se = std::sqrt(expect * (1.0 - expect) / static_cast<double>(n));
      worst = std::max(worst, std::fabs(p_hat - expect) / se);
    }
  }
  checks.push_back(check_entry("lifetime_death_prob_max_abs_z", worst < 3.0, worst, 3.0));
  return checks;
}

json diagnose_stationarity(long steps, Rng& rng) {
  json checks = json::array();
  struct Setting {
    double alpha, tau, phi;
  };
  const Setting settings[] = {{1.0, 1.0, 1.0}, {2.0, 1.0, 10.0}};
  for (const Setting& st : settings) {
    // chain of total masses, thinned to near-independence for the KS test
    const double rho = st.phi / (st.tau + st.phi);
    const int stride = std::max(1, static_cast<int>(std::ceil(std::log(0.1) / std::log(rho))));
    double mass = rng.gamma(st.alpha, st.tau);
    std::vector<double> sample;
    for (long i = 0; i < steps; ++i) {
      const long m = rng.poisson(st.phi * mass);
      mass = rng.gamma(st.alpha + static_cast<double>(m), st.tau + st.phi);
      if (i % stride == 0) sample.push_back(mass);
    }
    const double d = oracle::ks_statistic(sample, [&](double v) {
      return oracle::gamma_cdf(v, st.alpha, st.tau);
    });
    const double p = oracle::ks_pvalue(d, static_cast<long>(sample.size()));
    char name[96];
    std::snprintf(name, sizeof(name), "stationarity_ks_p_alpha%.0f_phi%.0f", st.alpha,
                  st.phi);
    checks.push_back(check_entry(name, p > 0.01, p, 0.01));
  }
  return checks;
}

}  // namespace

std::string diagnose(const std::string& suite, const std::string& config_json) {
  json cfg = json::object();
  if (!config_json.empty()) cfg = json::parse(config_json);
  const std::uint64_t seed = cfg.value("seed", 20240801ULL);
  Rng rng(seed);
  json checks;
  if (suite == "psi-kappa") {
    checks = diagnose_psi_kappa();
  } else if (suite == "enumerate") {
    checks = diagnose_enumerate(rng);
  } else if (suite == "marginal") {
    checks = diagnose_marginal(cfg.value("n", 200000L), rng);
  } else if (suite == "geweke") {
    checks = diagnose_geweke(cfg.value("n", 20000L), rng);
  } else if (suite == "lifetime") {
    checks = diagnose_lifetime(cfg.value("n", 20000L), rng);
  } else if (suite == "stationarity") {
    checks = diagnose_stationarity(cfg.value("n", 10000L), rng);
  } else {
    throw std::runtime_error("unknown diagnose suite: " + suite);
  }
  bool pass = true;
  for (const auto& c : checks) pass = pass && c.at("pass").get<bool>();
  json report;
  report["suite"] = suite;
  report["seed"] = seed;
  report["pass"] = pass;
  report["checks"] = checks;
  return report.dump(2) + "\n";
}

}  // namespace plrank::io
