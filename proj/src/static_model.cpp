#include "static_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace plrank {

double StaticLatentState::sum_z() const {
  double s = 0.0;
  for (const auto& list : z)
    for (double v : list) s += v;
  return s;
}

double pl_log_probability(const AtomicMeasure& g, const PartialRanking& ranking) {
  validate_ranking(ranking);
  std::unordered_map<ItemId, double> weight;
  weight.reserve(g.atoms().size());
  for (const Atom& a : g.atoms()) weight[a.id] = a.weight;

  const double total = g.total_mass();
  if (!(total > 0.0)) throw std::invalid_argument("pl_log_probability: zero total mass");

  double logp = 0.0;
  double taken = 0.0;
  for (ItemId id : ranking.items) {
    auto it = weight.find(id);
    if (it == weight.end())
      throw std::invalid_argument("pl_log_probability: ranked item has no weight");
    const double denom = total - taken;
    logp += std::log(it->second) - std::log(denom);
    taken += it->second;
  }
  return logp;
}

double z_rate(const StaticLatentState& s, const ObservedStats& stats, int l, int i) {
  double rate = s.w_star + s.sum_w();
  const auto& list = stats.lists[l];
  for (int j = 0; j < i; ++j) rate -= s.w[list[j]];
  return rate;
}

GammaShapeRate weight_update_params(const StaticLatentState& s, const ObservedStats& stats,
                                    int k, double tau) {
  // rate = tau + sum of Z_{li} over ranks where item k is still racing,
  // i.e. everything except the strictly-later ranks of lists containing k
  double rate = tau;
  for (int l = 0; l < stats.num_lists(); ++l) {
    const auto& list = stats.lists[l];
    const auto& zs = s.z[l];
    int upto = static_cast<int>(list.size());
    for (int i = 0; i < static_cast<int>(list.size()); ++i) {
      if (list[i] == k) {
        upto = i + 1;
        break;
      }
    }
    for (int i = 0; i < upto; ++i) rate += zs[i];
  }
  return {static_cast<double>(stats.counts[k]), rate};
}

GammaShapeRate wstar_update_params(const StaticLatentState& s, double tau) {
  return {s.alpha, tau + s.sum_z()};
}

GammaShapeRate alpha_update_params(const StaticLatentState& s, int num_items,
                                   const AlphaPrior& prior, double tau) {
  if (prior.improper() && num_items == 0)
    throw std::runtime_error("improper alpha prior requires at least one observed item");
  return {prior.a + static_cast<double>(num_items),
          prior.b + std::log1p(s.sum_z() / tau)};
}

void gibbs_update_z(StaticLatentState& s, const ObservedStats& stats, Rng& rng) {
  // rates built by summation (off-list mass plus the not-yet-ranked
  // suffix) so extreme weight ratios cannot cancel to zero
  std::vector<char> in_list(s.w.size(), 0);
  std::vector<double> rates;
  for (int l = 0; l < stats.num_lists(); ++l) {
    const auto& list = stats.lists[l];
    for (int k : list) in_list[k] = 1;
    double base = s.w_star;
    for (std::size_t k = 0; k < s.w.size(); ++k)
      if (!in_list[k]) base += s.w[k];
    rates.assign(list.size(), 0.0);
    double suffix = 0.0;
    for (int i = static_cast<int>(list.size()) - 1; i >= 0; --i) {
      suffix += s.w[list[i]];
      rates[i] = base + suffix;
    }
    for (std::size_t i = 0; i < list.size(); ++i)
      s.z[l][i] = rng.exponential(rates[i]);
    for (int k : list) in_list[k] = 0;
  }
}

void gibbs_update_weights(StaticLatentState& s, const ObservedStats& stats, double tau,
                          Rng& rng) {
  const int K = stats.num_items();
  // rate_k = tau + sum Z - (suffix Z after k's rank, per list containing k)
  double sum_z = 0.0;
  std::vector<double> excluded(K, 0.0);
  for (int l = 0; l < stats.num_lists(); ++l) {
    const auto& list = stats.lists[l];
    const auto& zs = s.z[l];
    double suffix = 0.0;
    for (int i = static_cast<int>(list.size()) - 1; i >= 0; --i) {
      excluded[list[i]] += suffix;
      suffix += zs[i];
    }
    sum_z += suffix;
  }
  for (int k = 0; k < K; ++k) {
    if (stats.counts[k] < 1)
      throw std::runtime_error("fixed atom with zero occurrences");
    s.w[k] = rng.gamma(static_cast<double>(stats.counts[k]),
                       tau + sum_z - excluded[k]);
  }
}

void gibbs_update_wstar(StaticLatentState& s, double tau, Rng& rng) {
  const GammaShapeRate p = wstar_update_params(s, tau);
  s.w_star = rng.gamma(p.shape, p.rate);
}

void gibbs_update_alpha(StaticLatentState& s, const ObservedStats& stats,
                        const AlphaPrior& prior, double tau, Rng& rng) {
  const GammaShapeRate p = alpha_update_params(s, stats.num_items(), prior, tau);
  s.alpha = rng.gamma(p.shape, p.rate);
  gibbs_update_wstar(s, tau, rng);
}

StaticLatentState init_static_state(const ObservedStats& stats, const StaticConfig& cfg) {
  StaticLatentState s;
  s.alpha = cfg.alpha_init;
  s.w.resize(stats.num_items());
  for (int k = 0; k < stats.num_items(); ++k)
    s.w[k] = static_cast<double>(stats.counts[k]) / cfg.tau;
  s.w_star = s.alpha / cfg.tau;
  s.z.resize(stats.lists.size());
  for (std::size_t l = 0; l < stats.lists.size(); ++l)
    s.z[l].assign(stats.lists[l].size(), 1.0);
  return s;
}

void static_sweep(StaticLatentState& s, const ObservedStats& stats,
                  const StaticConfig& cfg, Rng& rng) {
  gibbs_update_z(s, stats, rng);
  gibbs_update_weights(s, stats, cfg.tau, rng);
  gibbs_update_wstar(s, cfg.tau, rng);
  if (cfg.infer_alpha) gibbs_update_alpha(s, stats, cfg.alpha_prior, cfg.tau, rng);
}

PosteriorChain run_static_gibbs(std::span<const PartialRanking> rankings,
                                const StaticConfig& cfg) {
  if (cfg.iterations <= 0 || cfg.iterations <= cfg.burn_in || cfg.burn_in < 0 ||
      cfg.thinning < 1)
    throw std::invalid_argument("static gibbs: need iterations > burn_in >= 0, thinning >= 1");
  if (rankings.empty())
    throw std::invalid_argument("static gibbs: need at least one ranking");

  const ObservedStats stats = compute_occurrence_stats(rankings);
  if (cfg.infer_alpha && cfg.alpha_prior.improper() && stats.num_items() == 0)
    throw std::runtime_error("improper alpha prior requires at least one observed item");

  Rng rng(cfg.seed);
  StaticLatentState s = init_static_state(stats, cfg);
  gibbs_update_z(s, stats, rng);

  PosteriorChain chain;
  chain.model = "static";
  chain.tau = cfg.tau;
  chain.epochs = 1;
  chain.has_phi = false;
  chain.item_labels.reserve(stats.unique_items.size());
  for (ItemId id : stats.unique_items) {
    chain.item_labels.push_back(std::to_string(id));
    chain.item_ids.push_back(id);
  }
  chain.epoch_labels = {"1"};
  chain.first_epoch.assign(stats.unique_items.size(), 0);

  for (long it = 0; it < cfg.iterations; ++it) {
    static_sweep(s, stats, cfg, rng);
    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thinning == 0) {
      ChainDraw d;
      d.sweep = it;
      d.alpha = s.alpha;
      d.phi = std::numeric_limits<double>::quiet_NaN();
      d.w_star = {s.w_star};
      d.w = {s.w};
      chain.draws.push_back(std::move(d));
    }
  }
  return chain;
}

double predictive_new_item_prob(double w_star, std::span<const double> weights) {
  double total = w_star;
  for (double w : weights) total += w;
  return w_star / total;
}

}  // namespace plrank
