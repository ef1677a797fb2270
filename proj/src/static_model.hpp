#pragma once

#include <cstdint>
#include <span>

#include "chain.hpp"
#include "measures.hpp"
#include "rankings.hpp"
#include "rng.hpp"

namespace plrank {

// Gamma(a, b) hyperprior on alpha. a = b = 0 encodes the improper
// p(alpha) ~ 1/alpha, valid whenever at least one item was observed.
struct AlphaPrior {
  double a = 0.0;
  double b = 0.0;
  bool improper() const { return a == 0.0 && b == 0.0; }
};

struct StaticConfig {
  long iterations = 20000;
  long burn_in = 10000;
  long thinning = 1;
  std::uint64_t seed = 0;
  double tau = 1.0;  // fixed during inference; generative use only
  AlphaPrior alpha_prior{};
  bool infer_alpha = true;
  double alpha_init = 1.0;
};

// Full Gibbs state for the static model: inter-arrival times per
// (list, rank), one weight per observed unique item, the total mass
// of all unobserved atoms, and the concentration parameter.
struct StaticLatentState {
  std::vector<std::vector<double>> z;  // [list][rank]
  std::vector<double> w;               // [k]
  double w_star = 0.0;
  double alpha = 1.0;

  double sum_z() const;
  double sum_w() const { double s = 0; for (double x : w) s += x; return s; }
};

// Plackett-Luce log probability of a top-m list under an atomic
// measure (Eq.-(1) form, with the remainder mass participating in
// every denominator). Throws if a ranked item has no weight or the
// measure has no mass.
double pl_log_probability(const AtomicMeasure& g, const PartialRanking& ranking);

struct GammaShapeRate {
  double shape = 0.0;
  double rate = 0.0;
};

// Conjugate-update parameters, exposed so unit tests can check the
// hand-computed fixtures exactly.
double z_rate(const StaticLatentState& s, const ObservedStats& stats, int l, int i);
GammaShapeRate weight_update_params(const StaticLatentState& s, const ObservedStats& stats,
                                    int k, double tau);
GammaShapeRate wstar_update_params(const StaticLatentState& s, double tau);
GammaShapeRate alpha_update_params(const StaticLatentState& s, int num_items,
                                   const AlphaPrior& prior, double tau);

void gibbs_update_z(StaticLatentState& s, const ObservedStats& stats, Rng& rng);
void gibbs_update_weights(StaticLatentState& s, const ObservedStats& stats, double tau,
                          Rng& rng);
void gibbs_update_wstar(StaticLatentState& s, double tau, Rng& rng);
// draws alpha from its collapsed conditional, then immediately
// refreshes w_star (the update is derived with w_star marginalized)
void gibbs_update_alpha(StaticLatentState& s, const ObservedStats& stats,
                        const AlphaPrior& prior, double tau, Rng& rng);

StaticLatentState init_static_state(const ObservedStats& stats, const StaticConfig& cfg);
// one full sweep: Z -> w -> w_star -> alpha (with its w_star refresh)
void static_sweep(StaticLatentState& s, const ObservedStats& stats,
                  const StaticConfig& cfg, Rng& rng);

PosteriorChain run_static_gibbs(std::span<const PartialRanking> rankings,
                                const StaticConfig& cfg);

// probability that the next rank-1 pick is a previously unseen item
double predictive_new_item_prob(double w_star, std::span<const double> weights);

}  // namespace plrank
