#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "chain.hpp"
#include "dynamic_model.hpp"
#include "measures.hpp"
#include "rankings.hpp"
#include "rng.hpp"
#include "static_model.hpp"

// Independent reference implementations and statistical harnesses used
// to validate the closed forms and samplers in the other modules. None
// of the reference paths below reuse the model-update code they check.

namespace plrank::oracle {

// ---- numerical quadrature of the Levy integrals (GSL, adaptive) ------
double quad_levy_psi(const GammaProcessParams& params, double z);
double quad_levy_kappa(const GammaProcessParams& params, int n, double z);

// ---- exhaustive Plackett-Luce enumeration ----------------------------

struct TopMDistribution {
  // orderings as index tuples into the weight vector, with probabilities
  std::map<std::vector<int>, double> prob;
  double total = 0.0;
};

// all ordered m-subsets of at most 8 items, probabilities by direct
// products of the selection fractions
TopMDistribution enumerate_topm_distribution(std::span<const double> weights,
                                             double remainder, int m);

// ---- finite Plackett-Luce Gibbs (M items, Gamma(alpha/M, tau) prior) --

struct FiniteGibbsResult {
  // per-sweep draws of the observed items' weights and the total of the
  // M - K unobserved shares
  std::vector<std::vector<double>> w_observed;
  std::vector<double> w_unobserved_total;
  std::vector<ItemId> unique_items;
};

FiniteGibbsResult finite_gibbs(std::span<const PartialRanking> rankings, int num_items,
                               double alpha, double tau, long sweeps, long burn_in,
                               Rng& rng);

// ---- Monte Carlo check of the closed-form marginal --------------------

struct MarginalFixture {
  std::vector<PartialRanking> lists;
  std::vector<std::vector<double>> z;  // fixed auxiliary variables, per list
};

struct MarginalCheckResult {
  double mc_estimate = 0.0;
  double mc_se = 0.0;
  double closed_form = 0.0;
  double z_score = 0.0;
  long n_samples = 0;
};

// Averages the weight-only likelihood over truncated gamma process
// draws (atoms standing in for the fixed observation locations, base
// density factors excluded) and compares with
// exp(-psi(sum Z)) * prod_k kappa(n_k, sum delta Z).
MarginalCheckResult marginal_check(const MarginalFixture& fixture,
                                   const GammaProcessParams& params, long n_mc,
                                   double epsilon, Rng& rng);

// closed-form side alone (for limit checks)
double marginal_closed_form(const MarginalFixture& fixture, const GammaProcessParams& params);

// ---- statistical helpers ----------------------------------------------

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  long n = 0;
};

MeanSe mean_se(std::span<const double> xs);
// autocorrelation-robust standard error via batch means
MeanSe batch_mean_se(std::span<const double> xs, int batches = 50);

double normal_sf(double z);  // upper tail of the standard normal

// one-sample Kolmogorov-Smirnov against a cdf; asymptotic p-value
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf);
double ks_pvalue(double d, long n);
double ks_2sample_pvalue(std::vector<double> a, std::vector<double> b);

double gamma_cdf(double x, double shape, double rate);
double chi2_sf(double x, double dof);

// chi-square goodness of fit: counts vs expected probabilities
double chi2_gof_pvalue(std::span<const long> counts, std::span<const double> probs);

double kendall_tau_b(std::span<const double> a, std::span<const double> b);

// ---- Geweke (getting-it-right) harnesses -------------------------------

struct GewekeStat {
  std::string name;
  double forward_mean = 0, forward_se = 0;
  double conditional_mean = 0, conditional_se = 0;
  double z = 0;
  bool pass = false;
};

struct GewekeReport {
  std::vector<GewekeStat> stats;
  double threshold = 4.0;
  long n = 0;
  bool pass = false;

  double max_abs_z() const;
};

struct StaticGewekeSpec {
  int num_lists = 3;
  int list_len = 2;
  // proper Gamma prior on alpha, shaped to keep draws away from the
  // denormal range
  double a = 3.0, b = 3.0;
  double tau = 1.0;
  long n = 100000;
  double threshold = 4.0;
  // negative-control knob: scales the rate of the w_star draw
  double corrupt_wstar_rate = 1.0;
};

GewekeReport geweke_static(const StaticGewekeSpec& spec, Rng& rng);

struct DynamicGewekeSpec {
  int T = 3;
  int list_len = 3;
  double a = 3.0, b = 3.0;          // alpha prior
  double phi_a = 2.0, phi_b = 1.0;  // phi prior
  double tau = 1.0;
  double mh_sigma = 0.4;
  long n = 100000;
  double threshold = 4.0;
  double corrupt_wstar_rate = 1.0;
};

GewekeReport geweke_dynamic(const DynamicGewekeSpec& spec, Rng& rng);

}  // namespace plrank::oracle
