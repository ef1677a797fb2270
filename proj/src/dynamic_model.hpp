#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chain.hpp"
#include "measures.hpp"
#include "rankings.hpp"
#include "rng.hpp"
#include "static_model.hpp"

namespace plrank {

// Improper p(phi) ~ 1/phi by default, or a proper Gamma(a, b).
struct PhiPrior {
  bool improper = true;
  double a = 0.0;
  double b = 0.0;
};

struct DynamicConfig {
  long iterations = 20000;
  long burn_in = 10000;
  long thinning = 1;
  std::uint64_t seed = 0;
  double tau = 1.0;
  AlphaPrior alpha_prior{};
  bool infer_alpha = true;
  double alpha_init = 1.0;
  PhiPrior phi_prior{};
  bool infer_phi = true;
  double phi_init = 1.0;
  // fixed per-transition dependence parameters (size T-1), e.g. from the
  // continuous-time mapping; when set, phi is not inferred
  std::vector<double> phi_schedule;
  double mh_sigma = 0.1;
  bool adapt_mh = true;          // burn-in only, targets 0.3 acceptance
  bool first_appearance_filter = true;
};

// Observations compiled to dense indices: lists[t][l][i] is the
// unique-item index ranked i-th in the l-th list of epoch t.
struct DynamicData {
  int T = 0;
  int K = 0;
  std::vector<ItemId> unique_items;
  std::vector<std::vector<std::vector<int>>> lists;
  std::vector<std::vector<int>> n;      // [t][k] occurrences
  std::vector<int> first_obs, last_obs; // [k]

  static DynamicData compile(const std::vector<std::vector<PartialRanking>>& per_epoch);
};

// Gibbs state. Support of each atom's weight path must be a contiguous
// epoch interval covering all its observations; c[t][k] couples epochs
// t and t+1 and is >= 1 exactly when the atom is alive on both sides.
struct DynamicLatentState {
  std::vector<std::vector<double>> w;            // [T][K]
  std::vector<double> w_star;                    // [T]
  std::vector<std::vector<long>> c;              // [T-1][K]
  std::vector<long> c_star;                      // [T-1]
  std::vector<std::vector<std::vector<double>>> z;  // [t][l][i]
  double alpha = 1.0;
  double phi = 1.0;   // constant dependence parameter unless a schedule is set

  double epoch_sum_z(int t) const;
  double measure_total(int t) const;             // all atoms + remainder
};

// per-transition phi values actually in force (schedule or constant)
std::vector<double> transition_phis(const DynamicLatentState& s, const DynamicConfig& cfg,
                                    int T);

// likelihood pool at epoch t: remainder plus every item past its first
// appearance (all items when the filter is off)
double likelihood_pool(const DynamicLatentState& s, const DynamicData& d,
                       const DynamicConfig& cfg, int t);

// ---- generative/prior operations ------------------------------------

struct PittWalkerCounts {
  std::vector<long> atom_counts;  // aligned with g.atoms()
  long remainder_count = 0;
};

// One Pitt-Walker transition applied to an instantiated measure:
// per-atom Poisson(phi*w) counts, survivors redrawn Gamma(c, tau+phi),
// remainder propagated in aggregate, innovation mass Gamma(alpha,
// tau+phi). With innovation_epsilon > 0 the innovation measure is
// instantiated into explicit atoms by stick-breaking down to that
// relative mass (simulation path); otherwise it is carried in the
// remainder.
AtomicMeasure pitt_walker_step(const GammaProcessParams& params, const AtomicMeasure& g,
                               double phi, Rng& rng, PittWalkerCounts* counts = nullptr,
                               double innovation_epsilon = 0.0);

// Probability that an atom of mass w at epoch 1 is dead at epoch
// t_horizon, via the backward recurrence on y.
double lifetime_death_prob(double w, std::span<const double> phis, double tau,
                           int t_horizon);

// Discrete skeleton of the continuous-time model: tau / (e^{tau xi dt} - 1).
double phi_from_continuous_time(double tau, double xi, double dt);

struct DynamicSimulation {
  std::vector<std::vector<PartialRanking>> lists;  // [t][l]
  std::vector<AtomicMeasure> truth;                // measure per epoch
};

DynamicSimulation simulate_dynamic_dataset(const GammaProcessParams& params, double phi,
                                           int T, int m, int lists_per_epoch, Rng& rng,
                                           double epsilon = 1e-8);

// ---- Gibbs sweep steps -----------------------------------------------

// tilt recursions shared by the collapsed updates, with phis[t] the
// dependence parameter of the coupling between epochs t and t+1:
// backward: x[T-1] = tilt[T-1], x[t] = tilt[t] + phi_t x[t+1]/(tau+phi_t+x[t+1])
// forward : u[0] = tilt[0],     u[t] = tilt[t] + phi_{t-1} u[t-1]/(tau+phi_{t-1}+u[t-1])
std::vector<double> backward_tilt(const std::vector<double>& epoch_tilt,
                                  std::span<const double> phis, double tau);
std::vector<double> forward_tilt(const std::vector<double>& epoch_tilt,
                                 std::span<const double> phis, double tau);

// step 1a: redraw the total-mass chain from its prior and rescale all
// weights per epoch
void update_total_masses_and_rescale(DynamicLatentState& s, const DynamicConfig& cfg,
                                     Rng& rng);

// step 1b pointwise kernel. For w[t+1][k] > 0 a zero-truncated Poisson
// proposal accepted on the Gamma density ratio; for w[t+1][k] == 0 the
// exact two-point conditional on c in {0, 1}.
double prob_c_zero_given_dead(double w, double phi, double tau);
void mh_update_c(DynamicLatentState& s, const DynamicData& d, const DynamicConfig& cfg,
                 Rng& rng);

// step 1b continuation: joint redraw of the post-appearance tail
// (resp. pre-appearance head) of item k's path, restoring
// irreducibility across the death boundary. `x` (resp. `u`) is the
// matching tilt recursion.
void sample_dead_tail(DynamicLatentState& s, const DynamicData& d, const DynamicConfig& cfg,
                      int k, int from_epoch, const std::vector<double>& x, Rng& rng);
void sample_dead_head(DynamicLatentState& s, const DynamicData& d, const DynamicConfig& cfg,
                      int k, int upto_epoch, const std::vector<double>& u, Rng& rng);

// step 2a: collapsed alpha update via the (x, y) recursions
GammaShapeRate alpha_dynamic_params(const DynamicLatentState& s, const DynamicData& d,
                                    const DynamicConfig& cfg);
void update_alpha_dynamic(DynamicLatentState& s, const DynamicData& d,
                          const DynamicConfig& cfg, Rng& rng);

// step 2b: joint backward-forward redraw of the unobserved-mass chain
void update_cstar_wstar(DynamicLatentState& s, const DynamicData& d,
                        const DynamicConfig& cfg, Rng& rng);

// step 3 conjugate weight updates; exposed parameters for fixtures.
// Each phi in the rate corresponds to one live Poisson coupling, so
// boundary epochs carry tau + phi and interior epochs tau + 2 phi.
GammaShapeRate dynamic_weight_params(const DynamicLatentState& s, const DynamicData& d,
                                     const DynamicConfig& cfg, int t, int k);
GammaShapeRate dynamic_wstar_params(const DynamicLatentState& s, const DynamicData& d,
                                    const DynamicConfig& cfg, int t);
void update_weights_dynamic(DynamicLatentState& s, const DynamicData& d,
                            const DynamicConfig& cfg, Rng& rng);

// step 4
void update_z_dynamic(DynamicLatentState& s, const DynamicData& d,
                      const DynamicConfig& cfg, Rng& rng);

// step 5: log-normal random-walk MH on the constant phi with the
// c-marginalized transition densities (series truncated at 1e-12
// relative tail). Skipped when a phi schedule is fixed.
double log_atom_transition(double w_next, double w_cur, double phi, double tau,
                           double alpha);
double log_remainder_transition(double w_next, double w_cur, double phi, double tau,
                                double alpha);
double phi_log_acceptance(const DynamicLatentState& s, double phi_new,
                          const DynamicConfig& cfg);
bool mh_update_phi(DynamicLatentState& s, const DynamicData& d, const DynamicConfig& cfg,
                   double sigma, Rng& rng);

// exact conditional draw of a coupling count given both endpoint
// masses (used for initialization and harnesses)
long sample_c_conditional(double w, double w_next, double phi, double tau, Rng& rng);
long sample_cstar_conditional(double w, double w_next, double phi, double tau, double alpha,
                              Rng& rng);

DynamicLatentState init_dynamic_state(const DynamicData& d, const DynamicConfig& cfg,
                                      Rng& rng);
void dynamic_sweep(DynamicLatentState& s, const DynamicData& d, const DynamicConfig& cfg,
                   double mh_sigma, Rng& rng, bool* phi_accepted = nullptr);

// throws std::logic_error if lifetime contiguity or the coupling
// biconditional is violated
void check_state_invariants(const DynamicLatentState& s, const DynamicData& d);

PosteriorChain run_dynamic_gibbs(const std::vector<std::vector<PartialRanking>>& per_epoch,
                                 const DynamicConfig& cfg);

}  // namespace plrank
