#pragma once

#include <vector>

#include "rankings.hpp"
#include "rng.hpp"

namespace plrank {

// Gamma process parameters: Levy intensity alpha * w^-1 * exp(-w*tau).
struct GammaProcessParams {
  double alpha;  // concentration
  double tau;    // inverse scale

  GammaProcessParams(double alpha_, double tau_);
};

struct Atom {
  ItemId id;
  double weight;
};

// Atomic random measure with a finite set of instantiated atoms and an
// aggregate mass for everything not yet instantiated. Total mass is the
// conserved quantity: instantiation moves mass from the remainder to a
// fresh atom, never creates or destroys it.
class AtomicMeasure {
 public:
  AtomicMeasure() = default;
  AtomicMeasure(std::vector<Atom> atoms, double remainder);

  const std::vector<Atom>& atoms() const { return atoms_; }
  double remainder() const { return remainder_; }
  double total_mass() const;

  // fresh-id atom carved out of the remainder
  ItemId instantiate_from_remainder(double mass);
  // fresh-id atom with external mass (simulation plumbing)
  ItemId add_atom(double mass);
  void set_remainder(double mass);
  void remove_atom_at(std::size_t pos);

  ItemId next_id() const { return next_id_; }
  void reserve_ids(ItemId first_free);

 private:
  std::vector<Atom> atoms_;
  double remainder_ = 0.0;
  ItemId next_id_ = 0;
};

// Laplace exponent of the Levy intensity: alpha * log(1 + z/tau).
double levy_psi(const GammaProcessParams& params, double z);

// n-th moment of the exponentially tilted intensity:
// alpha * Gamma(n) / (z + tau)^n.
double levy_kappa(const GammaProcessParams& params, long n, double z);
double log_levy_kappa(const GammaProcessParams& params, long n, double z);

// Finite instantiation for Monte Carlo oracles: draws the total mass
// Gamma(alpha, tau), then stick-breaks Beta(1, alpha) fractions until
// the remainder falls below epsilon * total.
AtomicMeasure sample_truncated_gamma_process(const GammaProcessParams& params,
                                             double epsilon, Rng& rng);

// m successive size-biased picks without replacement. A pick landing in
// the remainder instantiates a fresh atom with a Beta(1, alpha) fraction
// of the remaining un-instantiated mass, which is exact for a gamma
// process remainder. The measure is updated in place.
PartialRanking sample_top_m(const GammaProcessParams& params, AtomicMeasure& g,
                            int m, Rng& rng);

}  // namespace plrank
