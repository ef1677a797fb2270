#include "measures.hpp"

#include <cmath>
#include <stdexcept>

namespace plrank {

GammaProcessParams::GammaProcessParams(double alpha_, double tau_)
    : alpha(alpha_), tau(tau_) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::domain_error("gamma process: alpha must be > 0");
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw std::domain_error("gamma process: tau must be > 0");
}

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms, double remainder)
    : atoms_(std::move(atoms)), remainder_(remainder) {
  for (const Atom& a : atoms_) {
    if (!(a.weight > 0.0)) throw std::invalid_argument("atom weights must be > 0");
    if (a.id >= next_id_) next_id_ = a.id + 1;
  }
  if (remainder_ < 0.0) throw std::invalid_argument("remainder mass must be >= 0");
}

double AtomicMeasure::total_mass() const {
  double t = remainder_;
  for (const Atom& a : atoms_) t += a.weight;
  return t;
}

ItemId AtomicMeasure::instantiate_from_remainder(double mass) {
  if (mass > remainder_) mass = remainder_;  // guard rounding
  // a denormal remainder can make the fraction underflow to zero;
  // hand the atom everything that is left instead
  if (mass <= 0.0) mass = remainder_;
  remainder_ -= mass;
  return add_atom(mass);
}

ItemId AtomicMeasure::add_atom(double mass) {
  const ItemId id = next_id_++;
  atoms_.push_back(Atom{id, mass});
  return id;
}

void AtomicMeasure::set_remainder(double mass) {
  if (mass < 0.0) throw std::invalid_argument("remainder mass must be >= 0");
  remainder_ = mass;
}

void AtomicMeasure::remove_atom_at(std::size_t pos) {
  atoms_.erase(atoms_.begin() + static_cast<std::ptrdiff_t>(pos));
}

void AtomicMeasure::reserve_ids(ItemId first_free) {
  if (first_free > next_id_) next_id_ = first_free;
}

double levy_psi(const GammaProcessParams& params, double z) {
  if (z < 0.0 || !std::isfinite(z)) throw std::domain_error("levy_psi: z must be >= 0");
  return params.alpha * std::log1p(z / params.tau);
}

double levy_kappa(const GammaProcessParams& params, long n, double z) {
  return std::exp(log_levy_kappa(params, n, z));
}

double log_levy_kappa(const GammaProcessParams& params, long n, double z) {
  if (n < 1) throw std::domain_error("levy_kappa: n must be >= 1 (integral diverges)");
  if (z < 0.0 || !std::isfinite(z)) throw std::domain_error("levy_kappa: z must be >= 0");
  return std::log(params.alpha) + std::lgamma(static_cast<double>(n)) -
         static_cast<double>(n) * std::log(z + params.tau);
}

// Beta(1, alpha) stick computed through log(u)/alpha so that both the
// taken fraction and the kept fraction stay accurate when alpha pushes
// the draw within an ulp of 0 or 1.
static void break_stick(double alpha, Rng& rng, double remainder, double* taken,
                        double* kept) {
  const double t = std::log(rng.uniform()) / alpha;
  *taken = -std::expm1(t) * remainder;
  *kept = std::exp(t) * remainder;
}

AtomicMeasure sample_truncated_gamma_process(const GammaProcessParams& params,
                                             double epsilon, Rng& rng) {
  if (!(epsilon > 0.0)) throw std::domain_error("truncation epsilon must be > 0");
  const double total = rng.gamma(params.alpha, params.tau);
  AtomicMeasure g({}, total);
  const double floor_mass = epsilon * total;
  while (g.remainder() > floor_mass) {
    double taken = 0.0, kept = 0.0;
    break_stick(params.alpha, rng, g.remainder(), &taken, &kept);
    if (taken <= 0.0) break;  // the remainder is no longer splittable
    g.instantiate_from_remainder(taken);
    g.set_remainder(kept);
  }
  return g;
}

PartialRanking sample_top_m(const GammaProcessParams& params, AtomicMeasure& g,
                            int m, Rng& rng) {
  if (m < 1) throw std::domain_error("sample_top_m: m must be >= 1");
  if (!(g.total_mass() > 0.0))
    throw std::invalid_argument("sample_top_m: measure has no mass");

  PartialRanking out;
  out.items.reserve(static_cast<std::size_t>(m));
  std::vector<char> chosen(g.atoms().size(), 0);

  for (int stage = 0; stage < m; ++stage) {
    // stage total rebuilt by summation so huge weight ratios cannot
    // cancel the remaining mass away
    double unchosen = g.remainder();
    std::size_t last_free = g.atoms().size();
    for (std::size_t j = 0; j < g.atoms().size(); ++j) {
      if (chosen[j]) continue;
      unchosen += g.atoms()[j].weight;
      last_free = j;
    }
    double u = rng.uniform() * unchosen;
    ItemId picked = -1;
    for (std::size_t j = 0; j < g.atoms().size(); ++j) {
      if (chosen[j]) continue;
      if (u < g.atoms()[j].weight) {
        picked = g.atoms()[j].id;
        chosen[j] = 1;
        break;
      }
      u -= g.atoms()[j].weight;
    }
    if (picked < 0) {
      if (g.remainder() > 0.0) {
        // landed in the remainder: materialize a fresh atom
        double taken = 0.0, kept = 0.0;
        break_stick(params.alpha, rng, g.remainder(), &taken, &kept);
        if (taken <= 0.0) taken = g.remainder(), kept = 0.0;
        picked = g.instantiate_from_remainder(taken);
        g.set_remainder(kept);
        chosen.push_back(1);
      } else {
        // rounding overran the atom walk with nothing left behind it
        if (last_free == g.atoms().size())
          throw std::invalid_argument("sample_top_m: measure exhausted");
        picked = g.atoms()[last_free].id;
        chosen[last_free] = 1;
      }
    }
    out.items.push_back(picked);
  }
  return out;
}

}  // namespace plrank
