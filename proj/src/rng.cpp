#include "rng.hpp"

#include <cmath>
#include <stdexcept>

namespace plrank {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double Rng::uniform() {
  // 53 significant bits, shifted into the open interval
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double Rng::exponential(double rate) {
  if (!(rate > 0.0)) throw std::domain_error("exponential: rate must be > 0");
  return -std::log(uniform()) / rate;
}

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::domain_error("gamma: shape and rate must be > 0");
  if (shape < 1.0) {
    // boost to shape+1, then scale back by u^(1/shape)
    const double g = gamma(shape + 1.0, 1.0);
    const double u = uniform();
    return g * std::pow(u, 1.0 / shape) / rate;
  }
  // Marsaglia-Tsang squeeze
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

long Rng::poisson(double mean) {
  if (mean < 0.0 || !std::isfinite(mean))
    throw std::domain_error("poisson: mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean < 10.0) {
    const double limit = std::exp(-mean);
    long k = 0;
    double p = uniform();
    while (p > limit) {
      ++k;
      p *= uniform();
    }
    return k;
  }
  // PTRS transformed rejection (Hormann 1993)
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(kd);
    if (kd < 0.0 || (us < 0.013 && v > us)) continue;
    const long k = static_cast<long>(kd);
    const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    const double rhs = kd * log_mean - mean - std::lgamma(kd + 1.0);
    if (lhs <= rhs) return k;
  }
}

long Rng::zt_poisson(double mean) {
  if (!(mean > 0.0)) throw std::domain_error("zt_poisson: mean must be > 0");
  if (mean < 30.0) {
    // inversion on the truncated pmf; 1 - e^{-m} via expm1 for small m
    const double norm = -std::expm1(-mean);
    double u = uniform() * norm;
    long k = 1;
    double p = mean * std::exp(-mean);
    while (u > p && k < 4000) {
      u -= p;
      ++k;
      p *= mean / static_cast<double>(k);
    }
    return k;
  }
  for (;;) {
    const long k = poisson(mean);
    if (k >= 1) return k;
  }
}

Rng Rng::fork(std::uint64_t stream) {
  const std::uint64_t base = next_u64();
  return Rng(splitmix64(base ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

}  // namespace plrank
