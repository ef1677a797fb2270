#pragma once

#include <cstdint>
#include <random>

namespace plrank {

// Random generator with hand-rolled distributions. The engine is a
// std::mt19937_64 (bit-stable across platforms); the distribution
// algorithms are implemented here rather than taken from <random> so
// that identical seeds give identical streams under every standard
// library. Gamma and exponential draws are parameterized by *rate*.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform on the open interval (0, 1)
  double uniform();

  // standard normal (Marsaglia polar, one spare cached)
  double normal();

  double exponential(double rate);

  // shape/rate convention
  double gamma(double shape, double rate);

  double beta(double a, double b);

  // exact for all means: inversion below 10, PTRS rejection above
  long poisson(double mean);

  // zero-truncated Poisson: inversion for mean < 30, otherwise
  // rejection from the untruncated sampler
  long zt_poisson(double mean);

  // derive an independent deterministic stream
  Rng fork(std::uint64_t stream);

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace plrank
