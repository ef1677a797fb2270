#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "measures.hpp"
#include "oracle.hpp"
#include "rankings.hpp"
#include "rng.hpp"
#include "static_model.hpp"

using namespace plrank;

TEST_CASE("rng streams are deterministic and reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(43);
  CHECK(Rng(42).uniform() != c.uniform());
}

TEST_CASE("rng distribution moments") {
  Rng rng(7);
  const long n = 200000;
  double sg = 0, sp = 0, sz = 0;
  for (long i = 0; i < n; ++i) {
    sg += rng.gamma(2.5, 2.0);
    sp += static_cast<double>(rng.poisson(17.0));
    sz += static_cast<double>(rng.zt_poisson(0.4));
  }
  CHECK(sg / n == doctest::Approx(1.25).epsilon(0.01));
  CHECK(sp / n == doctest::Approx(17.0).epsilon(0.01));
  // zero-truncated Poisson mean m / (1 - e^-m)
  CHECK(sz / n == doctest::Approx(0.4 / (1.0 - std::exp(-0.4))).epsilon(0.01));
  CHECK_THROWS_AS((void)rng.gamma(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS((void)rng.poisson(-1.0), std::domain_error);
}

TEST_CASE("rng gamma passes a KS check against the cdf") {
  Rng rng(11);
  std::vector<double> xs(20000);
  for (double& x : xs) x = rng.gamma(0.7, 1.3);
  const double d = oracle::ks_statistic(xs, [](double v) {
    return oracle::gamma_cdf(v, 0.7, 1.3);
  });
  CHECK(oracle::ks_pvalue(d, static_cast<long>(xs.size())) > 0.01);
}

TEST_CASE("levy psi closed form") {
  CHECK(levy_psi(GammaProcessParams(1, 1), 0.0) == 0.0);
  CHECK(levy_psi(GammaProcessParams(2, 1), std::exp(1.0) - 1.0) ==
        doctest::Approx(2.0).epsilon(1e-12));
  const GammaProcessParams p(1.5, 2.0);
  const double quad = oracle::quad_levy_psi(p, 3.0);
  CHECK(std::fabs(levy_psi(p, 3.0) - quad) / quad < 1e-6);
  CHECK_THROWS_AS((void)levy_psi(p, -0.5), std::domain_error);
}

TEST_CASE("levy kappa closed form") {
  CHECK(levy_kappa(GammaProcessParams(3, 2), 1, 0.0) == doctest::Approx(1.5));
  CHECK(levy_kappa(GammaProcessParams(2, 1), 2, 1.0) == doctest::Approx(0.5));
  const GammaProcessParams p(1, 1);
  const double quad = oracle::quad_levy_kappa(p, 3, 0.7);
  CHECK(std::fabs(levy_kappa(p, 3, 0.7) - quad) / quad < 1e-6);
  CHECK_THROWS_AS((void)levy_kappa(p, 0, 1.0), std::domain_error);
}

TEST_CASE("kappa satisfies the derivative recurrence") {
  // kappa(n+1, z) = -d/dz kappa(n, z)
  for (double alpha : {0.5, 2.0}) {
    for (double tau : {1.0, 3.0}) {
      const GammaProcessParams p(alpha, tau);
      for (int n = 1; n <= 3; ++n) {
        for (double z : {0.2, 1.0, 6.0}) {
          const double h = 1e-5 * (z + tau);
          const double deriv =
              -(levy_kappa(p, n, z + h) - levy_kappa(p, n, z - h)) / (2 * h);
          const double expect = levy_kappa(p, n + 1, z);
          CHECK(std::fabs(deriv - expect) / expect < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("truncated gamma process sampling") {
  Rng rng(5);
  const GammaProcessParams p(2.0, 1.0);

  SUBCASE("epsilon = 1 instantiates nothing") {
    const AtomicMeasure g = sample_truncated_gamma_process(p, 1.0, rng);
    CHECK(g.atoms().empty());
    CHECK(g.remainder() == g.total_mass());
    CHECK(g.remainder() > 0.0);
  }

  SUBCASE("total mass is Gamma(alpha, tau) on average") {
    const long n = 100000;
    double sum = 0, sum2 = 0;
    for (long i = 0; i < n; ++i) {
      const double t = sample_truncated_gamma_process(p, 1e-4, rng).total_mass();
      sum += t;
      sum2 += t * t;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::fabs(mean - 2.0) < 3 * se);
  }

  SUBCASE("first stick is Beta(1, alpha)") {
    const GammaProcessParams p1(1.0, 1.0);
    const long n = 100000;
    double sum = 0;
    for (long i = 0; i < n; ++i) {
      const AtomicMeasure g = sample_truncated_gamma_process(p1, 1e-3, rng);
      REQUIRE(!g.atoms().empty());
      sum += g.atoms()[0].weight / g.total_mass();
    }
    const double se = std::sqrt(1.0 / 12.0 / n);  // Beta(1,1) variance
    CHECK(std::fabs(sum / n - 0.5) < 3 * se);
  }
}

TEST_CASE("sample_top_m basics") {
  Rng rng(17);
  const GammaProcessParams p(1.3, 1.0);

  SUBCASE("single atom is picked with probability one") {
    AtomicMeasure g({}, 0.0);
    const ItemId id = g.add_atom(1.0);
    const PartialRanking r = sample_top_m(p, g, 1, rng);
    CHECK(r.items == std::vector<ItemId>{id});
  }

  SUBCASE("m must be positive and mass must exist") {
    AtomicMeasure g({}, 1.0);
    CHECK_THROWS_AS((void)sample_top_m(p, g, 0, rng), std::domain_error);
    AtomicMeasure empty({}, 0.0);
    CHECK_THROWS_AS((void)sample_top_m(p, empty, 1, rng), std::invalid_argument);
  }

  SUBCASE("rank-1 lands in the remainder with probability remainder/total") {
    const long n = 100000;
    long fresh = 0;
    for (long i = 0; i < n; ++i) {
      AtomicMeasure g({}, 1.0);
      g.add_atom(1.5);
      g.add_atom(1.5);  // remainder fraction 0.25
      const ItemId before = g.next_id();
      const PartialRanking r = sample_top_m(p, g, 1, rng);
      if (r.items[0] >= before) ++fresh;
    }
    const double p_hat = static_cast<double>(fresh) / n;
    const double se = std::sqrt(0.25 * 0.75 / n);
    CHECK(std::fabs(p_hat - 0.25) < 3 * se);
  }

  SUBCASE("first pick's normalized weight is Uniform(0,1) at alpha = 1") {
    const GammaProcessParams p1(1.0, 1.0);
    std::vector<double> xs;
    for (int i = 0; i < 20000; ++i) {
      AtomicMeasure g({}, rng.gamma(1.0, 1.0));
      const double total = g.total_mass();
      (void)sample_top_m(p1, g, 1, rng);
      xs.push_back(g.atoms()[0].weight / total);
    }
    const double d = oracle::ks_statistic(xs, [](double v) { return v; });
    CHECK(oracle::ks_pvalue(d, static_cast<long>(xs.size())) > 0.01);
  }

  SUBCASE("full orderings follow the Plackett-Luce law (chi-square)") {
    const std::vector<double> weights = {2.0, 1.0, 1.0};
    const oracle::TopMDistribution dist =
        oracle::enumerate_topm_distribution(weights, 0.0, 3);
    std::map<std::vector<int>, long> counts;
    for (const auto& [ordering, prob] : dist.prob) counts[ordering] = 0;
    const long n = 100000;
    for (long i = 0; i < n; ++i) {
      AtomicMeasure g({}, 0.0);
      for (double w : weights) g.add_atom(w);
      const PartialRanking r = sample_top_m(p, g, 3, rng);
      std::vector<int> ordering;
      for (ItemId id : r.items) ordering.push_back(static_cast<int>(id));
      ++counts.at(ordering);
    }
    std::vector<long> cs;
    std::vector<double> ps;
    for (const auto& [ordering, prob] : dist.prob) {
      cs.push_back(counts.at(ordering));
      ps.push_back(prob);
    }
    CHECK(oracle::chi2_gof_pvalue(cs, ps) > 0.01);
  }

  SUBCASE("total mass is conserved by instantiation") {
    AtomicMeasure g({}, 2.0);
    g.add_atom(1.0);
    g.add_atom(0.5);
    const double before = g.total_mass();
    (void)sample_top_m(p, g, 3, rng);
    CHECK(g.total_mass() == doctest::Approx(before).epsilon(1e-12));
    CHECK(g.atoms().size() >= 3);
  }
}

TEST_CASE("occurrence statistics") {
  SUBCASE("counting over two lists") {
    std::vector<PartialRanking> lists = {{{0, 1}}, {{1, 2}}};
    const ObservedStats stats = compute_occurrence_stats(lists);
    CHECK(stats.num_items() == 3);
    CHECK(stats.counts == std::vector<int>{1, 2, 1});
    CHECK(stats.total_ranks == 4);
  }

  SUBCASE("delta indicators") {
    std::vector<PartialRanking> lists = {{{7, 9}}};
    const ObservedStats stats = compute_occurrence_stats(lists);
    // item 7 -> index 0, item 9 -> index 1
    CHECK(stats.delta(0, 0, 0));
    CHECK(!stats.delta(0, 1, 0));  // 7 already placed before rank 2
    CHECK(stats.delta(0, 1, 1));
  }

  SUBCASE("empty collection") {
    const ObservedStats stats = compute_occurrence_stats(std::vector<PartialRanking>{});
    CHECK(stats.num_items() == 0);
    CHECK(stats.total_ranks == 0);
  }

  SUBCASE("duplicate item rejected") {
    std::vector<PartialRanking> lists = {{{3, 3}}};
    CHECK_THROWS_AS((void)compute_occurrence_stats(lists), std::invalid_argument);
  }
}

TEST_CASE("pl_log_probability") {
  AtomicMeasure g({}, 0.0);
  const ItemId a = g.add_atom(2.0);
  const ItemId b = g.add_atom(1.0);
  g.add_atom(1.0);

  SUBCASE("hand-computed fixture") {
    CHECK(pl_log_probability(g, {{a, b}}) ==
          doctest::Approx(std::log(0.25)).epsilon(1e-12));
  }

  SUBCASE("single item with all mass") {
    AtomicMeasure solo({}, 0.0);
    const ItemId x = solo.add_atom(3.7);
    CHECK(pl_log_probability(solo, {{x}}) == doctest::Approx(0.0));
  }

  SUBCASE("probabilities over all ordered pairs sum to one") {
    AtomicMeasure h({}, 0.0);
    std::vector<ItemId> ids = {h.add_atom(1.3), h.add_atom(0.2), h.add_atom(2.5)};
    double total = 0.0;
    for (ItemId i : ids)
      for (ItemId j : ids) {
        if (i == j) continue;
        total += std::exp(pl_log_probability(h, {{i, j}}));
      }
    CHECK(std::fabs(total - 1.0) < 1e-10);
  }

  SUBCASE("scale invariance") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
      AtomicMeasure h({}, rng.uniform());
      std::vector<ItemId> ids;
      for (int k = 0; k < 4; ++k) ids.push_back(h.add_atom(0.1 + rng.uniform()));
      const double c = 0.01 + 100.0 * rng.uniform();
      AtomicMeasure scaled({}, h.remainder() * c);
      std::vector<ItemId> ids2;
      for (const Atom& at : h.atoms()) ids2.push_back(scaled.add_atom(at.weight * c));
      const PartialRanking r{{ids[2], ids[0], ids[3]}};
      const PartialRanking r2{{ids2[2], ids2[0], ids2[3]}};
      CHECK(std::fabs(pl_log_probability(h, r) - pl_log_probability(scaled, r2)) < 1e-12);
    }
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS((void)pl_log_probability(g, {{a, 99}}), std::invalid_argument);
    AtomicMeasure empty({}, 0.0);
    CHECK_THROWS_AS((void)pl_log_probability(empty, {{0}}), std::invalid_argument);
  }
}
