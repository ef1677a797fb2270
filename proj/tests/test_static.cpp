#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "measures.hpp"
#include "oracle.hpp"
#include "static_model.hpp"

using namespace plrank;

namespace {

StaticLatentState state_for(const ObservedStats& stats, std::vector<double> w,
                            double w_star, double alpha,
                            std::vector<std::vector<double>> z) {
  StaticLatentState s;
  s.w = std::move(w);
  s.w_star = w_star;
  s.alpha = alpha;
  s.z = std::move(z);
  return s;
}

}  // namespace

TEST_CASE("z update rates match the hand-computed fixtures") {
  // one list (A, B) with w_star = 0.5, w_A = 2, w_B = 1
  std::vector<PartialRanking> lists = {{{0, 1}}};
  const ObservedStats stats = compute_occurrence_stats(lists);
  const StaticLatentState s = state_for(stats, {2.0, 1.0}, 0.5, 1.0, {{1.0, 1.0}});
  CHECK(z_rate(s, stats, 0, 0) == doctest::Approx(3.5));
  CHECK(z_rate(s, stats, 0, 1) == doctest::Approx(1.5));

  std::vector<PartialRanking> solo = {{{0}}};
  const ObservedStats solo_stats = compute_occurrence_stats(solo);
  const StaticLatentState s2 = state_for(solo_stats, {2.0}, 0.5, 1.0, {{1.0}});
  CHECK(z_rate(s2, solo_stats, 0, 0) == doctest::Approx(2.5));
}

TEST_CASE("weight update parameters") {
  // item 0 appears in three singleton lists; delta-weighted z sums to 2
  std::vector<PartialRanking> lists = {{{0}}, {{0}}, {{0}}};
  const ObservedStats stats = compute_occurrence_stats(lists);
  const StaticLatentState s =
      state_for(stats, {1.0}, 0.5, 1.0, {{0.5}, {0.7}, {0.8}});
  const GammaShapeRate p = weight_update_params(s, stats, 0, 1.0);
  CHECK(p.shape == doctest::Approx(3.0));
  CHECK(p.rate == doctest::Approx(3.0));

  // ranks after an item's position do not count toward its rate
  std::vector<PartialRanking> pair = {{{0, 1}}};
  const ObservedStats pstats = compute_occurrence_stats(pair);
  const StaticLatentState s2 = state_for(pstats, {1.0, 1.0}, 0.5, 1.0, {{0.4, 9.0}});
  const GammaShapeRate pa = weight_update_params(s2, pstats, 0, 1.0);
  CHECK(pa.shape == doctest::Approx(1.0));
  CHECK(pa.rate == doctest::Approx(1.4));  // tau + z_1 only
  const GammaShapeRate pb = weight_update_params(s2, pstats, 1, 1.0);
  CHECK(pb.rate == doctest::Approx(1.0 + 0.4 + 9.0));
}

TEST_CASE("w_star and alpha update parameters") {
  std::vector<PartialRanking> lists = {{{0, 1, 2, 3, 4}}};
  const ObservedStats stats = compute_occurrence_stats(lists);
  const double sz = std::exp(1.0) - 1.0;
  StaticLatentState s = state_for(stats, {1, 1, 1, 1, 1}, 0.5, 7.0,
                                  {{sz / 5, sz / 5, sz / 5, sz / 5, sz / 5}});

  SUBCASE("w_star posterior") {
    StaticLatentState s4 = s;
    s4.z = {{4.0, 0.0, 0.0, 0.0, 0.0}};
    const GammaShapeRate p = wstar_update_params(s4, 1.0);
    CHECK(p.shape == doctest::Approx(7.0));
    CHECK(p.rate == doctest::Approx(5.0));
  }

  SUBCASE("alpha posterior with K = 5 and sum z = e - 1") {
    const GammaShapeRate p = alpha_update_params(s, 5, AlphaPrior{1.0, 1.0}, 1.0);
    CHECK(p.shape == doctest::Approx(6.0));
    CHECK(p.rate == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("no data reduces alpha posterior to the prior") {
    StaticLatentState empty;
    empty.alpha = 1.0;
    const GammaShapeRate p = alpha_update_params(empty, 0, AlphaPrior{2.0, 3.0}, 1.0);
    CHECK(p.shape == doctest::Approx(2.0));
    CHECK(p.rate == doctest::Approx(3.0));
  }

  SUBCASE("improper prior demands observed items") {
    StaticLatentState empty;
    CHECK_THROWS_AS((void)alpha_update_params(empty, 0, AlphaPrior{}, 1.0),
                    std::runtime_error);
  }
}

TEST_CASE("conjugate updates have the right Monte Carlo means") {
  Rng rng(123);
  std::vector<PartialRanking> lists = {{{0, 1}}, {{0}}};
  const ObservedStats stats = compute_occurrence_stats(lists);
  StaticLatentState s = state_for(stats, {1.0, 1.0}, 0.5, 2.0, {{0.3, 0.9}, {0.6}});
  const long n = 100000;

  SUBCASE("weights") {
    const GammaShapeRate p = weight_update_params(s, stats, 0, 1.0);
    double sum = 0;
    for (long i = 0; i < n; ++i) {
      gibbs_update_weights(s, stats, 1.0, rng);
      sum += s.w[0];
    }
    const double expect = p.shape / p.rate;
    const double se = std::sqrt(p.shape) / p.rate / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(sum / n - expect) < 3 * se);
  }

  SUBCASE("w_star") {
    const GammaShapeRate p = wstar_update_params(s, 1.0);
    double sum = 0;
    for (long i = 0; i < n; ++i) {
      gibbs_update_wstar(s, 1.0, rng);
      sum += s.w_star;
    }
    const double se = std::sqrt(p.shape) / p.rate / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(sum / n - p.shape / p.rate) < 3 * se);
  }

  SUBCASE("alpha (with its immediate w_star refresh)") {
    const AlphaPrior prior{1.0, 1.0};
    const GammaShapeRate p = alpha_update_params(s, stats.num_items(), prior, 1.0);
    double sum = 0;
    for (long i = 0; i < n; ++i) {
      gibbs_update_alpha(s, stats, prior, 1.0, rng);
      sum += s.alpha;
    }
    const double se = std::sqrt(p.shape) / p.rate / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(sum / n - p.shape / p.rate) < 3 * se);
  }

  SUBCASE("z mean matches 1/rate") {
    double sum = 0;
    const double rate = z_rate(s, stats, 0, 1);
    for (long i = 0; i < n; ++i) {
      gibbs_update_z(s, stats, rng);
      sum += s.z[0][1];
    }
    CHECK(std::fabs(sum / n - 1.0 / rate) < 3.0 / rate / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("run_static_gibbs validates its configuration") {
  std::vector<PartialRanking> lists = {{{0}}};
  StaticConfig cfg;
  cfg.iterations = 0;
  CHECK_THROWS_AS((void)run_static_gibbs(lists, cfg), std::invalid_argument);
  cfg = StaticConfig{};
  CHECK_THROWS_AS((void)run_static_gibbs(std::vector<PartialRanking>{}, cfg),
                  std::invalid_argument);
}

TEST_CASE("synthetic recovery orders the leading items correctly") {
  Rng rng(2024);
  const GammaProcessParams params(1.0, 1.0);
  AtomicMeasure g = sample_truncated_gamma_process(params, 1e-10, rng);
  std::vector<PartialRanking> lists;
  for (int l = 0; l < 50; ++l) lists.push_back(sample_top_m(params, g, 10, rng));

  StaticConfig cfg;
  cfg.iterations = 4000;
  cfg.burn_in = 2000;
  cfg.seed = 99;
  const PosteriorChain chain = run_static_gibbs(lists, cfg);

  // top-3 items by true weight among the observed ones
  std::vector<std::pair<double, ItemId>> truth;
  const ObservedStats stats = compute_occurrence_stats(lists);
  for (const Atom& a : g.atoms()) {
    if (std::find(stats.unique_items.begin(), stats.unique_items.end(), a.id) !=
        stats.unique_items.end())
      truth.push_back({a.weight, a.id});
  }
  std::sort(truth.rbegin(), truth.rend());
  REQUIRE(truth.size() >= 3);

  std::vector<double> true_w, est_w;
  for (int i = 0; i < 3; ++i) {
    true_w.push_back(truth[i].first);
    const auto it = std::find(stats.unique_items.begin(), stats.unique_items.end(),
                              truth[i].second);
    const int k = static_cast<int>(it - stats.unique_items.begin());
    double mean = 0;
    for (const ChainDraw& d : chain.draws) mean += normalized_weight(chain, d, 0, k);
    est_w.push_back(mean / static_cast<double>(chain.draws.size()));
  }
  CHECK(oracle::kendall_tau_b(true_w, est_w) >= 0.8);
}

TEST_CASE("single observation matches the finite-model oracle") {
  std::vector<PartialRanking> lists = {{{0}}};

  StaticConfig cfg;
  cfg.iterations = 30000;
  cfg.burn_in = 5000;
  cfg.seed = 7;
  cfg.infer_alpha = false;
  cfg.alpha_init = 1.0;
  const PosteriorChain chain = run_static_gibbs(lists, cfg);
  double nonpar = 0;
  for (const ChainDraw& d : chain.draws)
    nonpar += d.w[0][0] / (d.w[0][0] + d.w_star[0]);
  nonpar /= static_cast<double>(chain.draws.size());

  Rng rng(8);
  const oracle::FiniteGibbsResult fin =
      oracle::finite_gibbs(lists, 1000, 1.0, 1.0, 30000, 5000, rng);
  double finite = 0;
  for (std::size_t i = 0; i < fin.w_observed.size(); ++i)
    finite += fin.w_observed[i][0] / (fin.w_observed[i][0] + fin.w_unobserved_total[i]);
  finite /= static_cast<double>(fin.w_observed.size());

  CHECK(std::fabs(nonpar - finite) < 0.02);
}

TEST_CASE("repeated identical lists concentrate the top weight") {
  auto mean_top = [](int copies) {
    std::vector<PartialRanking> lists(copies, PartialRanking{{0, 1}});
    StaticConfig cfg;
    cfg.iterations = 3000;
    cfg.burn_in = 1000;
    cfg.seed = 5;
    const PosteriorChain chain = run_static_gibbs(lists, cfg);
    double mean = 0;
    for (const ChainDraw& d : chain.draws) mean += normalized_weight(chain, d, 0, 0);
    return mean / static_cast<double>(chain.draws.size());
  };
  const double m1 = mean_top(1), m10 = mean_top(10), m100 = mean_top(100);
  CHECK(m1 < m10);
  CHECK(m10 < m100);
  CHECK(m100 > 0.8);
}

TEST_CASE("posterior is invariant to the order of the lists") {
  std::vector<PartialRanking> lists = {{{0, 1}}, {{2, 0}}, {{1, 2}}, {{0, 2}}};
  std::vector<PartialRanking> permuted = {lists[2], lists[0], lists[3], lists[1]};

  StaticConfig cfg;
  cfg.iterations = 30000;
  cfg.burn_in = 5000;
  cfg.seed = 31;
  const PosteriorChain a = run_static_gibbs(lists, cfg);
  const PosteriorChain b = run_static_gibbs(permuted, cfg);

  // compare the posterior mean normalized weight of item 0 (index may differ)
  auto mean_of_item = [](const PosteriorChain& chain, const std::string& label) {
    int k = -1;
    for (int i = 0; i < chain.num_items(); ++i)
      if (chain.item_labels[i] == label) k = i;
    REQUIRE(k >= 0);
    std::vector<double> vals;
    for (const ChainDraw& d : chain.draws)
      vals.push_back(normalized_weight(chain, d, 0, k));
    return oracle::batch_mean_se(vals, 50);
  };
  for (const std::string label : {"0", "1", "2"}) {
    const auto ma = mean_of_item(a, label);
    const auto mb = mean_of_item(b, label);
    const double z = (ma.mean - mb.mean) / std::sqrt(ma.se * ma.se + mb.se * mb.se);
    CHECK(std::fabs(z) < 4.0);
  }
}

TEST_CASE("predictive probability of a new item at rank one") {
  CHECK(predictive_new_item_prob(1.0, std::vector<double>{1.0, 2.0}) ==
        doctest::Approx(0.25));
  CHECK(predictive_new_item_prob(0.7, std::vector<double>{}) == doctest::Approx(1.0));

  // chain average equals the posterior-predictive frequency of a fresh
  // rank-1 item simulated from the recorded draws
  std::vector<PartialRanking> lists = {{{0, 1}}, {{1, 2}}};
  StaticConfig cfg;
  cfg.iterations = 22000;
  cfg.burn_in = 2000;
  cfg.seed = 13;
  const PosteriorChain chain = run_static_gibbs(lists, cfg);
  Rng rng(77);
  double avg = 0;
  long fresh = 0;
  for (const ChainDraw& d : chain.draws) {
    avg += predictive_new_item_prob(d.w_star[0], d.w[0]);
    AtomicMeasure g({}, d.w_star[0]);
    for (double w : d.w[0]) g.add_atom(w);
    const ItemId before = g.next_id();
    const PartialRanking pick = sample_top_m(GammaProcessParams(d.alpha, 1.0), g, 1, rng);
    if (pick.items[0] >= before) ++fresh;
  }
  avg /= static_cast<double>(chain.draws.size());
  const double freq = static_cast<double>(fresh) / static_cast<double>(chain.draws.size());
  CHECK(std::fabs(avg - freq) < 0.02);
}
