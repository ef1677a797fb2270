#include "chain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace plrank {

namespace {

double pool_mass(const PosteriorChain& chain, const ChainDraw& d, int t) {
  double pool = d.w_star[t];
  const int K = chain.num_items();
  for (int k = 0; k < K; ++k) {
    if (chain.first_appearance_filter && chain.first_epoch[k] > t) continue;
    pool += d.w[t][k];
  }
  return pool;
}

// type-7 quantile (linear interpolation) on a sorted vector
double quantile_sorted(const std::vector<double>& xs, double q) {
  if (xs.empty()) return 0.0;
  const double pos = q * (static_cast<double>(xs.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

}  // namespace

double normalized_weight(const PosteriorChain& chain, const ChainDraw& d, int t, int k) {
  if (chain.first_appearance_filter && chain.first_epoch[k] > t) return 0.0;
  return d.w[t][k] / pool_mass(chain, d, t);
}

double normalized_new_mass(const PosteriorChain& chain, const ChainDraw& d, int t) {
  return d.w_star[t] / pool_mass(chain, d, t);
}

std::vector<SummaryRow> summarize_normalized_weights(const PosteriorChain& chain) {
  if (chain.draws.empty()) throw std::runtime_error("summarize: chain has no draws");
  const int T = chain.epochs;
  const int K = chain.num_items();
  std::vector<SummaryRow> rows;
  rows.reserve(static_cast<std::size_t>(T) * (K + 1));
  std::vector<double> vals(chain.draws.size());
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k <= K; ++k) {
      for (std::size_t i = 0; i < chain.draws.size(); ++i) {
        const ChainDraw& d = chain.draws[i];
        vals[i] = (k < K) ? normalized_weight(chain, d, t, k)
                          : normalized_new_mass(chain, d, t);
      }
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      std::vector<double> sorted = vals;
      std::sort(sorted.begin(), sorted.end());
      SummaryRow row;
      row.epoch = t + 1;
      row.item = (k < K) ? chain.item_labels[k] : "__new__";
      row.mean = mean;
      row.q025 = quantile_sorted(sorted, 0.025);
      row.q975 = quantile_sorted(sorted, 0.975);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace plrank
