#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace plrank {

// One retained Gibbs draw. Static chains use a single epoch; phi is
// NaN when the model has no dependence parameter.
struct ChainDraw {
  long sweep = 0;
  double alpha = 0.0;
  double phi = 0.0;
  std::vector<double> w_star;            // [T]
  std::vector<std::vector<double>> w;    // [T][K]
};

struct PosteriorChain {
  std::string model;                     // "static" | "dynamic"
  double tau = 1.0;
  int epochs = 1;
  bool has_phi = false;
  bool first_appearance_filter = false;
  std::vector<std::string> item_labels;  // [K]
  std::vector<std::int64_t> item_ids;    // [K], in-memory ids behind the labels
  std::vector<std::string> epoch_labels; // [T]
  std::vector<int> first_epoch;          // [K], 0-based first observed epoch
  std::vector<ChainDraw> draws;

  int num_items() const { return static_cast<int>(item_labels.size()); }
};

// Per-draw normalized weight of item k at epoch t: w / pool where the
// pool is the remainder plus every item already past its first
// appearance (all items when the filter is off). Items not yet in the
// pool have normalized weight 0.
double normalized_weight(const PosteriorChain& chain, const ChainDraw& d, int t, int k);
// the unseen-mass share w_star / pool
double normalized_new_mass(const PosteriorChain& chain, const ChainDraw& d, int t);

struct SummaryRow {
  int epoch = 0;                 // 1-based in output
  std::string item;              // item label or "__new__"
  double mean = 0, q025 = 0, q975 = 0;
};

// Posterior mean and central 95% interval of the normalized weights,
// one row per (epoch, item) plus the unseen-mass series per epoch.
std::vector<SummaryRow> summarize_normalized_weights(const PosteriorChain& chain);

}  // namespace plrank
