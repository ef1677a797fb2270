#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace plrank {

// Opaque item label. Fresh labels are generated from a per-measure
// counter on instantiation, so new atoms never collide with existing
// ones (the base distribution is non-atomic). Persisted data maps
// these to string labels at the I/O layer.
using ItemId = std::int64_t;

// An ordered top-m list of distinct items.
struct PartialRanking {
  std::vector<ItemId> items;

  int size() const { return static_cast<int>(items.size()); }
};

// throws std::invalid_argument on duplicates or empty list
void validate_ranking(const PartialRanking& r);

// Occurrence statistics of a collection of partial rankings: the
// unique items in first-appearance order, their occurrence counts,
// and the lists re-expressed in unique-item indices. The occurrence
// indicator delta(l, i, k) is implicit: it is 0 exactly when item k
// appears in list l at a rank strictly below i.
struct ObservedStats {
  std::vector<ItemId> unique_items;         // k -> id
  std::vector<int> counts;                  // n_k
  std::vector<std::vector<int>> lists;      // [list][rank] -> k
  long total_ranks = 0;                     // sum of list lengths

  int num_items() const { return static_cast<int>(unique_items.size()); }
  int num_lists() const { return static_cast<int>(lists.size()); }
  bool delta(int l, int i, int k) const;    // direct form, O(i)
};

ObservedStats compute_occurrence_stats(std::span<const PartialRanking> rankings);

}  // namespace plrank
