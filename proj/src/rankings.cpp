#include "rankings.hpp"

#include <stdexcept>
#include <unordered_set>

namespace plrank {

void validate_ranking(const PartialRanking& r) {
  if (r.items.empty())
    throw std::invalid_argument("partial ranking must contain at least one item");
  std::unordered_set<ItemId> seen;
  for (ItemId id : r.items) {
    if (!seen.insert(id).second)
      throw std::invalid_argument("duplicate item within a partial ranking");
  }
}

bool ObservedStats::delta(int l, int i, int k) const {
  const auto& list = lists[l];
  for (int j = 0; j < i; ++j) {
    if (list[j] == k) return false;
  }
  return true;
}

ObservedStats compute_occurrence_stats(std::span<const PartialRanking> rankings) {
  ObservedStats stats;
  std::unordered_map<ItemId, int> index;
  for (const PartialRanking& r : rankings) {
    validate_ranking(r);
    std::vector<int> list;
    list.reserve(r.items.size());
    for (ItemId id : r.items) {
      auto [it, inserted] = index.emplace(id, stats.num_items());
      if (inserted) {
        stats.unique_items.push_back(id);
        stats.counts.push_back(0);
      }
      ++stats.counts[it->second];
      list.push_back(it->second);
    }
    stats.total_ranks += static_cast<long>(list.size());
    stats.lists.push_back(std::move(list));
  }
  return stats;
}

}  // namespace plrank
