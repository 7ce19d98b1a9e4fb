#include "cegmix/partition.hpp"

#include <algorithm>
#include <unordered_map>

namespace cegmix {

Partition Partition::from_labels(const std::vector<int>& raw) {
  Partition p;
  p.labels.reserve(raw.size());
  std::unordered_map<int, int> remap;
  for (int r : raw) {
    auto [it, inserted] = remap.try_emplace(r, static_cast<int>(remap.size()));
    p.labels.push_back(it->second);
  }
  p.k = static_cast<int>(remap.size());
  return p;
}

std::vector<std::vector<int>> Partition::blocks() const {
  std::vector<std::vector<int>> out(k);
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(static_cast<int>(i));
  return out;
}

void validate_partition(const Partition& p) {
  if (p.k < 0) throw PartitionError("negative cluster count");
  if (p.labels.empty()) {
    if (p.k != 0) throw PartitionError("empty partition with nonzero k");
    return;
  }
  std::vector<bool> seen(p.k, false);
  for (int l : p.labels) {
    if (l < 0 || l >= p.k) throw PartitionError("label out of range: " + std::to_string(l));
    seen[l] = true;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
    throw PartitionError("cluster indices have gaps");
}

}  // namespace cegmix
