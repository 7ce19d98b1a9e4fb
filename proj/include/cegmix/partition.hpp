#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cegmix {

struct PartitionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A hard assignment of units (by index) to clusters 0..k-1 with no gaps.
struct Partition {
  std::vector<int> labels;
  int k = 0;

  // Relabels arbitrary integer labels to 0..k-1 in order of first appearance.
  static Partition from_labels(const std::vector<int>& raw);

  // Blocks as unit-index lists, ordered by cluster label.
  std::vector<std::vector<int>> blocks() const;

  std::size_t size() const { return labels.size(); }
  bool operator==(const Partition& other) const = default;
};

// Throws PartitionError unless labels are exactly 0..k-1 with no gaps.
void validate_partition(const Partition& p);

}  // namespace cegmix
