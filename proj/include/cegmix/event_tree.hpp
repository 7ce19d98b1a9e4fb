#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cegmix {

struct TreeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CycleDetected : TreeError {
  using TreeError::TreeError;
};
struct MultipleParents : TreeError {
  using TreeError::TreeError;
};
struct DisconnectedNode : TreeError {
  using TreeError::TreeError;
};
struct InvalidStaging : TreeError {
  using TreeError::TreeError;
};

struct Edge {
  std::string source;
  std::string target;
  std::string label;
  bool operator==(const Edge&) const = default;
};

// Rooted event tree over opaque string node ids. The node set is implicit:
// the root plus every edge endpoint.
struct EventTree {
  std::string root;
  std::vector<Edge> edges;

  // Root first, then endpoints in first-appearance order over the edge list.
  std::vector<std::string> nodes() const;
  // Situations are internal nodes (out-degree > 0); leaves the rest.
  std::vector<std::string> situations() const;
  std::vector<std::string> leaves() const;
};

// Disjoint non-empty blocks of situation ids covering all situations; every
// block must be label-compatible (identical outgoing label multisets).
struct Staging {
  std::vector<std::vector<std::string>> blocks;
};

// Throws CycleDetected, MultipleParents, or DisconnectedNode naming the
// offending node or edge; returns normally iff the tree invariants hold.
void validate_tree(const EventTree& tree);

// Throws InvalidStaging unless the blocks partition the situations and each
// block is label-compatible. Validates the tree first.
void validate_staging(const EventTree& tree, const Staging& staging);

// One singleton block per situation, in node order.
Staging singleton_staging(const EventTree& tree);

// Stage colour per situation: the block's index once blocks are sorted by
// their lexicographically smallest member.
std::map<std::string, int> stage_colours(const EventTree& tree, const Staging& staging);

// Groups situations whose rooted subtrees are isomorphic preserving
// structure, edge labels, and stage colours. Computed by one bottom-up
// signature pass: all leaves share a signature; a situation's signature is
// its stage colour plus the sorted multiset of (label, child signature)
// pairs. Output blocks are sorted by smallest member, members sorted.
std::vector<std::vector<std::string>> positions_from_staging(const EventTree& tree,
                                                             const Staging& staging);

struct Ceg {
  std::vector<std::vector<std::string>> positions;
  std::vector<std::string> representatives;  // parallel to positions
  std::vector<int> colours;                  // stage colour per position
  std::vector<Edge> edges;                   // between representatives and sink
  std::string sink;
};

// Contracts each position into its representative (lexicographically
// smallest member) and all leaves into one sink node. Parallel edges merge
// only when their labels coincide. Resulting node count is positions + 1.
Ceg build_ceg(const EventTree& tree, const Staging& staging);

// JSON interchange: {"root": id, "edges": [[src,dst,label],...],
// "staging": [[ids...],...]}. A missing staging key means all singletons.
struct TreeDocument {
  EventTree tree;
  Staging staging;
};
TreeDocument parse_tree_json(const std::string& text);
TreeDocument read_tree_json(const std::string& path);
std::string tree_json(const TreeDocument& doc);

// DOT renderings; stage colours become node fills.
std::string tree_to_dot(const EventTree& tree, const Staging& staging);
std::string ceg_to_dot(const Ceg& ceg);

}  // namespace cegmix
