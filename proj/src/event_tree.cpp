#include "cegmix/event_tree.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace cegmix {

namespace {

std::unordered_map<std::string, std::vector<const Edge*>> out_edges(const EventTree& tree) {
  std::unordered_map<std::string, std::vector<const Edge*>> out;
  for (const auto& e : tree.edges) out[e.source].push_back(&e);
  return out;
}

std::string edge_str(const Edge& e) {
  return "(" + e.source + ", " + e.target + ", " + e.label + ")";
}

// Sorted outgoing label multiset, the stage-compatibility invariant.
std::vector<std::string> label_multiset(
    const std::unordered_map<std::string, std::vector<const Edge*>>& out,
    const std::string& v) {
  std::vector<std::string> labels;
  auto it = out.find(v);
  if (it != out.end())
    for (const Edge* e : it->second) labels.push_back(e->label);
  std::sort(labels.begin(), labels.end());
  return labels;
}

}  // namespace

std::vector<std::string> EventTree::nodes() const {
  std::vector<std::string> order{root};
  std::unordered_set<std::string> seen{root};
  for (const auto& e : edges)
    for (const auto* id : {&e.source, &e.target})
      if (seen.insert(*id).second) order.push_back(*id);
  return order;
}

std::vector<std::string> EventTree::situations() const {
  std::unordered_set<std::string> internal;
  for (const auto& e : edges) internal.insert(e.source);
  std::vector<std::string> out;
  for (const auto& v : nodes())
    if (internal.count(v)) out.push_back(v);
  return out;
}

std::vector<std::string> EventTree::leaves() const {
  std::unordered_set<std::string> internal;
  for (const auto& e : edges) internal.insert(e.source);
  std::vector<std::string> out;
  for (const auto& v : nodes())
    if (!internal.count(v)) out.push_back(v);
  return out;
}

void validate_tree(const EventTree& tree) {
  if (tree.root.empty()) throw TreeError("tree has no root id");

  std::unordered_map<std::string, const Edge*> parent;
  std::set<std::pair<std::string, std::string>> seen_pairs;
  for (const auto& e : tree.edges) {
    if (!seen_pairs.insert({e.source, e.target}).second)
      throw MultipleParents("duplicate edge pair " + edge_str(e));
    if (parent.count(e.target))
      throw MultipleParents("node " + e.target + " has several parents, e.g. " +
                            edge_str(e));
    parent[e.target] = &e;
  }
  if (parent.count(tree.root))
    throw CycleDetected("edge into the root: " + edge_str(*parent[tree.root]));

  const auto all = tree.nodes();
  for (const auto& v : all)
    if (v != tree.root && !parent.count(v))
      throw DisconnectedNode("node " + v + " has no parent and is not the root");

  // Every node now has a unique parent chain; anything unreachable from the
  // root must sit on or under a cycle.
  const auto out = out_edges(tree);
  std::unordered_set<std::string> reached{tree.root};
  std::vector<std::string> frontier{tree.root};
  while (!frontier.empty()) {
    const auto v = frontier.back();
    frontier.pop_back();
    auto it = out.find(v);
    if (it == out.end()) continue;
    for (const Edge* e : it->second)
      if (reached.insert(e->target).second) frontier.push_back(e->target);
  }
  for (const auto& v : all)
    if (!reached.count(v))
      throw CycleDetected("node " + v + " is caught in a cycle off the root");
}

void validate_staging(const EventTree& tree, const Staging& staging) {
  validate_tree(tree);
  const auto sits = tree.situations();
  const std::set<std::string> situation_set(sits.begin(), sits.end());
  const auto out = out_edges(tree);

  std::set<std::string> covered;
  for (const auto& block : staging.blocks) {
    if (block.empty()) throw InvalidStaging("empty staging block");
    for (const auto& v : block) {
      if (!situation_set.count(v))
        throw InvalidStaging("staging names " + v + " which is not a situation");
      if (!covered.insert(v).second)
        throw InvalidStaging("situation " + v + " appears in two blocks");
    }
    const auto want = label_multiset(out, block.front());
    for (const auto& v : block)
      if (label_multiset(out, v) != want)
        throw InvalidStaging("block containing " + block.front() + " and " + v +
                             " mixes different outgoing label multisets");
  }
  if (covered.size() != situation_set.size())
    throw InvalidStaging("staging covers " + std::to_string(covered.size()) +
                         " of " + std::to_string(situation_set.size()) +
                         " situations");
}

Staging singleton_staging(const EventTree& tree) {
  Staging st;
  for (const auto& v : tree.situations()) st.blocks.push_back({v});
  return st;
}

std::map<std::string, int> stage_colours(const EventTree& tree, const Staging& staging) {
  validate_staging(tree, staging);
  std::vector<std::vector<std::string>> sorted = staging.blocks;
  for (auto& b : sorted) std::sort(b.begin(), b.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  std::map<std::string, int> colour;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (const auto& v : sorted[i]) colour[v] = static_cast<int>(i);
  return colour;
}

std::vector<std::vector<std::string>> positions_from_staging(const EventTree& tree,
                                                             const Staging& staging) {
  const auto colour = stage_colours(tree, staging);  // validates both inputs
  const auto out = out_edges(tree);

  // Children are fully processed before their parent, so one pass assigns
  // each node a signature id; equal ids mean coloured-subtree isomorphism.
  std::vector<std::string> post;
  {
    std::vector<std::pair<std::string, bool>> stack{{tree.root, false}};
    while (!stack.empty()) {
      auto [v, expanded] = stack.back();
      stack.pop_back();
      if (expanded) {
        post.push_back(v);
        continue;
      }
      stack.push_back({v, true});
      auto it = out.find(v);
      if (it != out.end())
        for (const Edge* e : it->second) stack.push_back({e->target, false});
    }
  }

  std::map<std::pair<int, std::vector<std::pair<std::string, int>>>, int> intern;
  std::unordered_map<std::string, int> sig;
  for (const auto& v : post) {
    auto it = out.find(v);
    if (it == out.end()) {
      sig[v] = 0;  // every leaf shares the same future: none
      continue;
    }
    std::vector<std::pair<std::string, int>> kids;
    for (const Edge* e : it->second) kids.emplace_back(e->label, sig.at(e->target));
    std::sort(kids.begin(), kids.end());
    const std::pair<int, std::vector<std::pair<std::string, int>>> key{colour.at(v),
                                                                       kids};
    auto found = intern.find(key);
    if (found == intern.end())
      found = intern.emplace(key, static_cast<int>(intern.size()) + 1).first;
    sig[v] = found->second;
  }

  std::map<int, std::vector<std::string>> groups;
  for (const auto& v : tree.situations()) groups[sig.at(v)].push_back(v);
  std::vector<std::vector<std::string>> positions;
  for (auto& [s, members] : groups) {
    std::sort(members.begin(), members.end());
    positions.push_back(std::move(members));
  }
  std::sort(positions.begin(), positions.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return positions;
}

Ceg build_ceg(const EventTree& tree, const Staging& staging) {
  const auto colour = stage_colours(tree, staging);
  Ceg ceg;
  ceg.positions = positions_from_staging(tree, staging);

  std::unordered_map<std::string, std::size_t> position_of;
  for (std::size_t i = 0; i < ceg.positions.size(); ++i) {
    ceg.representatives.push_back(ceg.positions[i].front());
    ceg.colours.push_back(colour.at(ceg.positions[i].front()));
    for (const auto& v : ceg.positions[i]) position_of[v] = i;
  }

  // The sink id must not collide with an existing node id.
  std::unordered_set<std::string> taken;
  for (const auto& v : tree.nodes()) taken.insert(v);
  ceg.sink = "w_inf";
  while (taken.count(ceg.sink)) ceg.sink += "_";

  const auto out = out_edges(tree);
  std::set<std::tuple<std::string, std::string, std::string>> emitted;
  for (const auto& rep : ceg.representatives) {
    auto it = out.find(rep);
    if (it == out.end()) continue;
    for (const Edge* e : it->second) {
      auto pos = position_of.find(e->target);
      const std::string target =
          pos == position_of.end() ? ceg.sink : ceg.representatives[pos->second];
      if (emitted.insert({rep, target, e->label}).second)
        ceg.edges.push_back({rep, target, e->label});
    }
  }
  return ceg;
}

namespace {

using nlohmann::json;

TreeDocument document_from_json(const json& j) {
  TreeDocument doc;
  doc.tree.root = j.at("root").get<std::string>();
  for (const auto& row : j.at("edges")) {
    if (!row.is_array() || row.size() != 3)
      throw TreeError("edge rows must be [source, target, label]");
    doc.tree.edges.push_back(
        {row[0].get<std::string>(), row[1].get<std::string>(), row[2].get<std::string>()});
  }
  if (j.contains("staging")) {
    for (const auto& block : j.at("staging"))
      doc.staging.blocks.push_back(block.get<std::vector<std::string>>());
  } else {
    doc.staging = singleton_staging(doc.tree);
  }
  validate_staging(doc.tree, doc.staging);
  return doc;
}

// Distinguishable fills for stage colouring, reused cyclically.
const char* kFills[] = {"#a6cee3", "#b2df8a", "#fb9a99", "#fdbf6f",
                        "#cab2d6", "#ffff99", "#1f78b4", "#33a02c"};

std::string quote(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') q += '\\';
    q += c;
  }
  return q + "\"";
}

}  // namespace

TreeDocument parse_tree_json(const std::string& text) {
  try {
    return document_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw TreeError(std::string("bad tree document: ") + e.what());
  }
}

TreeDocument read_tree_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TreeError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_tree_json(buf.str());
}

std::string tree_json(const TreeDocument& doc) {
  json j;
  j["root"] = doc.tree.root;
  j["edges"] = json::array();
  for (const auto& e : doc.tree.edges)
    j["edges"].push_back(json::array({e.source, e.target, e.label}));
  j["staging"] = doc.staging.blocks;
  return j.dump(2);
}

std::string tree_to_dot(const EventTree& tree, const Staging& staging) {
  const auto colour = stage_colours(tree, staging);
  std::ostringstream dot;
  dot << "digraph event_tree {\n  rankdir=LR;\n";
  for (const auto& v : tree.nodes()) {
    dot << "  " << quote(v);
    auto it = colour.find(v);
    if (it != colour.end())
      dot << " [style=filled, fillcolor=" << quote(kFills[it->second % 8]) << "]";
    dot << ";\n";
  }
  for (const auto& e : tree.edges)
    dot << "  " << quote(e.source) << " -> " << quote(e.target)
        << " [label=" << quote(e.label) << "];\n";
  dot << "}\n";
  return dot.str();
}

std::string ceg_to_dot(const Ceg& ceg) {
  std::ostringstream dot;
  dot << "digraph ceg {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < ceg.representatives.size(); ++i)
    dot << "  " << quote(ceg.representatives[i]) << " [style=filled, fillcolor="
        << quote(kFills[ceg.colours[i] % 8]) << "];\n";
  dot << "  " << quote(ceg.sink) << " [shape=doublecircle];\n";
  for (const auto& e : ceg.edges)
    dot << "  " << quote(e.source) << " -> " << quote(e.target)
        << " [label=" << quote(e.label) << "];\n";
  dot << "}\n";
  return dot.str();
}

}  // namespace cegmix
