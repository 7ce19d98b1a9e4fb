#include "cegmix/event_tree.hpp"
#include "cegmix/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_map>

using cegmix::Ceg;
using cegmix::Edge;
using cegmix::EventTree;
using cegmix::Staging;

namespace {

// Infection process tree: strain choice, optional treatment, outcome.
EventTree infection_tree() {
  EventTree t;
  t.root = "v0";
  t.edges = {
      {"v0", "v1", "Strain A"},      {"v0", "v2", "Strain B"},
      {"v1", "v3", "Recover"},       {"v1", "v4", "Hospitalisation"},
      {"v2", "v5", "Treatment 1"},   {"v2", "v6", "Treatment 2"},
      {"v5", "v7", "Recover"},       {"v5", "v8", "Hospitalisation"},
      {"v6", "v9", "Recover"},       {"v6", "v10", "Hospitalisation"},
  };
  return t;
}

Staging infection_staging() {
  return Staging{{{"v0"}, {"v1"}, {"v2"}, {"v5", "v6"}}};
}

using Adjacency = std::unordered_map<std::string, std::vector<const Edge*>>;

Adjacency adjacency(const EventTree& t) {
  Adjacency out;
  for (const auto& e : t.edges) out[e.source].push_back(&e);
  return out;
}

// Oracle: explicit recursive subtree isomorphism with backtracking over
// child matchings, independent of the signature-refinement implementation.
bool subtree_iso(const Adjacency& out, const std::map<std::string, int>& colour,
                 const std::string& v, const std::string& w) {
  const auto iv = out.find(v);
  const auto iw = out.find(w);
  const bool leaf_v = iv == out.end();
  const bool leaf_w = iw == out.end();
  if (leaf_v != leaf_w) return false;
  if (leaf_v) return true;
  if (colour.at(v) != colour.at(w)) return false;
  const auto& ev = iv->second;
  const auto& ew = iw->second;
  if (ev.size() != ew.size()) return false;

  std::vector<std::size_t> idx(ew.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end());
  do {
    bool ok = true;
    for (std::size_t i = 0; i < ev.size() && ok; ++i)
      ok = ev[i]->label == ew[idx[i]]->label &&
           subtree_iso(out, colour, ev[i]->target, ew[idx[i]]->target);
    if (ok) return true;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return false;
}

std::vector<std::vector<std::string>> positions_oracle(const EventTree& t,
                                                       const Staging& st) {
  const auto colour = cegmix::stage_colours(t, st);
  const auto out = adjacency(t);
  const auto sits = t.situations();
  std::vector<int> rep(sits.size());
  std::iota(rep.begin(), rep.end(), 0);
  for (std::size_t i = 0; i < sits.size(); ++i)
    for (std::size_t j = i + 1; j < sits.size(); ++j)
      if (rep[j] == static_cast<int>(j) && subtree_iso(out, colour, sits[i], sits[j]))
        rep[j] = rep[static_cast<std::size_t>(rep[i])];
  std::map<int, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < sits.size(); ++i)
    groups[rep[static_cast<std::size_t>(rep[i])]].push_back(sits[i]);
  std::vector<std::vector<std::string>> res;
  for (auto& [r, members] : groups) {
    std::sort(members.begin(), members.end());
    res.push_back(std::move(members));
  }
  std::sort(res.begin(), res.end());
  return res;
}

// Random tree with bounded arity and a tiny label alphabet so isomorphic
// subtrees actually occur.
EventTree random_tree(cegmix::Rng& rng, int max_nodes) {
  EventTree t;
  t.root = "n0";
  int next_id = 1;
  std::vector<std::string> frontier{t.root};
  const char* labels[] = {"x", "y", "z"};
  while (!frontier.empty() && next_id < max_nodes) {
    const auto v = frontier.back();
    frontier.pop_back();
    const int arity = static_cast<int>(rng.below(4));
    for (int c = 0; c < arity && next_id < max_nodes; ++c) {
      std::string child = "n" + std::to_string(next_id++);
      t.edges.push_back({v, child, labels[rng.below(3)]});
      frontier.push_back(child);
    }
  }
  return t;
}

// Random label-compatible staging: situations with equal outgoing label
// multisets may share a block.
Staging random_staging(cegmix::Rng& rng, const EventTree& t) {
  const auto out = adjacency(t);
  std::map<std::vector<std::string>, std::vector<std::string>> compatible;
  for (const auto& v : t.situations()) {
    std::vector<std::string> key;
    for (const Edge* e : out.at(v)) key.push_back(e->label);
    std::sort(key.begin(), key.end());
    compatible[key].push_back(v);
  }
  Staging st;
  for (auto& [key, members] : compatible) {
    std::map<std::uint64_t, std::vector<std::string>> split;
    for (const auto& v : members) split[rng.below(2)].push_back(v);
    for (auto& [slot, block] : split) st.blocks.push_back(std::move(block));
  }
  return st;
}

}  // namespace

TEST_SUITE("tree") {

TEST_CASE("infection tree is a valid event tree") {
  const auto t = infection_tree();
  CHECK_NOTHROW(cegmix::validate_tree(t));
  CHECK(t.nodes().size() == 11);
  CHECK(t.situations() == std::vector<std::string>{"v0", "v1", "v2", "v5", "v6"});
  CHECK(t.leaves().size() == 6);
}

TEST_CASE("a lone root is a valid tree whose situation set is empty") {
  EventTree t;
  t.root = "only";
  CHECK_NOTHROW(cegmix::validate_tree(t));
  CHECK(t.situations().empty());
  CHECK(t.leaves() == std::vector<std::string>{"only"});
}

TEST_CASE("edge back into the root is reported as a cycle") {
  auto t = infection_tree();
  t.edges.push_back({"v1", "v0", "loop"});
  CHECK_THROWS_AS(cegmix::validate_tree(t), cegmix::CycleDetected);
}

TEST_CASE("cycle detached from the root is still a cycle") {
  EventTree t;
  t.root = "r";
  t.edges = {{"r", "a", "l"}, {"b", "c", "l"}, {"c", "b", "l"}};
  CHECK_THROWS_AS(cegmix::validate_tree(t), cegmix::CycleDetected);
}

TEST_CASE("second parent and duplicate pairs are rejected") {
  auto t = infection_tree();
  t.edges.push_back({"v2", "v3", "again"});
  CHECK_THROWS_AS(cegmix::validate_tree(t), cegmix::MultipleParents);

  auto t2 = infection_tree();
  t2.edges.push_back({"v0", "v1", "Strain A again"});
  CHECK_THROWS_AS(cegmix::validate_tree(t2), cegmix::MultipleParents);
}

TEST_CASE("parentless non-root node is disconnected") {
  EventTree t;
  t.root = "r";
  t.edges = {{"r", "a", "l"}, {"ghost", "b", "l"}};
  CHECK_THROWS_AS(cegmix::validate_tree(t), cegmix::DisconnectedNode);
}

TEST_CASE("staging validation rejects bad blocks") {
  const auto t = infection_tree();
  CHECK_NOTHROW(cegmix::validate_staging(t, infection_staging()));

  // v1 and v2 have different outgoing label multisets
  CHECK_THROWS_AS(
      cegmix::validate_staging(t, Staging{{{"v0"}, {"v1", "v2"}, {"v5"}, {"v6"}}}),
      cegmix::InvalidStaging);
  // leaf in a block
  CHECK_THROWS_AS(
      cegmix::validate_staging(t, Staging{{{"v0"}, {"v1"}, {"v2"}, {"v5", "v6"}, {"v3"}}}),
      cegmix::InvalidStaging);
  // situation missing
  CHECK_THROWS_AS(cegmix::validate_staging(t, Staging{{{"v0"}, {"v1"}, {"v2"}, {"v5"}}}),
                  cegmix::InvalidStaging);
  // situation doubly covered
  CHECK_THROWS_AS(
      cegmix::validate_staging(
          t, Staging{{{"v0"}, {"v1"}, {"v2"}, {"v5", "v6"}, {"v5"}}}),
      cegmix::InvalidStaging);
}

TEST_CASE("positions match the stages for the infection staging") {
  const auto pos = cegmix::positions_from_staging(infection_tree(), infection_staging());
  const std::vector<std::vector<std::string>> want = {
      {"v0"}, {"v1"}, {"v2"}, {"v5", "v6"}};
  CHECK(pos == want);
}

TEST_CASE("singleton staging yields singleton positions") {
  const auto t = infection_tree();
  const auto pos = cegmix::positions_from_staging(t, cegmix::singleton_staging(t));
  CHECK(pos == std::vector<std::vector<std::string>>{
                   {"v0"}, {"v1"}, {"v2"}, {"v5"}, {"v6"}});
}

TEST_CASE("splitting the v5 v6 stage splits their positions") {
  // Uncoloured subtrees of v5 and v6 are isomorphic; the colouring is what
  // keeps them apart.
  const auto pos = cegmix::positions_from_staging(
      infection_tree(), Staging{{{"v0"}, {"v1"}, {"v2"}, {"v5"}, {"v6"}}});
  CHECK(pos.size() == 5);
}

TEST_CASE("ceg of the infection staging has four positions plus sink") {
  const auto ceg = cegmix::build_ceg(infection_tree(), infection_staging());
  CHECK(ceg.positions.size() == 4);
  CHECK(ceg.representatives == std::vector<std::string>{"v0", "v1", "v2", "v5"});
  CHECK(ceg.sink == "w_inf");
  // node count = positions + sink
  std::set<std::string> nodes;
  for (const auto& e : ceg.edges) {
    nodes.insert(e.source);
    nodes.insert(e.target);
  }
  CHECK(nodes.size() == 5);

  // v2 keeps two parallel edges into the merged treatment position because
  // their labels differ; each outcome pair collapses onto the sink.
  int v2_to_v5 = 0;
  for (const auto& e : ceg.edges)
    if (e.source == "v2" && e.target == "v5") ++v2_to_v5;
  CHECK(v2_to_v5 == 2);
  CHECK(ceg.edges.size() == 8);
}

TEST_CASE("all leaves under one root contract to a two-node ceg") {
  EventTree t;
  t.root = "r";
  t.edges = {{"r", "a", "go"}, {"r", "b", "go"}, {"r", "c", "stop"}};
  const auto ceg = cegmix::build_ceg(t, cegmix::singleton_staging(t));
  CHECK(ceg.positions.size() == 1);
  REQUIRE(ceg.edges.size() == 2);  // the two same-label leaf edges merged
  std::set<std::string> labels;
  for (const auto& e : ceg.edges) {
    CHECK(e.source == "r");
    CHECK(e.target == ceg.sink);
    labels.insert(e.label);
  }
  CHECK(labels == std::set<std::string>{"go", "stop"});
}

TEST_CASE("singleton staging on the infection tree keeps five non-sink nodes") {
  const auto t = infection_tree();
  const auto ceg = cegmix::build_ceg(t, cegmix::singleton_staging(t));
  CHECK(ceg.positions.size() == 5);
  std::set<std::string> nodes;
  for (const auto& e : ceg.edges) {
    nodes.insert(e.source);
    nodes.insert(e.target);
  }
  CHECK(nodes.size() == 6);
}

TEST_CASE("sink id moves aside when a node is already called w_inf") {
  EventTree t;
  t.root = "w_inf";
  t.edges = {{"w_inf", "a", "l"}};
  const auto ceg = cegmix::build_ceg(t, cegmix::singleton_staging(t));
  CHECK(ceg.sink == "w_inf_");
}

TEST_CASE("json round trip preserves the document") {
  cegmix::TreeDocument doc{infection_tree(), infection_staging()};
  const auto text = cegmix::tree_json(doc);
  const auto back = cegmix::parse_tree_json(text);
  CHECK(back.tree.root == doc.tree.root);
  CHECK(back.tree.edges == doc.tree.edges);
  CHECK(back.staging.blocks == doc.staging.blocks);
}

TEST_CASE("json without staging defaults to singletons") {
  const auto doc = cegmix::parse_tree_json(
      R"({"root":"r","edges":[["r","a","l"],["a","b","m"]]})");
  CHECK(doc.staging.blocks == std::vector<std::vector<std::string>>{{"r"}, {"a"}});
  CHECK_THROWS_AS((void)cegmix::parse_tree_json("{\"edges\":[]}"), cegmix::TreeError);
}

TEST_CASE("dot output names every node and edge label") {
  const auto t = infection_tree();
  const auto dot = cegmix::tree_to_dot(t, infection_staging());
  for (const auto& v : t.nodes()) CHECK(dot.find("\"" + v + "\"") != std::string::npos);
  CHECK(dot.find("Strain A") != std::string::npos);
  const auto ceg = cegmix::build_ceg(t, infection_staging());
  const auto cdot = cegmix::ceg_to_dot(ceg);
  CHECK(cdot.find("w_inf") != std::string::npos);
  CHECK(cdot.find("doublecircle") != std::string::npos);
}

TEST_CASE("positions refine stages and match the pairwise oracle on random trees") {
  cegmix::Rng rng(4242, 0);
  for (int rep = 0; rep < 120; ++rep) {
    const auto t = random_tree(rng, 4 + static_cast<int>(rng.below(17)));
    if (t.situations().empty()) continue;
    const auto st = random_staging(rng, t);
    const auto pos = cegmix::positions_from_staging(t, st);

    // refinement: each position lies inside one staging block
    for (const auto& p : pos) {
      bool inside_one = false;
      for (const auto& block : st.blocks) {
        const std::set<std::string> b(block.begin(), block.end());
        if (std::all_of(p.begin(), p.end(), [&](const auto& v) { return b.count(v); }))
          inside_one = true;
      }
      CHECK(inside_one);
    }

    auto sorted_pos = pos;
    std::sort(sorted_pos.begin(), sorted_pos.end());
    CHECK(sorted_pos == positions_oracle(t, st));

    // structural idempotence: rebuilding gives the identical ceg
    const auto a = cegmix::build_ceg(t, st);
    const auto b = cegmix::build_ceg(t, st);
    CHECK(a.positions == b.positions);
    CHECK(a.edges == b.edges);
    CHECK(a.representatives == b.representatives);
  }
}

}  // TEST_SUITE
