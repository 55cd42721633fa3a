#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "graphstar/graph.hpp"
#include "graphstar/rng.hpp"
#include "graphstar/splits.hpp"

using namespace graphstar;

namespace {

Graph random_graph(std::mt19937_64& rng, std::size_t max_nodes = 8, std::size_t dim = 3,
                   std::size_t relations = 1) {
  const std::size_t n = 1 + uniform_index(rng, max_nodes);
  Tensor f(n, dim);
  for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = uniform_unit(rng) - 0.5;
  std::vector<EdgeTriple> edges;
  const std::size_t m = uniform_index(rng, 2 * n + 1);
  for (std::size_t e = 0; e < m; ++e) {
    edges.push_back({static_cast<std::uint32_t>(uniform_index(rng, n)),
                     static_cast<std::uint32_t>(uniform_index(rng, n)),
                     static_cast<std::uint32_t>(uniform_index(rng, relations))});
  }
  Graph g = build_graph(std::move(f), std::move(edges), relations, {.symmetrize = true});
  if (uniform_unit(rng) < 0.5) {
    g.node_labels.resize(n);
    for (auto& l : g.node_labels) l = static_cast<std::int32_t>(uniform_index(rng, 3));
  }
  g.graph_label = static_cast<std::int32_t>(uniform_index(rng, 2));
  return g;
}

}  // namespace

TEST_CASE("build_graph accepts a singleton graph") {
  Graph g = build_graph(Tensor(1, 4), {}, 1);
  CHECK(g.num_nodes == 1);
  CHECK(g.edges.empty());
}

TEST_CASE("build_graph rejects out-of-range endpoints naming the node") {
  try {
    build_graph(Tensor(3, 2), {{0, 5, 0}}, 1);
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("5") != std::string::npos);
  }
  CHECK_THROWS_AS(build_graph(Tensor(3, 2), {{0, 1, 2}}, 1), std::invalid_argument);
}

TEST_CASE("build_graph rejects NaN features") {
  Tensor f(2, 2);
  f.at(1, 1) = std::nan("");
  CHECK_THROWS_AS(build_graph(std::move(f), {}, 1), std::invalid_argument);
}

TEST_CASE("build_graph dedupes and symmetrizes") {
  Graph g = build_graph(Tensor(3, 1), {{0, 1, 0}, {0, 1, 0}}, 1, {.symmetrize = true});
  CHECK(g.edges == std::vector<EdgeTriple>{{0, 1, 0}, {1, 0, 0}});
}

TEST_CASE("build_graph strips self loops") {
  Graph g = build_graph(Tensor(2, 1), {{0, 0, 0}, {0, 1, 0}}, 1);
  CHECK(g.edges == std::vector<EdgeTriple>{{0, 1, 0}});
}

TEST_CASE("graph validation is idempotent") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    Graph g = random_graph(rng, 10, 2, 2);
    Graph v1 = validate_graph(g);
    Graph v2 = validate_graph(v1);
    CHECK(v1 == g);
    CHECK(v2 == v1);
  }
}

TEST_CASE("masks must be disjoint") {
  Graph g = build_graph(Tensor(4, 1), {{0, 1, 0}}, 1);
  g.train_mask = {0, 1};
  g.val_mask = {1, 2};
  CHECK_THROWS_AS(check_labels_and_masks(g), std::invalid_argument);
  g.val_mask = {2};
  g.test_mask = {3};
  CHECK_NOTHROW(check_labels_and_masks(g));
}

TEST_CASE("batch of one is the identity layout") {
  Graph g = build_graph(Tensor::from_rows({{1.0}, {2.0}}), {{0, 1, 0}}, 1);
  BatchedGraph b = batch_graphs(std::span<const Graph>(&g, 1));
  CHECK(b.num_graphs() == 1);
  CHECK(b.node_offsets == std::vector<std::size_t>{0, 2});
  CHECK(b.merged.edges == g.edges);
  CHECK(b.star_slots == std::vector<std::uint32_t>{0});
}

TEST_CASE("batching offsets the second graph's edges") {
  Graph a = build_graph(Tensor(2, 1), {{0, 1, 0}}, 1);
  Graph b = build_graph(Tensor(2, 1), {{0, 1, 0}}, 1);
  std::vector<Graph> gs = {a, b};
  BatchedGraph batch = batch_graphs(gs);
  CHECK(batch.merged.edges == std::vector<EdgeTriple>{{0, 1, 0}, {2, 3, 0}});
  CHECK(batch.node_graph_ids == std::vector<std::uint32_t>{0, 0, 1, 1});
  CHECK(batch.star_slots.size() == 2);
}

TEST_CASE("batching rejects mismatched dimensions") {
  Graph a = build_graph(Tensor(2, 1), {}, 1);
  Graph b = build_graph(Tensor(2, 2), {}, 1);
  std::vector<Graph> gs = {a, b};
  CHECK_THROWS_AS(batch_graphs(gs), std::invalid_argument);
  Graph c = build_graph(Tensor(2, 1), {}, 2);
  std::vector<Graph> gs2 = {a, c};
  CHECK_THROWS_AS(batch_graphs(gs2), std::invalid_argument);
}

TEST_CASE("batch then unbatch returns identical graphs") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Graph> gs;
    for (int i = 0; i < 5; ++i) gs.push_back(random_graph(rng));
    if (trial % 2 == 0) {
      gs[1].train_mask = {0};
      if (gs[2].num_nodes > 1) gs[2].val_mask = {1};
    }
    BatchedGraph batch = batch_graphs(gs);
    std::vector<Graph> back = unbatch(batch);
    REQUIRE(back.size() == gs.size());
    for (std::size_t i = 0; i < gs.size(); ++i) CHECK(back[i] == gs[i]);
  }
}

TEST_CASE("no edge crosses graph boundaries") {
  std::mt19937_64 rng(23);
  std::vector<Graph> gs;
  for (int i = 0; i < 4; ++i) gs.push_back(random_graph(rng));
  BatchedGraph batch = batch_graphs(gs);
  for (const EdgeTriple& e : batch.merged.edges) {
    CHECK(batch.node_graph_ids[e.src] == batch.node_graph_ids[e.dst]);
  }
}

TEST_CASE("link split with zero fractions keeps every edge for training") {
  Graph g = build_graph(Tensor(6, 2), {{0, 1, 0}, {1, 2, 0}, {3, 4, 0}, {4, 5, 0}}, 1,
                        {.symmetrize = true});
  LinkSplit s = split_link_edges(g, 0.0, 0.0, 9);
  CHECK(s.val_pos.empty());
  CHECK(s.test_pos.empty());
  CHECK(s.val_neg.empty());
  CHECK(s.train_pos.size() == 4);
  CHECK(s.train_graph.edges.size() == g.edges.size());
}

TEST_CASE("link split is deterministic under the seed") {
  std::mt19937_64 rng(31);
  Graph g = random_graph(rng, 30, 2);
  while (g.edges.size() < 20) g = random_graph(rng, 30, 2);
  LinkSplit a = split_link_edges(g, 0.1, 0.2, 1234);
  LinkSplit b = split_link_edges(g, 0.1, 0.2, 1234);
  CHECK(a.train_pos == b.train_pos);
  CHECK(a.val_pos == b.val_pos);
  CHECK(a.test_pos == b.test_pos);
  CHECK(a.val_neg == b.val_neg);
  CHECK(a.test_neg == b.test_neg);
  LinkSplit c = split_link_edges(g, 0.1, 0.2, 99);
  CHECK(a.train_pos != c.train_pos);
}

TEST_CASE("complete graph cannot provide negatives") {
  std::vector<EdgeTriple> edges;
  for (std::uint32_t u = 0; u < 4; ++u) {
    for (std::uint32_t v = u + 1; v < 4; ++v) edges.push_back({u, v, 0});
  }
  Graph k4 = build_graph(Tensor(4, 1), std::move(edges), 1, {.symmetrize = true});
  CHECK_THROWS_AS(split_link_edges(k4, 0.0, 0.5, 1), std::invalid_argument);
}

TEST_CASE("link split negatives never intersect positives, exhaustively") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    Graph g = random_graph(rng, 50, 2);
    if (g.edges.size() < 12 || g.num_nodes < 8) continue;
    LinkSplit s = split_link_edges(g, 0.15, 0.25, trial);
    std::set<std::pair<std::uint32_t, std::uint32_t>> pos;
    for (const EdgeTriple& e : g.edges) {
      pos.insert({std::min(e.src, e.dst), std::max(e.src, e.dst)});
    }
    std::set<EdgeTriple> uniq;
    for (const auto* negs : {&s.val_neg, &s.test_neg}) {
      for (const EdgeTriple& e : *negs) {
        CHECK_FALSE(pos.contains({e.src, e.dst}));
        CHECK(uniq.insert(e).second);  // sampled without replacement
      }
    }
    CHECK(s.val_neg.size() == s.val_pos.size());
    CHECK(s.test_neg.size() == s.test_pos.size());
    // Disjoint positive sets covering the undirected edge set.
    std::set<EdgeTriple> all;
    for (const auto* ps : {&s.train_pos, &s.val_pos, &s.test_pos}) {
      for (const EdgeTriple& e : *ps) CHECK(all.insert(e).second);
    }
    CHECK(all.size() == pos.size());
    // Training graph contains no val/test positive.
    std::set<EdgeTriple> train_set(s.train_graph.edges.begin(), s.train_graph.edges.end());
    for (const auto* ps : {&s.val_pos, &s.test_pos}) {
      for (const EdgeTriple& e : *ps) {
        CHECK_FALSE(train_set.contains(e));
        CHECK_FALSE(train_set.contains({e.dst, e.src, e.rel}));
      }
    }
  }
}

TEST_CASE("kfold with k equal to count gives singleton test folds") {
  KFoldSplit s = kfold_split(10, 10, 5);
  for (const auto& fold : s.test) CHECK(fold.size() == 1);
}

TEST_CASE("kfold sizes differ by at most one") {
  KFoldSplit s = kfold_split(10, 3, 5);
  std::multiset<std::size_t> sizes;
  for (const auto& fold : s.test) sizes.insert(fold.size());
  CHECK(sizes == std::multiset<std::size_t>{3, 3, 4});
}

TEST_CASE("kfold folds are disjoint and cover the corpus") {
  for (std::uint64_t seed : {0ULL, 7ULL, 123ULL}) {
    KFoldSplit s = kfold_split(23, 4, seed);
    std::set<std::size_t> all;
    for (std::size_t f = 0; f < s.num_folds(); ++f) {
      std::set<std::size_t> test_set(s.test[f].begin(), s.test[f].end());
      for (std::size_t idx : s.test[f]) CHECK(all.insert(idx).second);
      for (std::size_t idx : s.train[f]) CHECK_FALSE(test_set.contains(idx));
      CHECK(s.train[f].size() + s.test[f].size() == 23);
    }
    CHECK(all.size() == 23);
  }
  KFoldSplit again = kfold_split(23, 4, 7);
  KFoldSplit ref = kfold_split(23, 4, 7);
  CHECK(again.test == ref.test);
}

TEST_CASE("kfold rejects k larger than the corpus or below 2") {
  CHECK_THROWS_AS(kfold_split(3, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(kfold_split(3, 1, 0), std::invalid_argument);
}
