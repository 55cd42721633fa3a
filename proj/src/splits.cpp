#include "graphstar/splits.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "graphstar/rng.hpp"

namespace graphstar {

namespace {

EdgeTriple canonical(const EdgeTriple& e) {
  return e.src <= e.dst ? e : EdgeTriple{e.dst, e.src, e.rel};
}

std::size_t eval_count(double frac, std::size_t total, const char* name) {
  if (frac < 0.0 || !std::isfinite(frac)) {
    throw std::invalid_argument(std::string("split_link_edges: ") + name +
                                " fraction must be non-negative");
  }
  if (frac == 0.0) return 0;
  const auto n = static_cast<std::size_t>(std::llround(frac * static_cast<double>(total)));
  if (n == 0) {
    throw std::invalid_argument(std::string("split_link_edges: graph too small for ") + name +
                                " fraction " + std::to_string(frac));
  }
  return n;
}

}  // namespace

LinkSplit split_link_edges(const Graph& graph, double val_frac, double test_frac,
                           std::uint64_t seed) {
  if (val_frac + test_frac >= 1.0) {
    throw std::invalid_argument("split_link_edges: val + test fractions must be < 1");
  }
  std::vector<EdgeTriple> pairs;
  {
    std::set<EdgeTriple> seen;
    for (const EdgeTriple& e : graph.edges) seen.insert(canonical(e));
    pairs.assign(seen.begin(), seen.end());
  }
  const std::size_t total = pairs.size();
  const std::size_t n_val = eval_count(val_frac, total, "val");
  const std::size_t n_test = eval_count(test_frac, total, "test");
  if (n_val + n_test >= total) {
    throw std::invalid_argument("split_link_edges: no training edges would remain");
  }

  std::mt19937_64 rng(seed);
  shuffle(pairs, rng);

  LinkSplit split;
  split.val_pos.assign(pairs.begin(), pairs.begin() + n_val);
  split.test_pos.assign(pairs.begin() + n_val, pairs.begin() + n_val + n_test);
  split.train_pos.assign(pairs.begin() + n_val + n_test, pairs.end());

  // Uniform sampling over unordered node pairs absent from all positives.
  const std::size_t n = graph.num_nodes;
  const std::size_t all_pairs = n * (n - 1) / 2;
  if (all_pairs < total + n_val + n_test) {
    throw std::invalid_argument("split_link_edges: only " + std::to_string(all_pairs - total) +
                                " non-edges available for " + std::to_string(n_val + n_test) +
                                " negatives");
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> forbidden;
  for (const EdgeTriple& e : pairs) forbidden.insert({e.src, e.dst});

  auto sample_negatives = [&](std::size_t count) {
    std::vector<EdgeTriple> negs;
    if (count == 0) return negs;
    const std::size_t available = all_pairs - forbidden.size();
    if (available < count) {
      throw std::invalid_argument("split_link_edges: non-edges exhausted while sampling " +
                                  std::to_string(count) + " negatives");
    }
    if (available < 2 * count) {
      // Dense regime: enumerate the remaining non-edges and draw exactly.
      std::vector<std::pair<std::uint32_t, std::uint32_t>> open;
      for (std::uint32_t u = 0; u < n; ++u) {
        for (std::uint32_t v = u + 1; v < n; ++v) {
          if (!forbidden.contains({u, v})) open.emplace_back(u, v);
        }
      }
      shuffle(open, rng);
      for (std::size_t i = 0; i < count; ++i) {
        forbidden.insert(open[i]);
        negs.push_back({open[i].first, open[i].second, 0});
      }
      return negs;
    }
    while (negs.size() < count) {
      auto u = static_cast<std::uint32_t>(uniform_index(rng, n));
      auto v = static_cast<std::uint32_t>(uniform_index(rng, n));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (forbidden.contains({u, v})) continue;  // positives and earlier draws
      forbidden.insert({u, v});
      negs.push_back({u, v, 0});
    }
    return negs;
  };
  split.val_neg = sample_negatives(n_val);
  split.test_neg = sample_negatives(n_test);

  std::vector<EdgeTriple> train_edges = split.train_pos;
  split.train_graph = build_graph(graph.features, std::move(train_edges), graph.num_relations,
                                  {.symmetrize = true});
  return split;
}

KFoldSplit kfold_split(std::size_t count, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_split: k must be at least 2");
  if (k > count) {
    throw std::invalid_argument("kfold_split: k = " + std::to_string(k) + " exceeds " +
                                std::to_string(count) + " items");
  }
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  shuffle(order, rng);

  KFoldSplit split;
  split.train.resize(k);
  split.test.resize(k);
  const std::size_t base = count / k;
  const std::size_t extra = count % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    split.test[f].assign(order.begin() + pos, order.begin() + pos + size);
    pos += size;
  }
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t g = 0; g < k; ++g) {
      if (g == f) continue;
      split.train[f].insert(split.train[f].end(), split.test[g].begin(), split.test[g].end());
    }
    std::sort(split.train[f].begin(), split.train[f].end());
    std::sort(split.test[f].begin(), split.test[f].end());
  }
  return split;
}

}  // namespace graphstar
