#pragma once

#include <cstdint>
#include <vector>

#include "graphstar/graph.hpp"

namespace graphstar {

/// Undirected link-prediction split. Positive sets are disjoint; eval
/// negatives are drawn without replacement from node pairs absent from the
/// full positive set, one negative per positive.
struct LinkSplit {
  std::vector<EdgeTriple> train_pos;  // canonical direction (src < dst)
  std::vector<EdgeTriple> val_pos;
  std::vector<EdgeTriple> test_pos;
  std::vector<EdgeTriple> val_neg;
  std::vector<EdgeTriple> test_neg;
  Graph train_graph;  // train positives only, symmetrized
};

/// Splits the graph's undirected edge set into train/val/test positives and
/// samples matching negatives. Deterministic under `seed`. Throws when the
/// fractions are infeasible or the graph has too few non-edges for the
/// requested negatives.
LinkSplit split_link_edges(const Graph& graph, double val_frac, double test_frac,
                           std::uint64_t seed);

/// k disjoint test folds covering 0..count-1 with sizes differing by at most
/// one; train folds are the complements. Deterministic under `seed`.
struct KFoldSplit {
  std::vector<std::vector<std::size_t>> train;
  std::vector<std::vector<std::size_t>> test;
  std::size_t num_folds() const { return test.size(); }
};

KFoldSplit kfold_split(std::size_t count, std::size_t k, std::uint64_t seed);

}  // namespace graphstar
