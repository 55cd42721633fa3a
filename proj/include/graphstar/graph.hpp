#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "graphstar/tensor.hpp"

namespace graphstar {

struct EdgeTriple {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint32_t rel = 0;
  friend auto operator<=>(const EdgeTriple&, const EdgeTriple&) = default;
};

/// Immutable after construction; self is not listed as an edge (it is a
/// separate relation role inside the layer), and the edge list is sorted
/// and duplicate-free.
struct Graph {
  std::size_t num_nodes = 0;
  std::size_t num_relations = 1;
  Tensor features;                       // num_nodes x feature_dim
  std::vector<EdgeTriple> edges;
  std::vector<std::int32_t> node_labels; // empty, or one class id per node (-1 = unlabeled)
  Tensor node_label_matrix;              // empty, or num_nodes x num_classes 0/1 (multi-label)
  std::int32_t graph_label = -1;         // -1 = unlabeled graph
  std::vector<std::uint32_t> train_mask; // sorted node id lists; pairwise disjoint
  std::vector<std::uint32_t> val_mask;
  std::vector<std::uint32_t> test_mask;

  std::size_t feature_dim() const { return features.cols(); }
  friend bool operator==(const Graph&, const Graph&) = default;
};

struct GraphBuildOptions {
  bool symmetrize = false;
};

/// Validates and normalizes: checks endpoint/relation ranges and finite
/// features, strips self-loops, removes duplicate triples, optionally adds
/// the reverse of every edge, and sorts the edge list.
Graph build_graph(Tensor features, std::vector<EdgeTriple> edges, std::size_t num_relations,
                  GraphBuildOptions options = {});

/// Re-runs the build normalization on an existing graph, keeping labels and
/// masks. Idempotent: validating a validated graph changes nothing.
Graph validate_graph(const Graph& g);

/// Throws if labels or masks are inconsistent with the graph.
void check_labels_and_masks(const Graph& g);

/// Several graphs packed into one, with node ids offset per member graph and
/// exactly one star slot per member graph.
struct BatchedGraph {
  Graph merged;                             // edges re-indexed into the packed id space
  std::vector<std::uint32_t> node_graph_ids;  // size merged.num_nodes
  std::vector<std::size_t> node_offsets;      // size num_graphs + 1
  std::vector<std::uint32_t> star_slots;      // one per member graph: 0..G-1
  std::vector<std::int32_t> graph_labels;     // per member graph
  std::vector<std::uint8_t> has_node_labels;  // per member graph, for exact unbatching
  std::vector<std::uint8_t> has_label_matrix;

  std::size_t num_graphs() const { return star_slots.size(); }
};

BatchedGraph batch_graphs(std::span<const Graph> graphs);

/// Inverse of batch_graphs; recovers the member graphs exactly.
std::vector<Graph> unbatch(const BatchedGraph& batch);

}  // namespace graphstar
