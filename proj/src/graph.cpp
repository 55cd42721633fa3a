#include "graphstar/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace graphstar {

namespace {

void check_sorted_mask(const std::vector<std::uint32_t>& mask, std::size_t num_nodes,
                       const char* name) {
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] >= num_nodes) {
      throw std::invalid_argument(std::string("graph: ") + name + " mask references node " +
                                  std::to_string(mask[i]) + " of " + std::to_string(num_nodes));
    }
    if (i > 0 && mask[i] <= mask[i - 1]) {
      throw std::invalid_argument(std::string("graph: ") + name +
                                  " mask must be strictly increasing");
    }
  }
}

void check_disjoint(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                    const char* what) {
  std::vector<std::uint32_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  if (!common.empty()) {
    throw std::invalid_argument("graph: " + std::string(what) + " masks overlap at node " +
                                std::to_string(common.front()));
  }
}

std::vector<EdgeTriple> normalize_edges(std::vector<EdgeTriple> edges, std::size_t num_nodes,
                                        std::size_t num_relations, bool symmetrize) {
  for (const EdgeTriple& e : edges) {
    if (e.src >= num_nodes || e.dst >= num_nodes) {
      throw std::invalid_argument("graph: edge (" + std::to_string(e.src) + ", " +
                                  std::to_string(e.dst) + ") references node " +
                                  std::to_string(std::max(e.src, e.dst)) + " but graph has " +
                                  std::to_string(num_nodes) + " nodes");
    }
    if (e.rel >= num_relations) {
      throw std::invalid_argument("graph: edge relation " + std::to_string(e.rel) +
                                  " out of range (" + std::to_string(num_relations) +
                                  " relations)");
    }
  }
  if (symmetrize) {
    const std::size_t n = edges.size();
    edges.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      edges.push_back({edges[i].dst, edges[i].src, edges[i].rel});
    }
  }
  std::erase_if(edges, [](const EdgeTriple& e) { return e.src == e.dst; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace

Graph build_graph(Tensor features, std::vector<EdgeTriple> edges, std::size_t num_relations,
                  GraphBuildOptions options) {
  if (num_relations == 0) {
    throw std::invalid_argument("build_graph: need at least one relation");
  }
  if (!features.all_finite()) {
    throw std::invalid_argument("build_graph: non-finite value in feature matrix");
  }
  Graph g;
  g.num_nodes = features.rows();
  g.num_relations = num_relations;
  g.edges = normalize_edges(std::move(edges), g.num_nodes, num_relations, options.symmetrize);
  g.features = std::move(features);
  return g;
}

Graph validate_graph(const Graph& g) {
  Graph out = g;
  if (out.features.rows() != out.num_nodes) {
    throw std::invalid_argument("graph: feature row count " +
                                std::to_string(out.features.rows()) + " != num_nodes " +
                                std::to_string(out.num_nodes));
  }
  if (!out.features.all_finite()) {
    throw std::invalid_argument("graph: non-finite value in feature matrix");
  }
  out.edges = normalize_edges(std::move(out.edges), out.num_nodes, out.num_relations,
                              /*symmetrize=*/false);
  check_labels_and_masks(out);
  return out;
}

void check_labels_and_masks(const Graph& g) {
  if (!g.node_labels.empty() && g.node_labels.size() != g.num_nodes) {
    throw std::invalid_argument("graph: node label count " +
                                std::to_string(g.node_labels.size()) + " != num_nodes " +
                                std::to_string(g.num_nodes));
  }
  if (!g.node_label_matrix.empty() && g.node_label_matrix.rows() != g.num_nodes) {
    throw std::invalid_argument("graph: label matrix rows != num_nodes");
  }
  check_sorted_mask(g.train_mask, g.num_nodes, "train");
  check_sorted_mask(g.val_mask, g.num_nodes, "val");
  check_sorted_mask(g.test_mask, g.num_nodes, "test");
  check_disjoint(g.train_mask, g.val_mask, "train/val");
  check_disjoint(g.train_mask, g.test_mask, "train/test");
  check_disjoint(g.val_mask, g.test_mask, "val/test");
}

BatchedGraph batch_graphs(std::span<const Graph> graphs) {
  if (graphs.empty()) throw std::invalid_argument("batch_graphs: empty graph list");
  const std::size_t d = graphs[0].feature_dim();
  const std::size_t r = graphs[0].num_relations;
  std::size_t total_nodes = 0;
  std::size_t total_edges = 0;
  std::size_t label_cols = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    if (graphs[gi].feature_dim() != d) {
      throw std::invalid_argument("batch_graphs: graph " + std::to_string(gi) +
                                  " feature width " + std::to_string(graphs[gi].feature_dim()) +
                                  " != " + std::to_string(d));
    }
    if (graphs[gi].num_relations != r) {
      throw std::invalid_argument("batch_graphs: graph " + std::to_string(gi) +
                                  " relation count mismatch");
    }
    if (!graphs[gi].node_label_matrix.empty()) {
      const std::size_t c = graphs[gi].node_label_matrix.cols();
      if (label_cols != 0 && c != label_cols) {
        throw std::invalid_argument("batch_graphs: label matrix width mismatch");
      }
      label_cols = c;
    }
    total_nodes += graphs[gi].num_nodes;
    total_edges += graphs[gi].edges.size();
  }

  BatchedGraph batch;
  batch.merged.num_nodes = total_nodes;
  batch.merged.num_relations = r;
  batch.merged.features = Tensor(total_nodes, d);
  batch.merged.edges.reserve(total_edges);
  batch.node_graph_ids.resize(total_nodes);
  batch.node_offsets.assign(1, 0);
  if (label_cols > 0) batch.merged.node_label_matrix = Tensor(total_nodes, label_cols);

  std::size_t offset = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = graphs[gi];
    std::copy(g.features.data(), g.features.data() + g.features.size(),
              batch.merged.features.row(offset));
    for (const EdgeTriple& e : g.edges) {
      batch.merged.edges.push_back({static_cast<std::uint32_t>(e.src + offset),
                                    static_cast<std::uint32_t>(e.dst + offset), e.rel});
    }
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      batch.node_graph_ids[offset + i] = static_cast<std::uint32_t>(gi);
    }
    for (std::uint32_t v : g.train_mask) {
      batch.merged.train_mask.push_back(static_cast<std::uint32_t>(v + offset));
    }
    for (std::uint32_t v : g.val_mask) {
      batch.merged.val_mask.push_back(static_cast<std::uint32_t>(v + offset));
    }
    for (std::uint32_t v : g.test_mask) {
      batch.merged.test_mask.push_back(static_cast<std::uint32_t>(v + offset));
    }
    if (!g.node_labels.empty()) {
      batch.merged.node_labels.resize(offset, -1);
      batch.merged.node_labels.insert(batch.merged.node_labels.end(), g.node_labels.begin(),
                                      g.node_labels.end());
    } else if (!batch.merged.node_labels.empty()) {
      batch.merged.node_labels.resize(offset + g.num_nodes, -1);
    }
    if (!g.node_label_matrix.empty()) {
      std::copy(g.node_label_matrix.data(), g.node_label_matrix.data() + g.node_label_matrix.size(),
                batch.merged.node_label_matrix.row(offset));
    }
    batch.has_node_labels.push_back(g.node_labels.empty() ? 0 : 1);
    batch.has_label_matrix.push_back(g.node_label_matrix.empty() ? 0 : 1);
    batch.star_slots.push_back(static_cast<std::uint32_t>(gi));
    batch.graph_labels.push_back(g.graph_label);
    offset += g.num_nodes;
    batch.node_offsets.push_back(offset);
  }
  if (!batch.merged.node_labels.empty()) {
    batch.merged.node_labels.resize(total_nodes, -1);
  }
  return batch;
}

std::vector<Graph> unbatch(const BatchedGraph& batch) {
  std::vector<Graph> graphs(batch.num_graphs());
  for (std::size_t gi = 0; gi < batch.num_graphs(); ++gi) {
    const std::size_t begin = batch.node_offsets[gi];
    const std::size_t end = batch.node_offsets[gi + 1];
    Graph& g = graphs[gi];
    g.num_nodes = end - begin;
    g.num_relations = batch.merged.num_relations;
    g.features = Tensor(g.num_nodes, batch.merged.feature_dim());
    std::copy(batch.merged.features.row(begin),
              batch.merged.features.row(begin) + g.features.size(), g.features.data());
    for (const EdgeTriple& e : batch.merged.edges) {
      if (e.src >= begin && e.src < end) {
        g.edges.push_back({static_cast<std::uint32_t>(e.src - begin),
                           static_cast<std::uint32_t>(e.dst - begin), e.rel});
      }
    }
    for (std::uint32_t v : batch.merged.train_mask) {
      if (v >= begin && v < end) g.train_mask.push_back(static_cast<std::uint32_t>(v - begin));
    }
    for (std::uint32_t v : batch.merged.val_mask) {
      if (v >= begin && v < end) g.val_mask.push_back(static_cast<std::uint32_t>(v - begin));
    }
    for (std::uint32_t v : batch.merged.test_mask) {
      if (v >= begin && v < end) g.test_mask.push_back(static_cast<std::uint32_t>(v - begin));
    }
    if (batch.has_node_labels[gi]) {
      g.node_labels.assign(batch.merged.node_labels.begin() + begin,
                           batch.merged.node_labels.begin() + end);
    }
    if (batch.has_label_matrix[gi]) {
      g.node_label_matrix = Tensor(g.num_nodes, batch.merged.node_label_matrix.cols());
      std::copy(batch.merged.node_label_matrix.row(begin),
                batch.merged.node_label_matrix.row(begin) + g.node_label_matrix.size(),
                g.node_label_matrix.data());
    }
    g.graph_label = batch.graph_labels[gi];
  }
  return graphs;
}

}  // namespace graphstar
