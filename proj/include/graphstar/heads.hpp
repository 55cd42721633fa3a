#pragma once

#include <random>
#include <vector>

#include "graphstar/graph.hpp"
#include "graphstar/star_layer.hpp"
#include "graphstar/tape.hpp"

namespace graphstar {

/// Linear map from node embeddings to class logits.
struct NodeHead {
  enum class Mode { SingleLabel, MultiLabel };
  int weight = -1;  // ParamStore id, input width x num_classes
  Mode mode = Mode::SingleLabel;
  std::size_t num_classes = 0;
};

NodeHead make_node_head(ParamStore& store, std::size_t input_width, std::size_t num_classes,
                        NodeHead::Mode mode, std::mt19937_64& init_rng,
                        const std::string& name = "node_head.weight");

Var node_logits(Tape& tape, const Binding& bind, const NodeHead& head, Var node_states);

/// Mean cross-entropy over the masked nodes: softmax cross-entropy in
/// single-label mode, per-class binary cross-entropy in multi-label mode.
/// labels: class id per node (single-label) — only masked entries are read.
Var node_class_loss(Tape& tape, const Binding& bind, const NodeHead& head, Var node_states,
                    const std::vector<std::int32_t>& labels, const IndexVec& mask);
Var node_class_loss_multilabel(Tape& tape, const Binding& bind, const NodeHead& head,
                               Var node_states, const Tensor& label_matrix, const IndexVec& mask);

/// Linear map from the final star state to graph-class logits.
struct GraphHead {
  int weight = -1;
  std::size_t num_classes = 0;
};

GraphHead make_graph_head(ParamStore& store, std::size_t star_width, std::size_t num_classes,
                          std::mt19937_64& init_rng);

Var graph_logits(Tape& tape, const Binding& bind, const GraphHead& head, Var star_states);
Var graph_class_loss(Tape& tape, const Binding& bind, const GraphHead& head, Var star_states,
                     const std::vector<std::int32_t>& graph_labels);

/// DistMult edge scorer f(s, r, o) = sum_k e_s[k] * R_r[k] * e_o[k], with one
/// diagonal relation vector per relation, stored as rows of an R x d matrix.
struct DistMultDecoder {
  int relations = -1;  // ParamStore id
  std::size_t width = 0;
  std::size_t num_relations = 1;
};

/// Relation vectors start at all-ones so the decoder begins as a plain dot
/// product between embeddings.
DistMultDecoder make_distmult(ParamStore& store, std::size_t width, std::size_t num_relations);

/// Scores a batch of triples given node embeddings; returns an E x 1 column.
Var distmult_scores(Tape& tape, const Binding& bind, const DistMultDecoder& decoder,
                    Var embeddings, const std::vector<EdgeTriple>& triples);

/// Tape-free scalar score for evaluation paths.
double distmult_score(const Tensor& subject, const Tensor& relation_diag, const Tensor& object);

/// Corrupts the subject (probability 1/2) or the object of a positive triple
/// with a uniformly random node, resampling while the corrupted triple equals
/// the original. Requires at least two nodes.
EdgeTriple sample_negative(const EdgeTriple& positive, std::size_t num_nodes,
                           std::mt19937_64& rng);

/// Binary cross-entropy with logits over score pairs:
/// mean(softplus(-positive)) + mean(softplus(negative)).
Var link_loss(Tape& tape, Var positive_scores, Var negative_scores);

}  // namespace graphstar
