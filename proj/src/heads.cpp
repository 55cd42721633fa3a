#include "graphstar/heads.hpp"

#include <stdexcept>

#include "graphstar/rng.hpp"

namespace graphstar {

NodeHead make_node_head(ParamStore& store, std::size_t input_width, std::size_t num_classes,
                        NodeHead::Mode mode, std::mt19937_64& init_rng,
                        const std::string& name) {
  if (num_classes == 0) throw std::invalid_argument("node head: need at least one class");
  NodeHead head;
  head.weight = store.add(name, glorot_uniform(input_width, num_classes, num_classes, init_rng),
                          {.role = name});
  head.mode = mode;
  head.num_classes = num_classes;
  return head;
}

Var node_logits(Tape& tape, const Binding& bind, const NodeHead& head, Var node_states) {
  return tape.matmul(node_states, bind[head.weight]);
}

Var node_class_loss(Tape& tape, const Binding& bind, const NodeHead& head, Var node_states,
                    const std::vector<std::int32_t>& labels, const IndexVec& mask) {
  if (head.mode != NodeHead::Mode::SingleLabel) {
    throw std::invalid_argument("node_class_loss: head is multi-label; use the matrix overload");
  }
  if (mask.empty()) throw std::invalid_argument("node_class_loss: empty mask");
  if (labels.size() != tape.value(node_states).rows()) {
    throw std::invalid_argument("node_class_loss: one label per node required");
  }
  Var logits = node_logits(tape, bind, head, node_states);
  Var masked = tape.gather_rows(logits, mask);
  std::vector<std::int32_t> masked_labels;
  masked_labels.reserve(mask.size());
  for (std::uint32_t i : mask) masked_labels.push_back(labels[i]);
  return tape.softmax_cross_entropy_mean(masked, masked_labels);
}

Var node_class_loss_multilabel(Tape& tape, const Binding& bind, const NodeHead& head,
                               Var node_states, const Tensor& label_matrix,
                               const IndexVec& mask) {
  if (head.mode != NodeHead::Mode::MultiLabel) {
    throw std::invalid_argument("node_class_loss_multilabel: head is single-label");
  }
  if (mask.empty()) throw std::invalid_argument("node_class_loss_multilabel: empty mask");
  if (label_matrix.rows() != tape.value(node_states).rows() ||
      label_matrix.cols() != head.num_classes) {
    throw std::invalid_argument("node_class_loss_multilabel: label matrix shape mismatch");
  }
  Var logits = node_logits(tape, bind, head, node_states);
  Var masked = tape.gather_rows(logits, mask);
  Tensor targets(mask.size(), label_matrix.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    std::copy(label_matrix.row(mask[i]), label_matrix.row(mask[i]) + label_matrix.cols(),
              targets.row(i));
  }
  return tape.binary_cross_entropy_mean(masked, targets);
}

GraphHead make_graph_head(ParamStore& store, std::size_t star_width, std::size_t num_classes,
                          std::mt19937_64& init_rng) {
  if (num_classes == 0) throw std::invalid_argument("graph head: need at least one class");
  GraphHead head;
  head.weight = store.add("graph_head.weight",
                          glorot_uniform(star_width, num_classes, num_classes, init_rng),
                          {.role = "graph_head.weight"});
  head.num_classes = num_classes;
  return head;
}

Var graph_logits(Tape& tape, const Binding& bind, const GraphHead& head, Var star_states) {
  return tape.matmul(star_states, bind[head.weight]);
}

Var graph_class_loss(Tape& tape, const Binding& bind, const GraphHead& head, Var star_states,
                     const std::vector<std::int32_t>& graph_labels) {
  if (graph_labels.size() != tape.value(star_states).rows()) {
    throw std::invalid_argument("graph_class_loss: one label per star row required");
  }
  for (std::size_t i = 0; i < graph_labels.size(); ++i) {
    if (graph_labels[i] < 0 || static_cast<std::size_t>(graph_labels[i]) >= head.num_classes) {
      throw std::invalid_argument("graph_class_loss: label " + std::to_string(graph_labels[i]) +
                                  " for graph " + std::to_string(i) + " out of range");
    }
  }
  Var logits = graph_logits(tape, bind, head, star_states);
  return tape.softmax_cross_entropy_mean(logits, graph_labels);
}

DistMultDecoder make_distmult(ParamStore& store, std::size_t width, std::size_t num_relations) {
  if (width == 0 || num_relations == 0) {
    throw std::invalid_argument("distmult: width and relation count must be positive");
  }
  DistMultDecoder decoder;
  decoder.relations = store.add("distmult.relations", Tensor::full(num_relations, width, 1.0),
                                {.role = "distmult.relations"});
  decoder.width = width;
  decoder.num_relations = num_relations;
  return decoder;
}

Var distmult_scores(Tape& tape, const Binding& bind, const DistMultDecoder& decoder,
                    Var embeddings, const std::vector<EdgeTriple>& triples) {
  const Tensor& emb = tape.value(embeddings);
  if (emb.cols() != decoder.width) {
    throw std::invalid_argument("distmult: embedding width " + std::to_string(emb.cols()) +
                                " != decoder width " + std::to_string(decoder.width));
  }
  IndexVec subjects, objects, relations;
  subjects.reserve(triples.size());
  objects.reserve(triples.size());
  relations.reserve(triples.size());
  for (const EdgeTriple& e : triples) {
    if (e.rel >= decoder.num_relations) {
      throw std::invalid_argument("distmult: relation " + std::to_string(e.rel) +
                                  " out of range");
    }
    subjects.push_back(e.src);
    objects.push_back(e.dst);
    relations.push_back(e.rel);
  }
  Var e_s = tape.gather_rows(embeddings, subjects);
  Var e_o = tape.gather_rows(embeddings, objects);
  Var r = tape.gather_rows(bind[decoder.relations], relations);
  return tape.row_sum(tape.mul(tape.mul(e_s, r), e_o));
}

double distmult_score(const Tensor& subject, const Tensor& relation_diag, const Tensor& object) {
  if (subject.size() != relation_diag.size() || subject.size() != object.size()) {
    throw std::invalid_argument("distmult_score: width mismatch");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < subject.size(); ++k) {
    acc += subject.data()[k] * relation_diag.data()[k] * object.data()[k];
  }
  return acc;
}

EdgeTriple sample_negative(const EdgeTriple& positive, std::size_t num_nodes,
                           std::mt19937_64& rng) {
  if (num_nodes < 2) {
    throw std::invalid_argument("sample_negative: need at least two nodes");
  }
  EdgeTriple corrupted = positive;
  const bool corrupt_subject = uniform_unit(rng) < 0.5;
  do {
    const auto candidate = static_cast<std::uint32_t>(uniform_index(rng, num_nodes));
    if (corrupt_subject) {
      corrupted.src = candidate;
    } else {
      corrupted.dst = candidate;
    }
  } while (corrupted == positive);
  return corrupted;
}

Var link_loss(Tape& tape, Var positive_scores, Var negative_scores) {
  const Tensor& pos = tape.value(positive_scores);
  const Tensor& neg = tape.value(negative_scores);
  if (pos.rows() != neg.rows() || pos.cols() != 1 || neg.cols() != 1) {
    throw std::invalid_argument("link_loss: need equal-length score columns, got " +
                                shape_string(pos) + " and " + shape_string(neg));
  }
  Var pos_term = tape.mean_all(tape.softplus(tape.scale(positive_scores, -1.0)));
  Var neg_term = tape.mean_all(tape.softplus(negative_scores));
  return tape.add(pos_term, neg_term);
}

}  // namespace graphstar
