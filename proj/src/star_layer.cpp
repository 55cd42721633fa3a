#include "graphstar/star_layer.hpp"

#include <cmath>
#include <stdexcept>

#include "graphstar/rng.hpp"

namespace graphstar {

HeadCombine head_combine_from_string(const std::string& name) {
  if (name == "concat") return HeadCombine::Concat;
  if (name == "average") return HeadCombine::Average;
  throw std::invalid_argument("unknown head combine mode: " + name);
}

std::string to_string(HeadCombine c) {
  return c == HeadCombine::Concat ? "concat" : "average";
}

void EncoderConfig::validate() const {
  if (input_dim == 0) throw std::invalid_argument("encoder: input_dim must be positive");
  if (num_layers == 0) throw std::invalid_argument("encoder: need at least one layer");
  if (num_heads == 0) throw std::invalid_argument("encoder: need at least one head");
  if (head_dim == 0) throw std::invalid_argument("encoder: head_dim must be positive");
  if (num_relations == 0) throw std::invalid_argument("encoder: need at least one relation");
  for (double rate : {attention_dropout, hidden_dropout}) {
    if (rate < 0.0 || rate >= 1.0) {
      throw std::invalid_argument("encoder: dropout rates must be in [0, 1)");
    }
  }
}

int ParamStore::add(std::string name, Tensor value, ParamMeta meta) {
  if (find(name) >= 0) throw std::invalid_argument("param store: duplicate name " + name);
  items_.push_back({std::move(name), std::move(value), std::move(meta)});
  return static_cast<int>(items_.size() - 1);
}

int ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<Tensor> ParamStore::snapshot_values() const {
  std::vector<Tensor> out;
  out.reserve(items_.size());
  for (const Item& item : items_) out.push_back(item.value);
  return out;
}

void ParamStore::restore_values(const std::vector<Tensor>& values) {
  if (values.size() != items_.size()) {
    throw std::invalid_argument("param store: snapshot size mismatch");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(items_[i].value)) {
      throw std::invalid_argument("param store: snapshot shape mismatch at " + items_[i].name);
    }
    items_[i].value = values[i];
  }
}

Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::size_t fan_out,
                      std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + fan_out));
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t.data()[i] = (2.0 * uniform_unit(rng) - 1.0) * limit;
  }
  return t;
}

Binding bind_parameters(Tape& tape, const ParamStore& store, bool requires_grad) {
  Binding bind;
  bind.vars.reserve(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    bind.vars.push_back(tape.leaf_ref(&store.value(i), requires_grad));
  }
  return bind;
}

std::size_t EncoderInput::feature_dim() const {
  if (dense_features) return dense_features->cols();
  if (sparse_features) return sparse_features->cols();
  return 0;
}

void EncoderInput::validate() const {
  if (!dense_features && !sparse_features) {
    throw std::invalid_argument("encoder input: no feature matrix");
  }
  const std::size_t rows = dense_features ? dense_features->rows() : sparse_features->rows();
  if (rows != num_nodes || node_graph_ids.size() != num_nodes) {
    throw std::invalid_argument("encoder input: node count mismatch");
  }
  if (num_graphs == 0 || graph_size_inv.size() != num_graphs) {
    throw std::invalid_argument("encoder input: graph bookkeeping mismatch");
  }
  if (edge_src_by_rel.size() != num_relations || edge_dst_by_rel.size() != num_relations) {
    throw std::invalid_argument("encoder input: relation bookkeeping mismatch");
  }
  std::vector<std::size_t> sizes(num_graphs, 0);
  for (std::uint32_t g : node_graph_ids) {
    if (g >= num_graphs) throw std::invalid_argument("encoder input: graph id out of range");
    ++sizes[g];
  }
  for (std::size_t g = 0; g < num_graphs; ++g) {
    if (sizes[g] == 0) {
      throw std::invalid_argument("encoder input: graph " + std::to_string(g) + " has no nodes");
    }
  }
}

namespace {

EncoderInput input_from_parts(std::size_t num_nodes, std::size_t num_relations,
                              const std::vector<EdgeTriple>& edges, IndexVec graph_ids,
                              std::size_t num_graphs) {
  EncoderInput in;
  in.num_nodes = num_nodes;
  in.num_graphs = num_graphs;
  in.num_relations = num_relations;
  in.node_graph_ids = std::move(graph_ids);
  in.edge_src_by_rel.resize(num_relations);
  in.edge_dst_by_rel.resize(num_relations);
  for (const EdgeTriple& e : edges) {
    in.edge_src_by_rel[e.rel].push_back(e.src);
    in.edge_dst_by_rel[e.rel].push_back(e.dst);
  }
  std::vector<std::size_t> sizes(num_graphs, 0);
  for (std::uint32_t g : in.node_graph_ids) ++sizes[g];
  in.graph_size_inv.resize(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    if (sizes[g] == 0) {
      throw std::invalid_argument("encoder input: graph " + std::to_string(g) + " has no nodes");
    }
    in.graph_size_inv[g] = 1.0 / static_cast<double>(sizes[g]);
  }
  return in;
}

}  // namespace

EncoderInput make_encoder_input(const Graph& g) {
  EncoderInput in = input_from_parts(g.num_nodes, g.num_relations, g.edges,
                                     IndexVec(g.num_nodes, 0), 1);
  in.dense_features = &g.features;
  in.validate();
  return in;
}

EncoderInput make_encoder_input(const BatchedGraph& batch) {
  EncoderInput in = input_from_parts(batch.merged.num_nodes, batch.merged.num_relations,
                                     batch.merged.edges, batch.node_graph_ids,
                                     batch.num_graphs());
  in.dense_features = &batch.merged.features;
  in.validate();
  return in;
}

EncoderInput make_encoder_input(const Graph& g, const SparseMatrix& features) {
  EncoderInput in = input_from_parts(g.num_nodes, g.num_relations, g.edges,
                                     IndexVec(g.num_nodes, 0), 1);
  in.sparse_features = &features;
  in.validate();
  return in;
}

EncoderInput make_encoder_input(const BatchedGraph& batch, const SparseMatrix& features) {
  EncoderInput in = input_from_parts(batch.merged.num_nodes, batch.merged.num_relations,
                                     batch.merged.edges, batch.node_graph_ids,
                                     batch.num_graphs());
  in.sparse_features = &features;
  in.validate();
  return in;
}

SparseMatrix dropout_sparse(const SparseMatrix& m, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return m;
  if (rate >= 1.0) throw std::invalid_argument("dropout_sparse: rate must be in [0, 1)");
  SparseMatrix out = m;
  const double inv = 1.0 / (1.0 - rate);
  for (double& v : out.values()) v = uniform_unit(rng) >= rate ? v * inv : 0.0;
  return out;
}

StarEncoder::StarEncoder(EncoderConfig config, ParamStore& store, std::mt19937_64& init_rng)
    : cfg_(config) {
  cfg_.validate();
  const std::size_t d = cfg_.input_dim;
  const std::size_t dh = cfg_.head_dim;
  const std::size_t packed = cfg_.num_heads * dh;

  // Star initialization follows the single-head attention of the first step;
  // its output width equals the first layer's input width.
  init_.query = store.add("star_init.query", glorot_uniform(d, d, d, init_rng),
                          {.role = "star_init.query"});
  init_.key = store.add("star_init.key", glorot_uniform(d, d, d, init_rng),
                        {.role = "star_init.key"});
  init_.value = store.add("star_init.value", glorot_uniform(d, d, d, init_rng),
                          {.role = "star_init.value"});

  layers_.resize(cfg_.num_layers);
  for (std::size_t t = 0; t < cfg_.num_layers; ++t) {
    const std::size_t w_in = cfg_.layer_input_width(t);
    const std::size_t w_out = cfg_.layer_output_width(t);
    const std::string prefix = "layer" + std::to_string(t) + ".";
    const int lt = static_cast<int>(t);
    auto packed_meta = [&](std::string role, int relation = -1) {
      return ParamMeta{.role = std::move(role), .layer = lt, .relation = relation,
                       .heads = cfg_.num_heads, .head_dim = dh};
    };
    LayerParams& lp = layers_[t];
    lp.node.query = store.add(prefix + "node.query", glorot_uniform(w_in, packed, dh, init_rng),
                              packed_meta("node.query"));
    lp.node.self_value = store.add(prefix + "node.self_value",
                                   glorot_uniform(w_in, packed, dh, init_rng),
                                   packed_meta("node.self_value"));
    lp.node.star_value = store.add(prefix + "node.star_value",
                                   glorot_uniform(w_in, packed, dh, init_rng),
                                   packed_meta("node.star_value"));
    lp.node.neighbor_value.resize(cfg_.num_relations);
    for (std::size_t r = 0; r < cfg_.num_relations; ++r) {
      lp.node.neighbor_value[r] =
          store.add(prefix + "node.neighbor_value.r" + std::to_string(r),
                    glorot_uniform(w_in, packed, dh, init_rng),
                    packed_meta("node.neighbor_value", static_cast<int>(r)));
    }
    lp.star.query = store.add(prefix + "star.query", glorot_uniform(w_in, packed, dh, init_rng),
                              packed_meta("star.query"));
    lp.star.node_value = store.add(prefix + "star.node_value",
                                   glorot_uniform(w_out, packed, dh, init_rng),
                                   packed_meta("star.node_value"));
    lp.star.self_value = store.add(prefix + "star.self_value",
                                   glorot_uniform(w_in, packed, dh, init_rng),
                                   packed_meta("star.self_value"));
  }
}

Var StarEncoder::init_star(Tape& tape, const Binding& bind, const EncoderInput& input,
                           const ForwardOptions&) const {
  input.validate();
  if (input.feature_dim() != cfg_.input_dim) {
    throw std::invalid_argument("init_star: feature width " +
                                std::to_string(input.feature_dim()) + " != configured " +
                                std::to_string(cfg_.input_dim));
  }
  const std::size_t num_graphs = input.num_graphs;
  const IndexVec& gid = input.node_graph_ids;

  // F_mean per graph, from raw features.
  Var mean;
  if (input.dense_features) {
    Var features = tape.leaf_ref(input.dense_features, false);
    Var sums = tape.scatter_sum_rows(features, gid, num_graphs);
    mean = tape.row_scale_const(sums, input.graph_size_inv);
    // alpha_i ~ exp(<W_Q F_mean, W_K f_i>); the key projection is folded into
    // a per-graph probe row so the N x d key matrix is never materialized.
    Var query = tape.matmul(mean, bind[init_.query]);
    Var probe = tape.matmul(query, bind[init_.key], false, true);
    Var scores = tape.gather_row_dot(features, probe, gid);
    Var alpha = tape.segment_softmax(scores, gid);
    Var pooled = tape.scatter_weighted_sum(alpha, features, gid, num_graphs);
    return tape.activation(tape.matmul(pooled, bind[init_.value]), cfg_.activation);
  }
  const SparseMatrix& sp = *input.sparse_features;
  Var ones = tape.constant(Tensor::full(input.num_nodes, 1, 1.0));
  Var sums = tape.sparse_segment_weighted_sum(sp, ones, gid, num_graphs);
  mean = tape.row_scale_const(sums, input.graph_size_inv);
  Var query = tape.matmul(mean, bind[init_.query]);
  Var probe = tape.matmul(query, bind[init_.key], false, true);
  Var scores = tape.sparse_gather_row_dot(sp, probe, gid);
  Var alpha = tape.segment_softmax(scores, gid);
  Var pooled = tape.sparse_segment_weighted_sum(sp, alpha, gid, num_graphs);
  return tape.activation(tape.matmul(pooled, bind[init_.value]), cfg_.activation);
}

Var StarEncoder::node_update(Tape& tape, const Binding& bind, const EncoderInput& input,
                             std::size_t layer, Var nodes, Var star,
                             const ForwardOptions& options) const {
  return node_update_impl(tape, bind, input, layer, NodeSource{.var = nodes}, star, options);
}

Var StarEncoder::node_update_impl(Tape& tape, const Binding& bind, const EncoderInput& input,
                                  std::size_t layer, NodeSource nodes, Var star,
                                  const ForwardOptions& options) const {
  if (layer >= cfg_.num_layers) throw std::invalid_argument("node_update: layer out of range");
  const LayerParams& lp = layers_[layer];
  const std::size_t n = input.num_nodes;
  const std::size_t num_graphs = input.num_graphs;
  const std::size_t heads = cfg_.num_heads;
  const bool train = options.training;
  const bool star_on = cfg_.use_star;
  if (input.num_relations != cfg_.num_relations) {
    throw std::invalid_argument("node_update: relation count mismatch");
  }
  if (train && (cfg_.hidden_dropout > 0 || cfg_.attention_dropout > 0) && !options.rng) {
    throw std::invalid_argument("node_update: training with dropout needs an rng");
  }

  // Hidden dropout applies to the layer input. A sparse source arrives with
  // dropout already applied to its stored values.
  auto project = [&](int param) {
    if (nodes.sparse) return tape.sparse_matmul(*nodes.sparse, bind[param]);
    Var h = nodes.var;
    return tape.matmul(h, bind[param]);
  };
  if (!nodes.sparse && train && cfg_.hidden_dropout > 0) {
    nodes.var = tape.dropout(nodes.var, cfg_.hidden_dropout, *options.rng);
  }

  Var queries = project(lp.node.query);
  Var self_keys = project(lp.node.self_value);
  std::vector<Var> value_parts;
  IndexVec value_rows;
  IndexVec dest_rows;
  std::size_t row_offset = 0;
  for (std::size_t r = 0; r < cfg_.num_relations; ++r) {
    value_parts.push_back(project(lp.node.neighbor_value[r]));
    const IndexVec& src = input.edge_src_by_rel[r];
    const IndexVec& dst = input.edge_dst_by_rel[r];
    for (std::size_t e = 0; e < src.size(); ++e) {
      value_rows.push_back(static_cast<std::uint32_t>(row_offset + src[e]));
      dest_rows.push_back(dst[e]);
    }
    row_offset += n;
  }
  if (star_on) {
    Var star_in = star;
    if (train && cfg_.hidden_dropout > 0) {
      star_in = tape.dropout(star_in, cfg_.hidden_dropout, *options.rng);
    }
    value_parts.push_back(tape.matmul(star_in, bind[lp.node.star_value]));
    for (std::size_t i = 0; i < n; ++i) {
      value_rows.push_back(static_cast<std::uint32_t>(row_offset + input.node_graph_ids[i]));
      dest_rows.push_back(static_cast<std::uint32_t>(i));
    }
    row_offset += num_graphs;
  }
  value_parts.push_back(self_keys);
  for (std::size_t i = 0; i < n; ++i) {
    value_rows.push_back(static_cast<std::uint32_t>(row_offset + i));
    dest_rows.push_back(static_cast<std::uint32_t>(i));
  }

  // Keys double as values under the W_K* = W_V* sharing scheme, so one
  // stacked candidate matrix serves both the scores and the aggregation.
  Var candidates = tape.concat_rows(value_parts);
  Var scores = tape.edge_head_dot(queries, candidates, dest_rows, value_rows, heads);
  Var alpha = tape.segment_softmax(scores, dest_rows);
  if (options.trace) {
    options.trace->layers.emplace_back();
    options.trace->layers.back().node_alpha = tape.value(alpha);
    options.trace->layers.back().node_segments = dest_rows;
  }
  if (train && cfg_.attention_dropout > 0) {
    alpha = tape.dropout(alpha, cfg_.attention_dropout, *options.rng);
  }
  Var mixed = tape.edge_head_scatter(candidates, alpha, value_rows, dest_rows, heads, n);
  Var activated = tape.activation(mixed, cfg_.activation);
  const bool last = layer + 1 == cfg_.num_layers;
  if (last && cfg_.final_combine == HeadCombine::Average) {
    return tape.mean_heads(activated, heads);
  }
  return activated;
}

Var StarEncoder::star_update(Tape& tape, const Binding& bind, const EncoderInput& input,
                             std::size_t layer, Var updated_nodes, Var star,
                             const ForwardOptions& options) const {
  if (layer >= cfg_.num_layers) throw std::invalid_argument("star_update: layer out of range");
  if (!cfg_.use_star) throw std::logic_error("star_update: star is ablated in this encoder");
  const LayerParams& lp = layers_[layer];
  const std::size_t n = input.num_nodes;
  const std::size_t num_graphs = input.num_graphs;
  const std::size_t heads = cfg_.num_heads;
  const std::size_t dh = cfg_.head_dim;
  const bool train = options.training;
  if (train && (cfg_.hidden_dropout > 0 || cfg_.attention_dropout > 0) && !options.rng) {
    throw std::invalid_argument("star_update: training with dropout needs an rng");
  }
  if (tape.value(updated_nodes).rows() != n) {
    throw std::invalid_argument("star_update: node row count mismatch");
  }
  if (tape.value(star).rows() != num_graphs) {
    throw std::invalid_argument("star_update: star row count mismatch");
  }

  Var star_in = star;
  if (train && cfg_.hidden_dropout > 0) {
    star_in = tape.dropout(star_in, cfg_.hidden_dropout, *options.rng);
  }
  Var queries = tape.matmul(star_in, bind[lp.star.query]);        // G x heads*dh
  Var self_keys = tape.matmul(star_in, bind[lp.star.self_value]); // G x heads*dh
  Var self_scores = tape.head_dot(queries, self_keys, heads);     // G x heads

  // The star is a single query per graph, so node keys are folded into a
  // per-graph probe row instead of projecting every node.
  std::vector<Var> node_score_cols;
  std::vector<Var> head_key_blocks;
  for (std::size_t m = 0; m < heads; ++m) {
    Var q_m = tape.slice_cols(queries, m * dh, dh);                     // G x dh
    Var w_m = tape.slice_cols(bind[lp.star.node_value], m * dh, dh);    // w_nodes x dh
    Var probe = tape.matmul(q_m, w_m, false, true);                     // G x w_nodes
    node_score_cols.push_back(tape.gather_row_dot(updated_nodes, probe, input.node_graph_ids));
    head_key_blocks.push_back(w_m);
  }
  Var node_scores = heads == 1 ? node_score_cols[0] : tape.concat_cols(node_score_cols);

  IndexVec seg = input.node_graph_ids;
  for (std::size_t g = 0; g < num_graphs; ++g) seg.push_back(static_cast<std::uint32_t>(g));
  Var stacked = tape.concat_rows({node_scores, self_scores});
  Var alpha = tape.segment_softmax(stacked, seg);
  if (options.trace && !options.trace->layers.empty()) {
    options.trace->layers.back().star_alpha = tape.value(alpha);
    options.trace->layers.back().star_segments = seg;
  }
  if (train && cfg_.attention_dropout > 0) {
    alpha = tape.dropout(alpha, cfg_.attention_dropout, *options.rng);
  }
  Var alpha_nodes = tape.slice_rows(alpha, 0, n);
  Var alpha_self = tape.slice_rows(alpha, n, num_graphs);

  std::vector<Var> head_outputs;
  for (std::size_t m = 0; m < heads; ++m) {
    Var a_m = tape.slice_cols(alpha_nodes, m, 1);
    Var pooled = tape.scatter_weighted_sum(a_m, updated_nodes, input.node_graph_ids, num_graphs);
    Var node_part = tape.matmul(pooled, head_key_blocks[m]);  // G x dh
    Var self_block = tape.slice_cols(self_keys, m * dh, dh);
    Var self_part = tape.scale_rows(self_block, tape.slice_cols(alpha_self, m, 1));
    head_outputs.push_back(tape.add(node_part, self_part));
  }
  Var combined = heads == 1 ? head_outputs[0] : tape.concat_cols(head_outputs);
  Var activated = tape.activation(combined, cfg_.activation);
  const bool last = layer + 1 == cfg_.num_layers;
  if (last && cfg_.final_combine == HeadCombine::Average) {
    return tape.mean_heads(activated, heads);
  }
  return activated;
}

StarEncoder::Output StarEncoder::encode(Tape& tape, const Binding& bind,
                                        const EncoderInput& input,
                                        const ForwardOptions& options) const {
  input.validate();
  if (input.feature_dim() != cfg_.input_dim) {
    throw std::invalid_argument("encode: feature width " + std::to_string(input.feature_dim()) +
                                " != configured " + std::to_string(cfg_.input_dim));
  }
  Output out;
  if (cfg_.use_star) out.star = init_star(tape, bind, input, options);

  NodeSource state;
  if (input.dense_features) {
    state.var = tape.leaf_ref(input.dense_features, false);
  } else {
    state.sparse = input.sparse_features;
  }
  const bool drop_inputs = options.training && cfg_.hidden_dropout > 0;
  for (std::size_t t = 0; t < cfg_.num_layers; ++t) {
    SparseMatrix dropped;
    NodeSource layer_in = state;
    if (state.sparse && drop_inputs) {
      dropped = dropout_sparse(*state.sparse, cfg_.hidden_dropout, *options.rng);
      layer_in.sparse = &dropped;
    }
    Var next_nodes = node_update_impl(tape, bind, input, t, layer_in, out.star, options);
    if (cfg_.use_star) {
      out.star = star_update(tape, bind, input, t, next_nodes, out.star, options);
    }
    state = NodeSource{.var = next_nodes};
  }
  out.nodes = state.var;
  return out;
}

}  // namespace graphstar
