#pragma once

#include <random>
#include <string>
#include <vector>

#include "graphstar/graph.hpp"
#include "graphstar/tape.hpp"

namespace graphstar {

enum class HeadCombine { Concat, Average };

HeadCombine head_combine_from_string(const std::string& name);
std::string to_string(HeadCombine c);

struct EncoderConfig {
  std::size_t input_dim = 0;
  std::size_t num_relations = 1;
  std::size_t num_layers = 2;
  std::size_t num_heads = 8;
  std::size_t head_dim = 16;
  Activation activation = Activation::ELU;
  double attention_dropout = 0.0;
  double hidden_dropout = 0.0;
  /// Hidden layers always concatenate heads; this applies to the last layer.
  HeadCombine final_combine = HeadCombine::Average;
  /// Ablation switch: when false the star candidate is dropped from node
  /// attention and the star is neither initialized nor updated.
  bool use_star = true;

  std::size_t layer_input_width(std::size_t layer) const {
    return layer == 0 ? input_dim : num_heads * head_dim;
  }
  std::size_t layer_output_width(std::size_t layer) const {
    const bool last = layer + 1 == num_layers;
    return last && final_combine == HeadCombine::Average ? head_dim : num_heads * head_dim;
  }
  std::size_t output_width() const { return layer_output_width(num_layers - 1); }
  void validate() const;
};

struct ParamMeta {
  std::string role;
  int layer = -1;
  int relation = -1;
  /// heads > 1 marks a packed matrix: one head_dim-wide column block per head.
  std::size_t heads = 1;
  std::size_t head_dim = 0;
};

/// Owns parameter tensors; their addresses are stable for the store's
/// lifetime so tapes may hold leaf references into it.
class ParamStore {
 public:
  int add(std::string name, Tensor value, ParamMeta meta);
  std::size_t count() const { return items_.size(); }
  Tensor& value(std::size_t id) { return items_[id].value; }
  const Tensor& value(std::size_t id) const { return items_[id].value; }
  const std::string& name(std::size_t id) const { return items_[id].name; }
  const ParamMeta& meta(std::size_t id) const { return items_[id].meta; }
  int find(const std::string& name) const;  // -1 when absent

  std::vector<Tensor> snapshot_values() const;
  void restore_values(const std::vector<Tensor>& values);

 private:
  struct Item {
    std::string name;
    Tensor value;
    ParamMeta meta;
  };
  std::vector<Item> items_;
};

Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::size_t fan_out,
                      std::mt19937_64& rng);

/// Per-tape leaf handles, aligned with ParamStore ids.
struct Binding {
  std::vector<Var> vars;
  Var operator[](int id) const { return vars[static_cast<std::size_t>(id)]; }
};

Binding bind_parameters(Tape& tape, const ParamStore& store, bool requires_grad);

struct StarInitParams {
  int query = -1, key = -1, value = -1;
};
struct NodeUpdateParams {
  int query = -1, self_value = -1, star_value = -1;
  std::vector<int> neighbor_value;  // one per relation
};
struct StarUpdateParams {
  int query = -1, node_value = -1, self_value = -1;
};
struct LayerParams {
  NodeUpdateParams node;
  StarUpdateParams star;
};

/// Everything a forward pass needs to know about a graph or batch. Pointers
/// reference caller-owned storage that must outlive the forward pass.
struct EncoderInput {
  const Tensor* dense_features = nullptr;
  const SparseMatrix* sparse_features = nullptr;
  std::size_t num_nodes = 0;
  std::size_t num_graphs = 1;
  std::size_t num_relations = 1;
  IndexVec node_graph_ids;
  std::vector<IndexVec> edge_src_by_rel;
  std::vector<IndexVec> edge_dst_by_rel;
  std::vector<double> graph_size_inv;

  std::size_t feature_dim() const;
  void validate() const;
};

EncoderInput make_encoder_input(const Graph& g);
EncoderInput make_encoder_input(const BatchedGraph& batch);
/// Same, but the forward pass reads features from a CSR matrix (which the
/// caller keeps alive alongside the graph).
EncoderInput make_encoder_input(const Graph& g, const SparseMatrix& features);
EncoderInput make_encoder_input(const BatchedGraph& batch, const SparseMatrix& features);

/// Normalized attention coefficients recorded per layer (before attention
/// dropout), with the segment id of every coefficient row. Node coefficients
/// group by destination node; star coefficients group by graph.
struct AttentionTrace {
  struct LayerTrace {
    Tensor node_alpha;      // candidates x heads
    IndexVec node_segments;
    Tensor star_alpha;      // (nodes + graphs) x heads
    IndexVec star_segments;
  };
  std::vector<LayerTrace> layers;
};

struct ForwardOptions {
  bool training = false;
  std::mt19937_64* rng = nullptr;    // required when training enables dropout
  AttentionTrace* trace = nullptr;   // filled when set
};

/// The GraphStar encoder: star initialization, then per layer a node update
/// followed by a star update.
class StarEncoder {
 public:
  StarEncoder(EncoderConfig config, ParamStore& store, std::mt19937_64& init_rng);

  const EncoderConfig& config() const { return cfg_; }
  const StarInitParams& init_params() const { return init_; }
  const std::vector<LayerParams>& layer_params() const { return layers_; }

  struct Output {
    Var nodes;
    Var star;  // invalid when the star is ablated
  };

  Output encode(Tape& tape, const Binding& bind, const EncoderInput& input,
                const ForwardOptions& options = {}) const;

  /// The three steps, callable in isolation on dense features.
  Var init_star(Tape& tape, const Binding& bind, const EncoderInput& input,
                const ForwardOptions& options = {}) const;
  Var node_update(Tape& tape, const Binding& bind, const EncoderInput& input, std::size_t layer,
                  Var nodes, Var star, const ForwardOptions& options = {}) const;
  Var star_update(Tape& tape, const Binding& bind, const EncoderInput& input, std::size_t layer,
                  Var updated_nodes, Var star, const ForwardOptions& options = {}) const;

 private:
  struct NodeSource {
    Var var{};
    const SparseMatrix* sparse = nullptr;  // set for raw or pre-dropped layer-0 features
  };

  Var node_update_impl(Tape& tape, const Binding& bind, const EncoderInput& input,
                       std::size_t layer, NodeSource nodes, Var star,
                       const ForwardOptions& options) const;

  EncoderConfig cfg_;
  StarInitParams init_;
  std::vector<LayerParams> layers_;
};

/// Copy of a CSR matrix with inverted dropout applied to its stored values.
SparseMatrix dropout_sparse(const SparseMatrix& m, double rate, std::mt19937_64& rng);

}  // namespace graphstar
