#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "graphstar/tensor.hpp"

namespace graphstar {

/// Handle to a node on a Tape.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

enum class Activation { Identity, ReLU, ELU, Tanh };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

using IndexVec = std::vector<std::uint32_t>;

/// Reverse-mode differentiation record. Operations are recorded in forward
/// order; backward() replays their gradient rules in exact reverse order.
/// Single-threaded per tape; independent tapes may run concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ----- leaves -----
  /// Copies the tensor in; requires_grad taken from the tensor.
  Var leaf(const Tensor& t) { return leaf(t, t.requires_grad); }
  Var leaf(Tensor t, bool requires_grad);
  /// References external storage; caller keeps it alive for the tape's lifetime.
  Var leaf_ref(const Tensor* t, bool requires_grad);
  Var constant(Tensor t) { return leaf(std::move(t), false); }

  // ----- dense linear algebra -----
  /// op(a) * op(b) where op transposes when the flag is set.
  Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);

  // ----- sparse-input kernels (the sparse argument is constant) -----
  Var sparse_matmul(const SparseMatrix& a, Var b);
  /// out[s] = sum over rows i with seg[i]==s of coeffs[i] * a_row_i.
  Var sparse_segment_weighted_sum(const SparseMatrix& a, Var coeffs, const IndexVec& seg,
                                  std::size_t num_segments);
  /// out[i] = <a_row_i, b[row_of[i]]>.
  Var sparse_gather_row_dot(const SparseMatrix& a, Var b, const IndexVec& row_of);

  // ----- gather / scatter / segment ops -----
  Var gather_rows(Var a, const IndexVec& idx);
  Var scatter_sum_rows(Var a, const IndexVec& seg, std::size_t num_segments);
  /// Softmax normalized independently within each segment, per column.
  /// Max-subtracted; stable for logits up to +-1e4 and beyond.
  Var segment_softmax(Var logits, const IndexVec& seg);
  /// out[s] = sum over rows i with seg[i]==s of coeffs[i] * values_row_i.
  /// coeffs is n x 1; rows of absent segments are zero.
  Var scatter_weighted_sum(Var coeffs, Var values, const IndexVec& seg,
                           std::size_t num_segments);
  /// out[i] = <a[i], b[row_of[i]]> for dense a.
  Var gather_row_dot(Var a, Var b, const IndexVec& row_of);

  // ----- head-blocked attention kernels -----
  // Matrices of width heads*head_dim are treated as `heads` side-by-side blocks.
  /// out[e, m] = <q[q_rows[e], block m], k[k_rows[e], block m]>.
  Var edge_head_dot(Var q, Var k, const IndexVec& q_rows, const IndexVec& k_rows,
                    std::size_t heads);
  /// out[out_rows[e], block m] += coeffs[e, m] * values[value_rows[e], block m].
  Var edge_head_scatter(Var values, Var coeffs, const IndexVec& value_rows,
                        const IndexVec& out_rows, std::size_t heads, std::size_t num_out_rows);
  /// Row-aligned variants (identity index maps).
  Var head_dot(Var a, Var b, std::size_t heads);
  Var head_scale(Var values, Var coeffs, std::size_t heads);
  /// Rows scaled by a differentiable n x 1 coefficient column.
  Var scale_rows(Var values, Var coeffs) { return head_scale(values, coeffs, 1); }
  /// Mean over head blocks: n x (heads*d) -> n x d.
  Var mean_heads(Var a, std::size_t heads);

  // ----- structural ops -----
  Var concat_rows(const std::vector<Var>& parts);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_rows(Var a, std::size_t start, std::size_t count);
  Var slice_cols(Var a, std::size_t start, std::size_t count);
  /// out[i,:] = a[i,:] * factors[i]; factors are constants.
  Var row_scale_const(Var a, const std::vector<double>& factors);

  // ----- reductions and elementwise -----
  Var row_sum(Var a);
  Var sum_all(Var a);
  Var mean_all(Var a);
  Var activation(Var a, Activation kind);
  Var softplus(Var a);
  Var sigmoid(Var a);

  /// Inverted dropout: zeroes entries with probability `rate`, scales the rest
  /// by 1/(1-rate). Identity when rate <= 0.
  Var dropout(Var a, double rate, std::mt19937_64& rng);

  // ----- fused losses -----
  /// Mean softmax cross-entropy over rows; labels[i] in [0, cols).
  Var softmax_cross_entropy_mean(Var logits, const std::vector<std::int32_t>& labels);
  /// Mean binary cross-entropy with logits over all entries; targets in {0,1}.
  Var binary_cross_entropy_mean(Var logits, const Tensor& targets);

  // ----- execution -----
  /// Seeds d(root)/d(root) = 1 and replays gradient rules in reverse recording
  /// order. root must be 1x1. After the call every requires-grad node reachable
  /// from root holds its gradient; unreachable requires-grad leaves hold zeros.
  void backward(Var root);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t num_nodes() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;  // set for leaf_ref nodes
    Tensor grad;
    bool requires_grad = false;
    bool grad_allocated = false;
    bool is_leaf = false;
    std::function<void(Tape&)> backward_fn;

    const Tensor& val() const { return external ? *external : owned; }
  };

  Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> backward_fn);
  Node& node(Var v);
  const Node& node(Var v) const;
  Tensor& grad_buffer(Var v);
  void check_var(Var v, const char* op) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace graphstar
