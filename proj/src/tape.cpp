#include "graphstar/tape.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "graphstar/rng.hpp"

namespace graphstar {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EMat> emap(const Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

Eigen::Map<EMat> emap(Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

std::shared_ptr<const IndexVec> share(const IndexVec& v) {
  return std::make_shared<const IndexVec>(v);
}

void check_segment_ids(const IndexVec& seg, std::size_t num_segments, const char* op) {
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (seg[i] >= num_segments) {
      throw std::invalid_argument(std::string(op) + ": segment id " + std::to_string(seg[i]) +
                                  " at position " + std::to_string(i) + " out of range (" +
                                  std::to_string(num_segments) + " segments)");
    }
  }
}

}  // namespace

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  if (name == "elu") return Activation::ELU;
  if (name == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::ELU: return "elu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> backward_fn) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  n.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Tape::Node& Tape::node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
const Tape::Node& Tape::node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }

void Tape::check_var(Var v, const char* op) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::invalid_argument(std::string(op) + ": invalid tape handle");
  }
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = node(v);
  if (!n.grad_allocated) {
    const Tensor& val = n.val();
    n.grad = Tensor::zeros(val.rows(), val.cols());
    n.grad_allocated = true;
  }
  return n.grad;
}

const Tensor& Tape::value(Var v) const {
  check_var(v, "value");
  return node(v).val();
}

const Tensor& Tape::grad(Var v) const {
  check_var(v, "grad");
  const Node& n = node(v);
  if (!n.requires_grad) throw std::logic_error("grad: node does not require gradients");
  if (!n.grad_allocated) throw std::logic_error("grad: gradient not computed; run backward first");
  return n.grad;
}

bool Tape::requires_grad(Var v) const {
  check_var(v, "requires_grad");
  return node(v).requires_grad;
}

Var Tape::leaf(Tensor t, bool requires_grad) {
  Var v = push(std::move(t), requires_grad, nullptr);
  node(v).is_leaf = true;
  return v;
}

Var Tape::leaf_ref(const Tensor* t, bool requires_grad) {
  if (t == nullptr) throw std::invalid_argument("leaf_ref: null tensor");
  Var v = push(Tensor{}, requires_grad, nullptr);
  node(v).external = t;
  node(v).is_leaf = true;
  return v;
}

Var Tape::matmul(Var a, Var b, bool trans_a, bool trans_b) {
  check_var(a, "matmul");
  check_var(b, "matmul");
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  const std::size_t n = trans_a ? ta.cols() : ta.rows();
  const std::size_t ka = trans_a ? ta.rows() : ta.cols();
  const std::size_t kb = trans_b ? tb.cols() : tb.rows();
  const std::size_t m = trans_b ? tb.rows() : tb.cols();
  if (ka != kb) {
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(ka) + " vs " +
                                std::to_string(kb) + " (shapes " + shape_string(ta) + ", " +
                                shape_string(tb) + ")");
  }
  Tensor out(n, m);
  {
    auto A = emap(ta);
    auto B = emap(tb);
    auto C = emap(out);
    if (!trans_a && !trans_b) C.noalias() = A * B;
    else if (!trans_a && trans_b) C.noalias() = A * B.transpose();
    else if (trans_a && !trans_b) C.noalias() = A.transpose() * B;
    else C.noalias() = A.transpose() * B.transpose();
  }
  const bool req = requires_grad(a) || requires_grad(b);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, b, out_v, trans_a, trans_b](Tape& t) {
      auto G = emap(t.node(out_v).grad);
      auto A = emap(t.value(a));
      auto B = emap(t.value(b));
      if (t.requires_grad(a)) {
        auto dA = emap(t.grad_buffer(a));
        if (!trans_a && !trans_b) dA.noalias() += G * B.transpose();
        else if (!trans_a && trans_b) dA.noalias() += G * B;
        else if (trans_a && !trans_b) dA.noalias() += B * G.transpose();
        else dA.noalias() += B.transpose() * G.transpose();
      }
      if (t.requires_grad(b)) {
        auto dB = emap(t.grad_buffer(b));
        if (!trans_a && !trans_b) dB.noalias() += A.transpose() * G;
        else if (!trans_a && trans_b) dB.noalias() += G.transpose() * A;
        else if (trans_a && !trans_b) dB.noalias() += A * G;
        else dB.noalias() += G.transpose() * A.transpose();
      }
    };
  }
  return out_v;
}

Var Tape::add(Var a, Var b) {
  check_var(a, "add");
  check_var(b, "add");
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) {
    throw std::invalid_argument("add: shape mismatch " + shape_string(ta) + " vs " +
                                shape_string(tb));
  }
  Tensor out(ta.rows(), ta.cols());
  emap(out) = emap(ta) + emap(tb);
  const bool req = requires_grad(a) || requires_grad(b);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, b, out_v](Tape& t) {
      auto G = emap(t.node(out_v).grad);
      if (t.requires_grad(a)) emap(t.grad_buffer(a)) += G;
      if (t.requires_grad(b)) emap(t.grad_buffer(b)) += G;
    };
  }
  return out_v;
}

Var Tape::sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var Tape::mul(Var a, Var b) {
  check_var(a, "mul");
  check_var(b, "mul");
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) {
    throw std::invalid_argument("mul: shape mismatch " + shape_string(ta) + " vs " +
                                shape_string(tb));
  }
  Tensor out(ta.rows(), ta.cols());
  emap(out) = emap(ta).cwiseProduct(emap(tb));
  const bool req = requires_grad(a) || requires_grad(b);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, b, out_v](Tape& t) {
      auto G = emap(t.node(out_v).grad);
      if (t.requires_grad(a)) emap(t.grad_buffer(a)) += G.cwiseProduct(emap(t.value(b)));
      if (t.requires_grad(b)) emap(t.grad_buffer(b)) += G.cwiseProduct(emap(t.value(a)));
    };
  }
  return out_v;
}

Var Tape::scale(Var a, double c) {
  check_var(a, "scale");
  const Tensor& ta = value(a);
  Tensor out(ta.rows(), ta.cols());
  emap(out) = emap(ta) * c;
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, c, out_v](Tape& t) {
      emap(t.grad_buffer(a)) += emap(t.node(out_v).grad) * c;
    };
  }
  return out_v;
}

Var Tape::sparse_matmul(const SparseMatrix& a, Var b) {
  check_var(b, "sparse_matmul");
  const Tensor& tb = value(b);
  if (a.cols() != tb.rows()) {
    throw std::invalid_argument("sparse_matmul: inner dimensions " + std::to_string(a.cols()) +
                                " vs " + std::to_string(tb.rows()));
  }
  const std::size_t m = tb.cols();
  Tensor out(a.rows(), m);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double* dst = out.row(r);
    for (std::size_t k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
      const double v = a.values()[k];
      const double* src = tb.row(a.col_index()[k]);
      for (std::size_t j = 0; j < m; ++j) dst[j] += v * src[j];
    }
  }
  const bool req = requires_grad(b);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto sp = std::make_shared<const SparseMatrix>(a);
    node(out_v).backward_fn = [sp, b, out_v, m](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      Tensor& db = t.grad_buffer(b);
      for (std::size_t r = 0; r < sp->rows(); ++r) {
        const double* gr = g.row(r);
        for (std::size_t k = sp->row_ptr()[r]; k < sp->row_ptr()[r + 1]; ++k) {
          const double v = sp->values()[k];
          double* dst = db.row(sp->col_index()[k]);
          for (std::size_t j = 0; j < m; ++j) dst[j] += v * gr[j];
        }
      }
    };
  }
  return out_v;
}

Var Tape::sparse_segment_weighted_sum(const SparseMatrix& a, Var coeffs, const IndexVec& seg,
                                      std::size_t num_segments) {
  check_var(coeffs, "sparse_segment_weighted_sum");
  const Tensor& tc = value(coeffs);
  if (tc.rows() != a.rows() || tc.cols() != 1) {
    throw std::invalid_argument("sparse_segment_weighted_sum: coeffs must be " +
                                std::to_string(a.rows()) + "x1, got " + shape_string(tc));
  }
  if (seg.size() != a.rows()) {
    throw std::invalid_argument("sparse_segment_weighted_sum: segment id count mismatch");
  }
  check_segment_ids(seg, num_segments, "sparse_segment_weighted_sum");
  Tensor out(num_segments, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double c = tc.at(r, 0);
    double* dst = out.row(seg[r]);
    for (std::size_t k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
      dst[a.col_index()[k]] += c * a.values()[k];
    }
  }
  const bool req = requires_grad(coeffs);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto sp = std::make_shared<const SparseMatrix>(a);
    auto sg = share(seg);
    node(out_v).backward_fn = [sp, sg, coeffs, out_v](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      Tensor& dc = t.grad_buffer(coeffs);
      for (std::size_t r = 0; r < sp->rows(); ++r) {
        const double* gr = g.row((*sg)[r]);
        double acc = 0.0;
        for (std::size_t k = sp->row_ptr()[r]; k < sp->row_ptr()[r + 1]; ++k) {
          acc += sp->values()[k] * gr[sp->col_index()[k]];
        }
        dc.at(r, 0) += acc;
      }
    };
  }
  return out_v;
}

Var Tape::sparse_gather_row_dot(const SparseMatrix& a, Var b, const IndexVec& row_of) {
  check_var(b, "sparse_gather_row_dot");
  const Tensor& tb = value(b);
  if (tb.cols() != a.cols()) {
    throw std::invalid_argument("sparse_gather_row_dot: width mismatch");
  }
  if (row_of.size() != a.rows()) {
    throw std::invalid_argument("sparse_gather_row_dot: row index count mismatch");
  }
  check_segment_ids(row_of, tb.rows(), "sparse_gather_row_dot");
  Tensor out(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* br = tb.row(row_of[r]);
    double acc = 0.0;
    for (std::size_t k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
      acc += a.values()[k] * br[a.col_index()[k]];
    }
    out.at(r, 0) = acc;
  }
  const bool req = requires_grad(b);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto sp = std::make_shared<const SparseMatrix>(a);
    auto rows = share(row_of);
    node(out_v).backward_fn = [sp, rows, b, out_v](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      Tensor& db = t.grad_buffer(b);
      for (std::size_t r = 0; r < sp->rows(); ++r) {
        const double gr = g.at(r, 0);
        if (gr == 0.0) continue;
        double* dst = db.row((*rows)[r]);
        for (std::size_t k = sp->row_ptr()[r]; k < sp->row_ptr()[r + 1]; ++k) {
          dst[sp->col_index()[k]] += gr * sp->values()[k];
        }
      }
    };
  }
  return out_v;
}

Var Tape::gather_rows(Var a, const IndexVec& idx) {
  check_var(a, "gather_rows");
  const Tensor& ta = value(a);
  check_segment_ids(idx, ta.rows(), "gather_rows");
  Tensor out(idx.size(), ta.cols());
  for (std::size_t e = 0; e < idx.size(); ++e) {
    std::copy(ta.row(idx[e]), ta.row(idx[e]) + ta.cols(), out.row(e));
  }
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto ix = share(idx);
    node(out_v).backward_fn = [ix, a, out_v](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      Tensor& da = t.grad_buffer(a);
      for (std::size_t e = 0; e < ix->size(); ++e) {
        double* dst = da.row((*ix)[e]);
        const double* src = g.row(e);
        for (std::size_t j = 0; j < g.cols(); ++j) dst[j] += src[j];
      }
    };
  }
  return out_v;
}

Var Tape::scatter_sum_rows(Var a, const IndexVec& seg, std::size_t num_segments) {
  check_var(a, "scatter_sum_rows");
  const Tensor& ta = value(a);
  if (seg.size() != ta.rows()) {
    throw std::invalid_argument("scatter_sum_rows: " + std::to_string(seg.size()) +
                                " segment ids for " + std::to_string(ta.rows()) + " rows");
  }
  check_segment_ids(seg, num_segments, "scatter_sum_rows");
  Tensor out(num_segments, ta.cols());
  for (std::size_t e = 0; e < seg.size(); ++e) {
    double* dst = out.row(seg[e]);
    const double* src = ta.row(e);
    for (std::size_t j = 0; j < ta.cols(); ++j) dst[j] += src[j];
  }
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto sg = share(seg);
    node(out_v).backward_fn = [sg, a, out_v](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      Tensor& da = t.grad_buffer(a);
      for (std::size_t e = 0; e < sg->size(); ++e) {
        double* dst = da.row(e);
        const double* src = g.row((*sg)[e]);
        for (std::size_t j = 0; j < g.cols(); ++j) dst[j] += src[j];
      }
    };
  }
  return out_v;
}

Var Tape::segment_softmax(Var logits, const IndexVec& seg) {
  check_var(logits, "segment_softmax");
  const Tensor& tl = value(logits);
  if (seg.size() != tl.rows()) {
    throw std::invalid_argument("segment_softmax: " + std::to_string(seg.size()) +
                                " segment ids for " + std::to_string(tl.rows()) + " logits rows");
  }
  const std::size_t num_segments =
      seg.empty() ? 0 : static_cast<std::size_t>(*std::max_element(seg.begin(), seg.end())) + 1;
  const std::size_t n = tl.rows();
  const std::size_t c = tl.cols();
  Tensor out(n, c);
  {
    std::vector<double> seg_max(num_segments);
    std::vector<double> seg_sum(num_segments);
    for (std::size_t col = 0; col < c; ++col) {
      std::fill(seg_max.begin(), seg_max.end(), -std::numeric_limits<double>::infinity());
      for (std::size_t i = 0; i < n; ++i) {
        seg_max[seg[i]] = std::max(seg_max[seg[i]], tl.at(i, col));
      }
      std::fill(seg_sum.begin(), seg_sum.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(tl.at(i, col) - seg_max[seg[i]]);
        out.at(i, col) = e;
        seg_sum[seg[i]] += e;
      }
      for (std::size_t i = 0; i < n; ++i) out.at(i, col) /= seg_sum[seg[i]];
    }
  }
  const bool req = requires_grad(logits);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto sg = share(seg);
    node(out_v).backward_fn = [sg, logits, out_v, num_segments](Tape& t) {
      const Tensor& y = t.value(out_v);
      const Tensor& g = t.node(out_v).grad;
      Tensor& dl = t.grad_buffer(logits);
      std::vector<double> seg_dot(num_segments);
      for (std::size_t col = 0; col < y.cols(); ++col) {
        std::fill(seg_dot.begin(), seg_dot.end(), 0.0);
        for (std::size_t i = 0; i < y.rows(); ++i) {
          seg_dot[(*sg)[i]] += y.at(i, col) * g.at(i, col);
        }
        for (std::size_t i = 0; i < y.rows(); ++i) {
          dl.at(i, col) += y.at(i, col) * (g.at(i, col) - seg_dot[(*sg)[i]]);
        }
      }
    };
  }
  return out_v;
}

Var Tape::scatter_weighted_sum(Var coeffs, Var values, const IndexVec& seg,
                               std::size_t num_segments) {
  check_var(coeffs, "scatter_weighted_sum");
  check_var(values, "scatter_weighted_sum");
  const Tensor& tc = value(coeffs);
  const Tensor& tv = value(values);
  if (tc.cols() != 1 || tc.rows() != tv.rows() || seg.size() != tv.rows()) {
    throw std::invalid_argument(
        "scatter_weighted_sum: coeffs " + shape_string(tc) + ", values " + shape_string(tv) +
        ", " + std::to_string(seg.size()) + " segment ids must align (coeffs nx1)");
  }
  check_segment_ids(seg, num_segments, "scatter_weighted_sum");
  Tensor out(num_segments, tv.cols());
  for (std::size_t e = 0; e < seg.size(); ++e) {
    const double ce = tc.at(e, 0);
    double* dst = out.row(seg[e]);
    const double* src = tv.row(e);
    for (std::size_t j = 0; j < tv.cols(); ++j) dst[j] += ce * src[j];
  }
  const bool req = requires_grad(coeffs) || requires_grad(values);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto sg = share(seg);
    node(out_v).backward_fn = [sg, coeffs, values, out_v](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      const Tensor& cv = t.value(coeffs);
      const Tensor& vv = t.value(values);
      if (t.requires_grad(coeffs)) {
        Tensor& dc = t.grad_buffer(coeffs);
        for (std::size_t e = 0; e < sg->size(); ++e) {
          const double* gr = g.row((*sg)[e]);
          const double* vr = vv.row(e);
          double acc = 0.0;
          for (std::size_t j = 0; j < vv.cols(); ++j) acc += gr[j] * vr[j];
          dc.at(e, 0) += acc;
        }
      }
      if (t.requires_grad(values)) {
        Tensor& dv = t.grad_buffer(values);
        for (std::size_t e = 0; e < sg->size(); ++e) {
          const double ce = cv.at(e, 0);
          const double* gr = g.row((*sg)[e]);
          double* dst = dv.row(e);
          for (std::size_t j = 0; j < vv.cols(); ++j) dst[j] += ce * gr[j];
        }
      }
    };
  }
  return out_v;
}

Var Tape::gather_row_dot(Var a, Var b, const IndexVec& row_of) {
  check_var(a, "gather_row_dot");
  check_var(b, "gather_row_dot");
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.cols() != tb.cols()) {
    throw std::invalid_argument("gather_row_dot: width mismatch " + shape_string(ta) + " vs " +
                                shape_string(tb));
  }
  if (row_of.size() != ta.rows()) {
    throw std::invalid_argument("gather_row_dot: row index count mismatch");
  }
  check_segment_ids(row_of, tb.rows(), "gather_row_dot");
  Tensor out(ta.rows(), 1);
  for (std::size_t i = 0; i < ta.rows(); ++i) {
    const double* ar = ta.row(i);
    const double* br = tb.row(row_of[i]);
    double acc = 0.0;
    for (std::size_t j = 0; j < ta.cols(); ++j) acc += ar[j] * br[j];
    out.at(i, 0) = acc;
  }
  const bool req = requires_grad(a) || requires_grad(b);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto rows = share(row_of);
    node(out_v).backward_fn = [rows, a, b, out_v](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      const Tensor& av = t.value(a);
      const Tensor& bv = t.value(b);
      if (t.requires_grad(a)) {
        Tensor& da = t.grad_buffer(a);
        for (std::size_t i = 0; i < av.rows(); ++i) {
          const double gi = g.at(i, 0);
          if (gi == 0.0) continue;
          const double* br = bv.row((*rows)[i]);
          double* dst = da.row(i);
          for (std::size_t j = 0; j < av.cols(); ++j) dst[j] += gi * br[j];
        }
      }
      if (t.requires_grad(b)) {
        Tensor& db = t.grad_buffer(b);
        for (std::size_t i = 0; i < av.rows(); ++i) {
          const double gi = g.at(i, 0);
          if (gi == 0.0) continue;
          const double* ar = av.row(i);
          double* dst = db.row((*rows)[i]);
          for (std::size_t j = 0; j < av.cols(); ++j) dst[j] += gi * ar[j];
        }
      }
    };
  }
  return out_v;
}

Var Tape::edge_head_dot(Var q, Var k, const IndexVec& q_rows, const IndexVec& k_rows,
                        std::size_t heads) {
  check_var(q, "edge_head_dot");
  check_var(k, "edge_head_dot");
  const Tensor& tq = value(q);
  const Tensor& tk = value(k);
  if (tq.cols() != tk.cols() || heads == 0 || tq.cols() % heads != 0) {
    throw std::invalid_argument("edge_head_dot: widths " + shape_string(tq) + " vs " +
                                shape_string(tk) + " with " + std::to_string(heads) + " heads");
  }
  if (q_rows.size() != k_rows.size()) {
    throw std::invalid_argument("edge_head_dot: index length mismatch");
  }
  check_segment_ids(q_rows, tq.rows(), "edge_head_dot");
  check_segment_ids(k_rows, tk.rows(), "edge_head_dot");
  const std::size_t dh = tq.cols() / heads;
  const std::size_t ne = q_rows.size();
  Tensor out(ne, heads);
  for (std::size_t e = 0; e < ne; ++e) {
    const double* qr = tq.row(q_rows[e]);
    const double* kr = tk.row(k_rows[e]);
    for (std::size_t m = 0; m < heads; ++m) {
      double acc = 0.0;
      for (std::size_t b = 0; b < dh; ++b) acc += qr[m * dh + b] * kr[m * dh + b];
      out.at(e, m) = acc;
    }
  }
  const bool req = requires_grad(q) || requires_grad(k);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto qi = share(q_rows);
    auto ki = share(k_rows);
    node(out_v).backward_fn = [qi, ki, q, k, out_v, heads, dh](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      const Tensor& qv = t.value(q);
      const Tensor& kv = t.value(k);
      const bool want_q = t.requires_grad(q);
      const bool want_k = t.requires_grad(k);
      Tensor* dq = want_q ? &t.grad_buffer(q) : nullptr;
      Tensor* dk = want_k ? &t.grad_buffer(k) : nullptr;
      for (std::size_t e = 0; e < qi->size(); ++e) {
        const double* qr = qv.row((*qi)[e]);
        const double* kr = kv.row((*ki)[e]);
        for (std::size_t m = 0; m < heads; ++m) {
          const double ge = g.at(e, m);
          if (ge == 0.0) continue;
          if (want_q) {
            double* dst = dq->row((*qi)[e]);
            for (std::size_t b = 0; b < dh; ++b) dst[m * dh + b] += ge * kr[m * dh + b];
          }
          if (want_k) {
            double* dst = dk->row((*ki)[e]);
            for (std::size_t b = 0; b < dh; ++b) dst[m * dh + b] += ge * qr[m * dh + b];
          }
        }
      }
    };
  }
  return out_v;
}

Var Tape::edge_head_scatter(Var values, Var coeffs, const IndexVec& value_rows,
                            const IndexVec& out_rows, std::size_t heads,
                            std::size_t num_out_rows) {
  check_var(values, "edge_head_scatter");
  check_var(coeffs, "edge_head_scatter");
  const Tensor& tv = value(values);
  const Tensor& tc = value(coeffs);
  if (heads == 0 || tv.cols() % heads != 0 || tc.cols() != heads) {
    throw std::invalid_argument("edge_head_scatter: values " + shape_string(tv) + ", coeffs " +
                                shape_string(tc) + " with " + std::to_string(heads) + " heads");
  }
  if (value_rows.size() != out_rows.size() || value_rows.size() != tc.rows()) {
    throw std::invalid_argument("edge_head_scatter: index/coefficient length mismatch");
  }
  check_segment_ids(value_rows, tv.rows(), "edge_head_scatter");
  check_segment_ids(out_rows, num_out_rows, "edge_head_scatter");
  const std::size_t dh = tv.cols() / heads;
  Tensor out(num_out_rows, tv.cols());
  for (std::size_t e = 0; e < value_rows.size(); ++e) {
    const double* vr = tv.row(value_rows[e]);
    double* dst = out.row(out_rows[e]);
    for (std::size_t m = 0; m < heads; ++m) {
      const double ce = tc.at(e, m);
      if (ce == 0.0) continue;
      for (std::size_t b = 0; b < dh; ++b) dst[m * dh + b] += ce * vr[m * dh + b];
    }
  }
  const bool req = requires_grad(values) || requires_grad(coeffs);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto vi = share(value_rows);
    auto oi = share(out_rows);
    node(out_v).backward_fn = [vi, oi, values, coeffs, out_v, heads, dh](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      const Tensor& vv = t.value(values);
      const Tensor& cv = t.value(coeffs);
      const bool want_v = t.requires_grad(values);
      const bool want_c = t.requires_grad(coeffs);
      Tensor* dv = want_v ? &t.grad_buffer(values) : nullptr;
      Tensor* dc = want_c ? &t.grad_buffer(coeffs) : nullptr;
      for (std::size_t e = 0; e < vi->size(); ++e) {
        const double* gr = g.row((*oi)[e]);
        const double* vr = vv.row((*vi)[e]);
        for (std::size_t m = 0; m < heads; ++m) {
          if (want_v) {
            const double ce = cv.at(e, m);
            if (ce != 0.0) {
              double* dst = dv->row((*vi)[e]);
              for (std::size_t b = 0; b < dh; ++b) dst[m * dh + b] += ce * gr[m * dh + b];
            }
          }
          if (want_c) {
            double acc = 0.0;
            for (std::size_t b = 0; b < dh; ++b) acc += vr[m * dh + b] * gr[m * dh + b];
            dc->at(e, m) += acc;
          }
        }
      }
    };
  }
  return out_v;
}

namespace {
IndexVec iota_index(std::size_t n) {
  IndexVec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint32_t>(i);
  return v;
}
}  // namespace

Var Tape::head_dot(Var a, Var b, std::size_t heads) {
  const std::size_t n = value(a).rows();
  if (value(b).rows() != n) {
    throw std::invalid_argument("head_dot: row count mismatch");
  }
  const IndexVec idx = iota_index(n);
  return edge_head_dot(a, b, idx, idx, heads);
}

Var Tape::head_scale(Var values, Var coeffs, std::size_t heads) {
  const std::size_t n = value(values).rows();
  if (value(coeffs).rows() != n) {
    throw std::invalid_argument("head_scale: row count mismatch");
  }
  const IndexVec idx = iota_index(n);
  return edge_head_scatter(values, coeffs, idx, idx, heads, n);
}

Var Tape::mean_heads(Var a, std::size_t heads) {
  check_var(a, "mean_heads");
  const Tensor& ta = value(a);
  if (heads == 0 || ta.cols() % heads != 0) {
    throw std::invalid_argument("mean_heads: width " + std::to_string(ta.cols()) +
                                " not divisible by " + std::to_string(heads) + " heads");
  }
  const std::size_t dh = ta.cols() / heads;
  Tensor out(ta.rows(), dh);
  const double inv = 1.0 / static_cast<double>(heads);
  for (std::size_t i = 0; i < ta.rows(); ++i) {
    const double* src = ta.row(i);
    double* dst = out.row(i);
    for (std::size_t m = 0; m < heads; ++m) {
      for (std::size_t b = 0; b < dh; ++b) dst[b] += src[m * dh + b];
    }
    for (std::size_t b = 0; b < dh; ++b) dst[b] *= inv;
  }
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, out_v, heads, dh, inv](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      Tensor& da = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        const double* gr = g.row(i);
        double* dst = da.row(i);
        for (std::size_t m = 0; m < heads; ++m) {
          for (std::size_t b = 0; b < dh; ++b) dst[m * dh + b] += inv * gr[b];
        }
      }
    };
  }
  return out_v;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  std::size_t total = 0;
  const std::size_t cols = value(parts[0]).cols();
  bool req = false;
  for (Var p : parts) {
    check_var(p, "concat_rows");
    if (value(p).cols() != cols) {
      throw std::invalid_argument("concat_rows: column count mismatch");
    }
    total += value(p).rows();
    req = req || requires_grad(p);
  }
  Tensor out(total, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& tp = value(p);
    std::copy(tp.data(), tp.data() + tp.size(), out.row(offset));
    offset += tp.rows();
  }
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto ps = std::make_shared<const std::vector<Var>>(parts);
    node(out_v).backward_fn = [ps, out_v](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      std::size_t off = 0;
      for (Var p : *ps) {
        const std::size_t nr = t.value(p).rows();
        if (t.requires_grad(p)) {
          Tensor& dp = t.grad_buffer(p);
          for (std::size_t i = 0; i < nr; ++i) {
            const double* src = g.row(off + i);
            double* dst = dp.row(i);
            for (std::size_t j = 0; j < g.cols(); ++j) dst[j] += src[j];
          }
        }
        off += nr;
      }
    };
  }
  return out_v;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t total = 0;
  bool req = false;
  for (Var p : parts) {
    check_var(p, "concat_cols");
    if (value(p).rows() != rows) {
      throw std::invalid_argument("concat_cols: row count mismatch");
    }
    total += value(p).cols();
    req = req || requires_grad(p);
  }
  Tensor out(rows, total);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& tp = value(p);
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(tp.row(i), tp.row(i) + tp.cols(), out.row(i) + offset);
    }
    offset += tp.cols();
  }
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto ps = std::make_shared<const std::vector<Var>>(parts);
    node(out_v).backward_fn = [ps, out_v, rows](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      std::size_t off = 0;
      for (Var p : *ps) {
        const std::size_t nc = t.value(p).cols();
        if (t.requires_grad(p)) {
          Tensor& dp = t.grad_buffer(p);
          for (std::size_t i = 0; i < rows; ++i) {
            const double* src = g.row(i) + off;
            double* dst = dp.row(i);
            for (std::size_t j = 0; j < nc; ++j) dst[j] += src[j];
          }
        }
        off += nc;
      }
    };
  }
  return out_v;
}

Var Tape::slice_rows(Var a, std::size_t start, std::size_t count) {
  check_var(a, "slice_rows");
  const Tensor& ta = value(a);
  if (start + count > ta.rows()) {
    throw std::invalid_argument("slice_rows: range [" + std::to_string(start) + ", " +
                                std::to_string(start + count) + ") exceeds " +
                                std::to_string(ta.rows()) + " rows");
  }
  Tensor out(count, ta.cols());
  std::copy(ta.row(start), ta.row(start) + count * ta.cols(), out.data());
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, out_v, start, count](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      Tensor& da = t.grad_buffer(a);
      for (std::size_t i = 0; i < count; ++i) {
        double* dst = da.row(start + i);
        const double* src = g.row(i);
        for (std::size_t j = 0; j < g.cols(); ++j) dst[j] += src[j];
      }
    };
  }
  return out_v;
}

Var Tape::slice_cols(Var a, std::size_t start, std::size_t count) {
  check_var(a, "slice_cols");
  const Tensor& ta = value(a);
  if (start + count > ta.cols()) {
    throw std::invalid_argument("slice_cols: range [" + std::to_string(start) + ", " +
                                std::to_string(start + count) + ") exceeds " +
                                std::to_string(ta.cols()) + " columns");
  }
  Tensor out(ta.rows(), count);
  for (std::size_t i = 0; i < ta.rows(); ++i) {
    std::copy(ta.row(i) + start, ta.row(i) + start + count, out.row(i));
  }
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, out_v, start, count](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      Tensor& da = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double* dst = da.row(i) + start;
        const double* src = g.row(i);
        for (std::size_t j = 0; j < count; ++j) dst[j] += src[j];
      }
    };
  }
  return out_v;
}

Var Tape::row_scale_const(Var a, const std::vector<double>& factors) {
  check_var(a, "row_scale_const");
  const Tensor& ta = value(a);
  if (factors.size() != ta.rows()) {
    throw std::invalid_argument("row_scale_const: factor count mismatch");
  }
  Tensor out(ta.rows(), ta.cols());
  for (std::size_t i = 0; i < ta.rows(); ++i) {
    const double f = factors[i];
    const double* src = ta.row(i);
    double* dst = out.row(i);
    for (std::size_t j = 0; j < ta.cols(); ++j) dst[j] = f * src[j];
  }
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto fs = std::make_shared<const std::vector<double>>(factors);
    node(out_v).backward_fn = [fs, a, out_v](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      Tensor& da = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        const double f = (*fs)[i];
        const double* src = g.row(i);
        double* dst = da.row(i);
        for (std::size_t j = 0; j < g.cols(); ++j) dst[j] += f * src[j];
      }
    };
  }
  return out_v;
}

Var Tape::row_sum(Var a) {
  check_var(a, "row_sum");
  const Tensor& ta = value(a);
  Tensor out(ta.rows(), 1);
  for (std::size_t i = 0; i < ta.rows(); ++i) {
    const double* src = ta.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < ta.cols(); ++j) acc += src[j];
    out.at(i, 0) = acc;
  }
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, out_v](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      Tensor& da = t.grad_buffer(a);
      for (std::size_t i = 0; i < da.rows(); ++i) {
        const double gi = g.at(i, 0);
        double* dst = da.row(i);
        for (std::size_t j = 0; j < da.cols(); ++j) dst[j] += gi;
      }
    };
  }
  return out_v;
}

Var Tape::sum_all(Var a) {
  check_var(a, "sum_all");
  const Tensor& ta = value(a);
  double acc = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) acc += ta.data()[i];
  Tensor out(1, 1);
  out.at(0, 0) = acc;
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, out_v](Tape& t) {
      const double g = t.node(out_v).grad.at(0, 0);
      Tensor& da = t.grad_buffer(a);
      for (std::size_t i = 0; i < da.size(); ++i) da.data()[i] += g;
    };
  }
  return out_v;
}

Var Tape::mean_all(Var a) {
  const Tensor& ta = value(a);
  if (ta.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
  return scale(sum_all(a), 1.0 / static_cast<double>(ta.size()));
}

Var Tape::activation(Var a, Activation kind) {
  if (kind == Activation::Identity) return a;
  check_var(a, "activation");
  const Tensor& ta = value(a);
  Tensor out(ta.rows(), ta.cols());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    const double x = ta.data()[i];
    switch (kind) {
      case Activation::ReLU: out.data()[i] = x > 0.0 ? x : 0.0; break;
      case Activation::ELU: out.data()[i] = x > 0.0 ? x : std::expm1(x); break;
      case Activation::Tanh: out.data()[i] = std::tanh(x); break;
      case Activation::Identity: out.data()[i] = x; break;
    }
  }
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, out_v, kind](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      const Tensor& x = t.value(a);
      const Tensor& y = t.value(out_v);
      Tensor& da = t.grad_buffer(a);
      for (std::size_t i = 0; i < x.size(); ++i) {
        double d = 1.0;
        switch (kind) {
          case Activation::ReLU: d = x.data()[i] > 0.0 ? 1.0 : 0.0; break;
          case Activation::ELU: d = x.data()[i] > 0.0 ? 1.0 : y.data()[i] + 1.0; break;
          case Activation::Tanh: d = 1.0 - y.data()[i] * y.data()[i]; break;
          case Activation::Identity: d = 1.0; break;
        }
        da.data()[i] += d * g.data()[i];
      }
    };
  }
  return out_v;
}

Var Tape::softplus(Var a) {
  check_var(a, "softplus");
  const Tensor& ta = value(a);
  Tensor out(ta.rows(), ta.cols());
  for (std::size_t i = 0; i < ta.size(); ++i) out.data()[i] = stable_softplus(ta.data()[i]);
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, out_v](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      const Tensor& x = t.value(a);
      Tensor& da = t.grad_buffer(a);
      for (std::size_t i = 0; i < x.size(); ++i) {
        da.data()[i] += stable_sigmoid(x.data()[i]) * g.data()[i];
      }
    };
  }
  return out_v;
}

Var Tape::sigmoid(Var a) {
  check_var(a, "sigmoid");
  const Tensor& ta = value(a);
  Tensor out(ta.rows(), ta.cols());
  for (std::size_t i = 0; i < ta.size(); ++i) out.data()[i] = stable_sigmoid(ta.data()[i]);
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, out_v](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      const Tensor& y = t.value(out_v);
      Tensor& da = t.grad_buffer(a);
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double yi = y.data()[i];
        da.data()[i] += yi * (1.0 - yi) * g.data()[i];
      }
    };
  }
  return out_v;
}

Var Tape::dropout(Var a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  check_var(a, "dropout");
  const Tensor& ta = value(a);
  const double inv = 1.0 / (1.0 - rate);
  auto factors = std::make_shared<Tensor>(ta.rows(), ta.cols());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    factors->data()[i] = uniform_unit(rng) >= rate ? inv : 0.0;
  }
  Tensor out(ta.rows(), ta.cols());
  for (std::size_t i = 0; i < ta.size(); ++i) out.data()[i] = ta.data()[i] * factors->data()[i];
  const bool req = requires_grad(a);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    node(out_v).backward_fn = [a, out_v, factors](Tape& t) {
      const Tensor& g = t.node(out_v).grad;
      Tensor& da = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        da.data()[i] += g.data()[i] * factors->data()[i];
      }
    };
  }
  return out_v;
}

Var Tape::softmax_cross_entropy_mean(Var logits, const std::vector<std::int32_t>& labels) {
  check_var(logits, "softmax_cross_entropy_mean");
  const Tensor& tz = value(logits);
  if (tz.rows() == 0) throw std::invalid_argument("softmax_cross_entropy_mean: no rows");
  if (labels.size() != tz.rows()) {
    throw std::invalid_argument("softmax_cross_entropy_mean: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(tz.rows()) + " rows");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= tz.cols()) {
      throw std::invalid_argument("softmax_cross_entropy_mean: label " +
                                  std::to_string(labels[i]) + " at row " + std::to_string(i) +
                                  " out of range (" + std::to_string(tz.cols()) + " classes)");
    }
  }
  const std::size_t n = tz.rows();
  const std::size_t c = tz.cols();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = tz.row(i);
    double m = z[0];
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, z[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(z[j] - m);
    loss += m + std::log(s) - z[labels[i]];
  }
  Tensor out(1, 1);
  out.at(0, 0) = loss / static_cast<double>(n);
  const bool req = requires_grad(logits);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto lb = std::make_shared<const std::vector<std::int32_t>>(labels);
    node(out_v).backward_fn = [lb, logits, out_v, n, c](Tape& t) {
      const double g = t.node(out_v).grad.at(0, 0) / static_cast<double>(n);
      const Tensor& z = t.value(logits);
      Tensor& dz = t.grad_buffer(logits);
      for (std::size_t i = 0; i < n; ++i) {
        const double* zr = z.row(i);
        double m = zr[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, zr[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += std::exp(zr[j] - m);
        double* dst = dz.row(i);
        for (std::size_t j = 0; j < c; ++j) {
          const double p = std::exp(zr[j] - m) / s;
          dst[j] += g * (p - (static_cast<std::size_t>((*lb)[i]) == j ? 1.0 : 0.0));
        }
      }
    };
  }
  return out_v;
}

Var Tape::binary_cross_entropy_mean(Var logits, const Tensor& targets) {
  check_var(logits, "binary_cross_entropy_mean");
  const Tensor& tz = value(logits);
  if (!tz.same_shape(targets)) {
    throw std::invalid_argument("binary_cross_entropy_mean: logits " + shape_string(tz) +
                                " vs targets " + shape_string(targets));
  }
  if (tz.size() == 0) throw std::invalid_argument("binary_cross_entropy_mean: empty input");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double y = targets.data()[i];
    if (y < 0.0 || y > 1.0) {
      throw std::invalid_argument("binary_cross_entropy_mean: target outside [0, 1]");
    }
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < tz.size(); ++i) {
    const double z = tz.data()[i];
    loss += stable_softplus(z) - z * targets.data()[i];
  }
  Tensor out(1, 1);
  out.at(0, 0) = loss / static_cast<double>(tz.size());
  const bool req = requires_grad(logits);
  Var out_v = push(std::move(out), req, nullptr);
  if (req) {
    auto ts = std::make_shared<const Tensor>(targets);
    node(out_v).backward_fn = [ts, logits, out_v](Tape& t) {
      const Tensor& z = t.value(logits);
      const double g = t.node(out_v).grad.at(0, 0) / static_cast<double>(z.size());
      Tensor& dz = t.grad_buffer(logits);
      for (std::size_t i = 0; i < z.size(); ++i) {
        dz.data()[i] += g * (stable_sigmoid(z.data()[i]) - ts->data()[i]);
      }
    };
  }
  return out_v;
}

void Tape::backward(Var root) {
  check_var(root, "backward");
  if (backward_done_) throw std::logic_error("backward: already run on this tape");
  const Tensor& rv = value(root);
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw std::invalid_argument("backward: root must be 1x1, got " + shape_string(rv));
  }
  if (!requires_grad(root)) {
    throw std::invalid_argument("backward: root does not require gradients");
  }
  grad_buffer(root).at(0, 0) = 1.0;
  for (std::int32_t id = root.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.requires_grad && n.grad_allocated && n.backward_fn) n.backward_fn(*this);
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (n.requires_grad && n.is_leaf && !n.grad_allocated) {
      grad_buffer(Var{static_cast<std::int32_t>(id)});
    }
  }
  backward_done_ = true;
}

}  // namespace graphstar
