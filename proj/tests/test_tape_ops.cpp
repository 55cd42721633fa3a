#include <cmath>
#include <random>

#include "doctest.h"
#include "graphstar/rng.hpp"
#include "graphstar/tape.hpp"
#include "graphstar/tensor.hpp"
#include "support/fd_harness.hpp"

using namespace graphstar;
using graphstar::testing::check_op_gradients;
using graphstar::testing::filled;

TEST_CASE("tensor shape and value invariants") {
  Tensor t(2, 3);
  CHECK(t.size() == 6);
  CHECK(t.shape() == std::vector<std::size_t>{2, 3});
  CHECK_THROWS_AS(Tensor(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
  Tensor s = Tensor::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  CHECK(s.at(1, 0) == 3.0);
  CHECK_THROWS_AS(s.scalar(), std::invalid_argument);
  CHECK(Tensor::full(1, 1, 7.0).scalar() == 7.0);
}

TEST_CASE("sparse matrix round trip") {
  Tensor dense = Tensor::from_rows({{0.0, 2.0, 0.0}, {0.0, 0.0, 0.0}, {1.0, 0.0, 3.0}});
  SparseMatrix sp = SparseMatrix::from_dense(dense);
  CHECK(sp.nonzeros() == 3);
  CHECK(sp.to_dense() == dense);
  CHECK(sp.density() == doctest::Approx(3.0 / 9.0));
}

TEST_CASE("segment_softmax single element gives 1") {
  Tape tape;
  Var x = tape.leaf(Tensor::column_vector({5.0}), true);
  Var y = tape.segment_softmax(x, {0});
  CHECK(tape.value(y).at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("segment_softmax symmetry gives one half each") {
  Tape tape;
  Var x = tape.leaf(Tensor::column_vector({0.0, 0.0}), true);
  Var y = tape.segment_softmax(x, {0, 0});
  CHECK(tape.value(y).at(0, 0) == doctest::Approx(0.5));
  CHECK(tape.value(y).at(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("segment_softmax matches hand-computed exp/sum oracle") {
  // logits [ln 2, 0, 7], segments [0,0,1]: segment 0 holds exp values {2, 1}.
  Tape tape;
  Var x = tape.leaf(Tensor::column_vector({std::log(2.0), 0.0, 7.0}), true);
  Var y = tape.segment_softmax(x, {0, 0, 1});
  CHECK(tape.value(y).at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(tape.value(y).at(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(tape.value(y).at(2, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("segment_softmax empty input and contract violations") {
  Tape tape;
  Var x = tape.leaf(Tensor(0, 1), false);
  Var y = tape.segment_softmax(x, {});
  CHECK(tape.value(y).rows() == 0);
  Var bad = tape.leaf(Tensor::column_vector({1.0, 2.0}), false);
  CHECK_THROWS_AS(tape.segment_softmax(bad, {0}), std::invalid_argument);
}

TEST_CASE("segment_softmax sums to one per segment for extreme magnitudes") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 40);
    const std::size_t segs = 1 + uniform_index(rng, 5);
    Tensor logits(n, 2);
    IndexVec ids(n);
    for (std::size_t i = 0; i < n; ++i) {
      ids[i] = static_cast<std::uint32_t>(uniform_index(rng, segs));
      logits.at(i, 0) = (uniform_unit(rng) - 0.5) * 2e4;
      logits.at(i, 1) = (uniform_unit(rng) - 0.5) * 200.0;
    }
    Tape tape;
    Var y = tape.segment_softmax(tape.leaf(logits, false), ids);
    const Tensor& out = tape.value(y);
    for (std::size_t col = 0; col < 2; ++col) {
      std::vector<double> sums(segs, 0.0);
      std::vector<bool> seen(segs, false);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(out.at(i, col) >= 0.0);
        // Strict positivity is representable only for moderate gaps; at +-1e4
        // the exact value underflows binary64 while the sum stays normalized.
        if (col == 1) CHECK(out.at(i, col) > 0.0);
        sums[ids[i]] += out.at(i, col);
        seen[ids[i]] = true;
      }
      for (std::size_t s = 0; s < segs; ++s) {
        if (seen[s]) CHECK(sums[s] == doctest::Approx(1.0).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("scatter_weighted_sum identity and convexity") {
  Tape tape;
  Var v = tape.leaf(Tensor::from_rows({{1.0, 2.0, 3.0}}), false);
  Var c = tape.leaf(Tensor::column_vector({1.0}), false);
  Var out = tape.scatter_weighted_sum(c, v, {0}, 1);
  CHECK(tape.value(out) == Tensor::from_rows({{1.0, 2.0, 3.0}}));

  Var v2 = tape.leaf(Tensor::from_rows({{1.0, 2.0}, {1.0, 2.0}}), false);
  Var c2 = tape.leaf(Tensor::column_vector({0.5, 0.5}), false);
  Var out2 = tape.scatter_weighted_sum(c2, v2, {0, 0}, 1);
  CHECK(tape.value(out2).at(0, 0) == doctest::Approx(1.0));
  CHECK(tape.value(out2).at(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("scatter_weighted_sum matches loop-based oracle") {
  // coeffs [0.25, 0.75, 1.0], rows a,b,c, segments [0,0,1].
  const Tensor rows = Tensor::from_rows({{1.0, -2.0}, {4.0, 0.5}, {3.0, 3.0}});
  const std::vector<double> coeffs = {0.25, 0.75, 1.0};
  const IndexVec seg = {0, 0, 1};
  Tensor expect(2, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) expect.at(seg[i], j) += coeffs[i] * rows.at(i, j);
  }
  Tape tape;
  Var out = tape.scatter_weighted_sum(tape.leaf(Tensor::column_vector(coeffs), false),
                                      tape.leaf(rows, false), seg, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(tape.value(out).at(i, j) == doctest::Approx(expect.at(i, j)).epsilon(1e-12));
    }
  }
  CHECK(expect.at(0, 0) == doctest::Approx(0.25 * 1.0 + 0.75 * 4.0));
}

TEST_CASE("scatter_weighted_sum zero rows for absent segments and errors") {
  Tape tape;
  Var v = tape.leaf(Tensor::from_rows({{1.0, 1.0}}), false);
  Var c = tape.leaf(Tensor::column_vector({2.0}), false);
  Var out = tape.scatter_weighted_sum(c, v, {2}, 4);
  CHECK(tape.value(out).at(0, 0) == 0.0);
  CHECK(tape.value(out).at(2, 0) == 2.0);
  CHECK(tape.value(out).at(3, 1) == 0.0);
  Var short_c = tape.leaf(Tensor::column_vector({1.0, 1.0}), false);
  CHECK_THROWS_AS(tape.scatter_weighted_sum(short_c, v, {0}, 1), std::invalid_argument);
}

TEST_CASE("matmul values against Eigen-free expectations") {
  Tape tape;
  Var a = tape.leaf(Tensor::from_rows({{1.0, 2.0}, {3.0, 4.0}}), false);
  Var b = tape.leaf(Tensor::from_rows({{5.0, 6.0}, {7.0, 8.0}}), false);
  CHECK(tape.value(tape.matmul(a, b)) == Tensor::from_rows({{19.0, 22.0}, {43.0, 50.0}}));
  CHECK(tape.value(tape.matmul(a, b, false, true)) ==
        Tensor::from_rows({{17.0, 23.0}, {39.0, 53.0}}));
  CHECK(tape.value(tape.matmul(a, b, true, false)) ==
        Tensor::from_rows({{26.0, 30.0}, {38.0, 44.0}}));
  CHECK_THROWS_AS(tape.matmul(a, tape.leaf(Tensor(3, 2), false)), std::invalid_argument);
}

TEST_CASE("backward visits in reverse order and fills leaf gradients") {
  Tape tape;
  Tensor x0 = Tensor::from_rows({{2.0}});
  x0.requires_grad = true;
  Var x = tape.leaf(x0);
  Var y = tape.mul(x, x);          // x^2
  Var z = tape.mul(y, x);          // x^3
  Var unused = tape.leaf(Tensor::from_rows({{1.0}}), true);
  tape.backward(z);
  CHECK(tape.grad(x).at(0, 0) == doctest::Approx(12.0));  // 3 x^2
  CHECK(tape.grad(unused).at(0, 0) == 0.0);               // disconnected leaf gets zeros
  CHECK_THROWS_AS(tape.backward(z), std::logic_error);    // single backward per tape
}

TEST_CASE("dropout zero rate is identity and mask scales by 1/(1-p)") {
  Tape tape;
  std::mt19937_64 rng(7);
  Var x = tape.leaf(filled(6, 5, 1.0), true);
  CHECK(tape.dropout(x, 0.0, rng).id == x.id);
  Var y = tape.dropout(x, 0.4, rng);
  const Tensor& xv = tape.value(x);
  const Tensor& yv = tape.value(y);
  for (std::size_t i = 0; i < yv.size(); ++i) {
    const bool kept = yv.data()[i] != 0.0;
    if (kept) CHECK(yv.data()[i] == doctest::Approx(xv.data()[i] / 0.6));
  }
  CHECK_THROWS_AS(tape.dropout(x, 1.0, rng), std::invalid_argument);
}

TEST_CASE("every differentiable op passes finite difference check") {
  const double tol = 1e-4;

  SUBCASE("matmul all transpose modes") {
    for (bool ta : {false, true}) {
      for (bool tb : {false, true}) {
        auto a = ta ? filled(4, 3, 0.1) : filled(3, 4, 0.1);
        auto b = tb ? filled(5, 4, 0.7) : filled(4, 5, 0.7);
        auto rep = check_op_gradients({a, b}, [=](Tape& t, const std::vector<Var>& v) {
          return t.matmul(v[0], v[1], ta, tb);
        });
        CAPTURE(ta);
        CAPTURE(tb);
        CHECK(rep.max_rel_error < tol);
      }
    }
  }

  SUBCASE("elementwise add sub mul scale") {
    auto rep = check_op_gradients(
        {filled(3, 3, 0.2), filled(3, 3, 1.2)}, [](Tape& t, const std::vector<Var>& v) {
          return t.scale(t.mul(t.sub(t.add(v[0], v[1]), v[1]), v[0]), 1.7);
        });
    CHECK(rep.max_rel_error < tol);
  }

  SUBCASE("gather scatter segment ops") {
    const IndexVec idx = {2, 0, 2, 1, 3};
    const IndexVec seg = {1, 0, 1, 1, 0};
    auto rep = check_op_gradients({filled(4, 3, 0.4)}, [&](Tape& t, const std::vector<Var>& v) {
      Var g = t.gather_rows(v[0], idx);
      return t.scatter_sum_rows(g, seg, 2);
    });
    CHECK(rep.max_rel_error < tol);
  }

  SUBCASE("segment_softmax gradient") {
    const IndexVec seg = {0, 1, 0, 1, 1, 2};
    auto rep = check_op_gradients({filled(6, 2, 0.9, 2.0)},
                                  [&](Tape& t, const std::vector<Var>& v) {
                                    return t.segment_softmax(v[0], seg);
                                  });
    CHECK(rep.max_rel_error < tol);
  }

  SUBCASE("scatter_weighted_sum gradient in both inputs") {
    const IndexVec seg = {1, 0, 1, 1};
    auto rep = check_op_gradients({filled(4, 1, 0.3), filled(4, 3, 0.8)},
                                  [&](Tape& t, const std::vector<Var>& v) {
                                    return t.scatter_weighted_sum(v[0], v[1], seg, 2);
                                  });
    CHECK(rep.max_rel_error < tol);
  }

  SUBCASE("gather_row_dot gradient") {
    const IndexVec rows = {1, 0, 1};
    auto rep = check_op_gradients({filled(3, 4, 0.5), filled(2, 4, 1.5)},
                                  [&](Tape& t, const std::vector<Var>& v) {
                                    return t.gather_row_dot(v[0], v[1], rows);
                                  });
    CHECK(rep.max_rel_error < tol);
  }

  SUBCASE("edge head dot and scatter gradients") {
    const IndexVec q_rows = {0, 2, 1, 2};
    const IndexVec k_rows = {1, 0, 2, 2};
    auto rep = check_op_gradients(
        {filled(3, 6, 0.6), filled(3, 6, 1.1), filled(4, 2, 0.2)},
        [&](Tape& t, const std::vector<Var>& v) {
          Var scores = t.edge_head_dot(v[0], v[1], q_rows, k_rows, 2);
          Var combined = t.add(scores, v[2]);
          return t.edge_head_scatter(v[1], combined, k_rows, q_rows, 2, 3);
        });
    CHECK(rep.max_rel_error < tol);
  }

  SUBCASE("head_dot head_scale mean_heads") {
    auto rep = check_op_gradients(
        {filled(4, 6, 0.8), filled(4, 6, 1.9)}, [](Tape& t, const std::vector<Var>& v) {
          Var d = t.head_dot(v[0], v[1], 3);
          Var s = t.head_scale(v[0], d, 3);
          return t.mean_heads(s, 3);
        });
    CHECK(rep.max_rel_error < tol);
  }

  SUBCASE("structural ops") {
    auto rep = check_op_gradients(
        {filled(2, 4, 0.25), filled(3, 4, 0.85)}, [](Tape& t, const std::vector<Var>& v) {
          Var c = t.concat_rows({v[0], v[1]});
          Var s = t.slice_rows(c, 1, 3);
          Var cc = t.concat_cols({s, s});
          Var sc = t.slice_cols(cc, 2, 5);
          return t.row_scale_const(sc, {0.5, -1.5, 2.0});
        });
    CHECK(rep.max_rel_error < tol);
  }

  SUBCASE("reductions and smooth elementwise") {
    auto rep = check_op_gradients({filled(3, 4, 0.35, 2.0)},
                                  [](Tape& t, const std::vector<Var>& v) {
                                    Var sp = t.softplus(v[0]);
                                    Var sg = t.sigmoid(sp);
                                    Var rs = t.row_sum(sg);
                                    return t.mean_all(rs);
                                  });
    CHECK(rep.max_rel_error < tol);
  }

  SUBCASE("activations away from kinks") {
    Tensor x = filled(3, 3, 0.45, 2.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x.data()[i]) < 0.05) x.data()[i] = 0.3;
    }
    for (Activation act : {Activation::ReLU, Activation::ELU, Activation::Tanh}) {
      auto rep = check_op_gradients({x}, [act](Tape& t, const std::vector<Var>& v) {
        return t.activation(v[0], act);
      });
      CAPTURE(to_string(act));
      CHECK(rep.max_rel_error < tol);
    }
  }

  SUBCASE("dropout with a fixed mask") {
    auto rep = check_op_gradients({filled(4, 4, 0.55)}, [](Tape& t, const std::vector<Var>& v) {
      std::mt19937_64 rng(11);  // identical mask on every probe
      return t.dropout(v[0], 0.5, rng);
    });
    CHECK(rep.max_rel_error < tol);
  }

  SUBCASE("fused losses") {
    const std::vector<std::int32_t> labels = {2, 0, 1};
    auto rep = check_op_gradients({filled(3, 3, 0.65, 3.0)},
                                  [&](Tape& t, const std::vector<Var>& v) {
                                    return t.softmax_cross_entropy_mean(v[0], labels);
                                  });
    CHECK(rep.max_rel_error < tol);

    Tensor targets(3, 2);
    targets.at(0, 0) = 1.0;
    targets.at(1, 1) = 1.0;
    targets.at(2, 0) = 1.0;
    auto rep2 = check_op_gradients({filled(3, 2, 0.75, 2.0)},
                                   [&](Tape& t, const std::vector<Var>& v) {
                                     return t.binary_cross_entropy_mean(v[0], targets);
                                   });
    CHECK(rep2.max_rel_error < tol);
  }

  SUBCASE("sparse kernels") {
    Tensor dense = filled(4, 5, 0.15);
    dense.at(0, 1) = 0.0;
    dense.at(2, 3) = 0.0;
    dense.at(3, 0) = 0.0;
    const SparseMatrix sp = SparseMatrix::from_dense(dense);
    const IndexVec seg = {0, 1, 1, 0};
    auto rep = check_op_gradients(
        {filled(5, 3, 0.95), filled(2, 5, 0.05)}, [&](Tape& t, const std::vector<Var>& v) {
          Var a = t.sparse_matmul(sp, v[0]);
          Var c = t.sparse_gather_row_dot(sp, v[1], seg);
          return t.concat_cols({a, c});
        });
    CHECK(rep.max_rel_error < tol);
    auto rep_b = check_op_gradients({filled(4, 1, 1.05)},
                                    [&](Tape& t, const std::vector<Var>& v) {
                                      return t.sparse_segment_weighted_sum(sp, v[0], seg, 2);
                                    });
    CHECK(rep_b.max_rel_error < tol);
  }
}

TEST_CASE("sparse kernels match dense equivalents") {
  Tensor dense = filled(5, 6, 0.33);
  for (std::size_t i = 0; i < dense.size(); i += 3) dense.data()[i] = 0.0;
  const SparseMatrix sp = SparseMatrix::from_dense(dense);
  const IndexVec seg = {1, 0, 1, 2, 0};

  Tape tape;
  Var w = tape.leaf(filled(6, 4, 0.77), false);
  Var c = tape.leaf(filled(5, 1, 0.11), false);
  Var rows = tape.leaf(filled(3, 6, 0.99), false);
  Var dense_v = tape.leaf(dense, false);

  const Tensor& a_sparse = tape.value(tape.sparse_matmul(sp, w));
  const Tensor& a_dense = tape.value(tape.matmul(dense_v, w));
  for (std::size_t i = 0; i < a_dense.size(); ++i) {
    CHECK(a_sparse.data()[i] == doctest::Approx(a_dense.data()[i]).epsilon(1e-12));
  }

  const Tensor& b_sparse = tape.value(tape.sparse_segment_weighted_sum(sp, c, seg, 3));
  const Tensor& b_dense = tape.value(tape.scatter_weighted_sum(c, dense_v, seg, 3));
  for (std::size_t i = 0; i < b_dense.size(); ++i) {
    CHECK(b_sparse.data()[i] == doctest::Approx(b_dense.data()[i]).epsilon(1e-12));
  }

  const Tensor& c_sparse = tape.value(tape.sparse_gather_row_dot(sp, rows, seg));
  const Tensor& c_dense = tape.value(tape.gather_row_dot(dense_v, rows, seg));
  for (std::size_t i = 0; i < c_dense.size(); ++i) {
    CHECK(c_sparse.data()[i] == doctest::Approx(c_dense.data()[i]).epsilon(1e-12));
  }
}
