#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "graphstar/metrics.hpp"
#include "graphstar/rng.hpp"

using namespace graphstar;

namespace {

/// All-pairs comparison oracle: wins plus half-credit for ties.
double auc_bruteforce(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1;
      if (scores[i] > scores[j]) wins += 1;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Precision-recall steps recomputed from scratch at every distinct threshold.
double ap_bruteforce(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  double total_pos = 0;
  for (int l : labels) total_pos += l;
  double ap = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0, predicted = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        predicted += 1;
        if (labels[i] == 1) tp += 1;
      }
    }
    const double precision = tp / predicted;
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

}  // namespace

TEST_CASE("perfect separation scores AUC and AP of one") {
  const std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
  const std::vector<int> labels = {1, 1, 0, 0};
  CHECK(auc(scores, labels) == doctest::Approx(1.0));
  CHECK(average_precision(scores, labels) == doctest::Approx(1.0));
  CHECK(auc_ap_mean(scores, labels) == doctest::Approx(1.0));
}

TEST_CASE("all-correct predictions give accuracy and micro-F1 of one") {
  const std::vector<int> p = {0, 1, 2, 1};
  CHECK(accuracy(p, p) == doctest::Approx(1.0));
  CHECK(micro_f1(p, p) == doctest::Approx(1.0));
}

TEST_CASE("worked ranking example") {
  const std::vector<double> scores = {0.9, 0.8, 0.3};
  const std::vector<int> labels = {1, 0, 1};
  CHECK(auc(scores, labels) == doctest::Approx(0.5));
  CHECK(average_precision(scores, labels) == doctest::Approx(5.0 / 6.0));
  CHECK(auc_ap_mean(scores, labels) == doctest::Approx(0.5 * (0.5 + 5.0 / 6.0)));
}

TEST_CASE("rank AUC equals brute-force pairwise comparison with ties") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 99);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(uniform_index(rng, 8)) / 7.0;  // force ties
      labels[i] = uniform_unit(rng) < 0.4 ? 1 : 0;
      (labels[i] == 1 ? pos : neg) = true;
    }
    if (!pos || !neg) continue;
    CHECK(auc(scores, labels) == doctest::Approx(auc_bruteforce(scores, labels)).epsilon(1e-12));
    CHECK(average_precision(scores, labels) ==
          doctest::Approx(ap_bruteforce(scores, labels)).epsilon(1e-12));
  }
}

TEST_CASE("accuracy and micro-F1 coincide for hard single-label predictions") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 50);
    std::vector<int> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(uniform_index(rng, 2));
      t[i] = static_cast<int>(uniform_index(rng, 2));
    }
    CHECK(accuracy(p, t) == doctest::Approx(micro_f1(p, t)).epsilon(1e-12));
  }
}

TEST_CASE("multi-label micro-F1 pools entries across classes") {
  Tensor pred = Tensor::from_rows({{1, 0, 1}, {0, 0, 1}});
  Tensor truth = Tensor::from_rows({{1, 1, 0}, {0, 0, 1}});
  // tp=2, fp=1, fn=1 -> F1 = 4/6.
  CHECK(micro_f1(pred, truth) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("single-class targets are an explicit error for ranking metrics") {
  CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(average_precision({0.1, 0.2}, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(auc({0.1}, {1, 1}), std::invalid_argument);
}

TEST_CASE("metric dispatcher routes by kind") {
  CHECK(compute_metric(MetricKind::Accuracy, {1.0, 0.0, 1.0}, {1, 0, 0}) ==
        doctest::Approx(2.0 / 3.0));
  CHECK(compute_metric(MetricKind::Auc, {0.9, 0.8, 0.3}, {1, 0, 1}) == doctest::Approx(0.5));
  CHECK(metric_from_string("auc-ap-mean") == MetricKind::AucApMean);
  CHECK_THROWS_AS(metric_from_string("f2"), std::invalid_argument);
  CHECK(to_string(MetricKind::MicroF1) == "micro-f1");
}
