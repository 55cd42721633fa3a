#include "graphstar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace graphstar {

MetricKind metric_from_string(const std::string& name) {
  if (name == "accuracy") return MetricKind::Accuracy;
  if (name == "micro-f1") return MetricKind::MicroF1;
  if (name == "auc") return MetricKind::Auc;
  if (name == "ap") return MetricKind::AveragePrecision;
  if (name == "auc-ap-mean") return MetricKind::AucApMean;
  throw std::invalid_argument("unknown metric: " + name);
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::Accuracy: return "accuracy";
    case MetricKind::MicroF1: return "micro-f1";
    case MetricKind::Auc: return "auc";
    case MetricKind::AveragePrecision: return "ap";
    case MetricKind::AucApMean: return "auc-ap-mean";
  }
  return "?";
}

namespace {

void check_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(a) +
                                " predictions for " + std::to_string(b) + " targets");
  }
  if (a == 0) throw std::invalid_argument(std::string(what) + ": empty input");
}

void check_two_classes(const std::vector<int>& labels, const char* what) {
  bool has_pos = false, has_neg = false;
  for (int l : labels) {
    if (l != 0 && l != 1) {
      throw std::invalid_argument(std::string(what) + ": labels must be 0/1");
    }
    (l == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    throw std::invalid_argument(std::string(what) +
                                ": undefined for single-class targets");
  }
}

}  // namespace

double accuracy(const std::vector<int>& predictions, const std::vector<int>& targets) {
  check_aligned(predictions.size(), targets.size(), "accuracy");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == targets[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double micro_f1(const std::vector<int>& predictions, const std::vector<int>& targets) {
  check_aligned(predictions.size(), targets.size(), "micro_f1");
  // Pooled confusion counts over classes.
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == targets[i]) {
      tp += 1;
    } else {
      fp += 1;  // predicted class gains a false positive
      fn += 1;  // true class gains a false negative
    }
  }
  const double denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2 * tp / denom;
}

double micro_f1(const Tensor& predictions01, const Tensor& targets01) {
  if (!predictions01.same_shape(targets01)) {
    throw std::invalid_argument("micro_f1: shape mismatch");
  }
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions01.size(); ++i) {
    const bool p = predictions01.data()[i] != 0.0;
    const bool t = targets01.data()[i] != 0.0;
    if (p && t) tp += 1;
    else if (p) fp += 1;
    else if (t) fn += 1;
  }
  const double denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2 * tp / denom;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_aligned(scores.size(), labels.size(), "auc");
  check_two_classes(labels, "auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks within tie groups.
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos = 0, rank_sum = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] == 1) {
      pos += 1;
      rank_sum += rank[k];
    }
  }
  const double neg = static_cast<double>(n) - pos;
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_aligned(scores.size(), labels.size(), "average_precision");
  check_two_classes(labels, "average_precision");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double total_pos = 0;
  for (int l : labels) total_pos += l == 1 ? 1 : 0;

  // Step interpolation over distinct thresholds: sum (R_k - R_{k-1}) * P_k.
  double ap = 0.0;
  double tp = 0, fp = 0;
  double prev_recall = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      (labels[order[k]] == 1 ? tp : fp) += 1;
    }
    const double precision = tp / (tp + fp);
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j + 1;
  }
  return ap;
}

double auc_ap_mean(const std::vector<double>& scores, const std::vector<int>& labels) {
  return 0.5 * (auc(scores, labels) + average_precision(scores, labels));
}

double compute_metric(MetricKind kind, const std::vector<double>& values,
                      const std::vector<int>& targets) {
  switch (kind) {
    case MetricKind::Accuracy:
    case MetricKind::MicroF1: {
      std::vector<int> predictions(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        predictions[i] = static_cast<int>(std::llround(values[i]));
      }
      return kind == MetricKind::Accuracy ? accuracy(predictions, targets)
                                          : micro_f1(predictions, targets);
    }
    case MetricKind::Auc: return auc(values, targets);
    case MetricKind::AveragePrecision: return average_precision(values, targets);
    case MetricKind::AucApMean: return auc_ap_mean(values, targets);
  }
  throw std::invalid_argument("compute_metric: unknown kind");
}

}  // namespace graphstar
