#pragma once

#include <string>
#include <vector>

#include "graphstar/tensor.hpp"

namespace graphstar {

enum class MetricKind { Accuracy, MicroF1, Auc, AveragePrecision, AucApMean };

MetricKind metric_from_string(const std::string& name);
std::string to_string(MetricKind kind);

double accuracy(const std::vector<int>& predictions, const std::vector<int>& targets);

/// Micro-averaged F1 from pooled per-class confusion counts (hard single-label
/// predictions).
double micro_f1(const std::vector<int>& predictions, const std::vector<int>& targets);

/// Multi-label micro-F1 over 0/1 matrices.
double micro_f1(const Tensor& predictions01, const Tensor& targets01);

/// Area under the ROC curve via the rank statistic; tied scores receive
/// averaged ranks. Throws when only one class is present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Area under the precision-recall curve with step interpolation over
/// distinct score thresholds.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

double auc_ap_mean(const std::vector<double>& scores, const std::vector<int>& labels);

/// Dispatcher for the metric kinds: accuracy and micro-F1 read `values` as
/// hard class predictions, the ranking metrics read them as scores.
double compute_metric(MetricKind kind, const std::vector<double>& values,
                      const std::vector<int>& targets);

}  // namespace graphstar
