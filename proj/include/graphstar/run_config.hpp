#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace graphstar {

enum class TaskType { Node, Graph, Link, TextGraph };

TaskType task_from_string(const std::string& name);
std::string to_string(TaskType task);

/// Everything a run needs. JSON config files mirror this field-for-field;
/// unknown keys are rejected.
struct RunConfig {
  TaskType task = TaskType::Node;
  std::string dataset;         // directory (citation/tu/topic) or file (text corpus)
  std::string dataset_format;  // citation | tu | text | topic; defaulted per task

  // Encoder.
  std::size_t layers = 2;
  std::size_t heads = 8;
  std::size_t head_dim = 16;
  std::string activation = "elu";
  double attention_dropout = 0.0;
  double hidden_dropout = 0.0;
  std::string final_combine = "average";
  bool use_star = true;
  bool multi_label = false;

  // Optimization and stopping.
  double learning_rate = 0.001;
  double l2 = 0.0;
  std::size_t patience = 50;
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 1;
  std::size_t batch_size = 32;

  // Splits. Negative values resolve to per-task defaults: link 0.05/0.10
  // (GAE-style protocol), graph corpora 0.10/0.10.
  double val_fraction = -1.0;
  double test_fraction = -1.0;
  std::size_t cv_folds = 10;

  // Text graphs.
  std::size_t window = 4;
  std::string text_mode = "distinct";  // distinct | merge
  std::size_t truncate = 3072;

  // Execution.
  std::string out_dir;          // empty: write nothing
  bool sparse_features = true;  // use CSR input when the feature matrix is sparse

  double resolved_val_fraction() const;
  double resolved_test_fraction() const;
  void validate() const;
};

RunConfig config_from_json_text(const std::string& text);
RunConfig config_from_file(const std::string& path);
std::string config_to_json_text(const RunConfig& config);

/// Applies the keys present in the JSON text over an existing config
/// (preset merging); unknown keys are rejected.
RunConfig merge_json_overrides(RunConfig base, const std::string& text);

/// Shipped hyperparameter presets for the benchmark tasks.
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace graphstar
