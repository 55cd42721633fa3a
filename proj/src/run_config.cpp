#include "graphstar/run_config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace graphstar {

using nlohmann::json;

TaskType task_from_string(const std::string& name) {
  if (name == "node") return TaskType::Node;
  if (name == "graph") return TaskType::Graph;
  if (name == "link") return TaskType::Link;
  if (name == "text-graph") return TaskType::TextGraph;
  throw std::invalid_argument("unknown task: " + name);
}

std::string to_string(TaskType task) {
  switch (task) {
    case TaskType::Node: return "node";
    case TaskType::Graph: return "graph";
    case TaskType::Link: return "link";
    case TaskType::TextGraph: return "text-graph";
  }
  return "?";
}

double RunConfig::resolved_val_fraction() const {
  if (val_fraction >= 0.0) return val_fraction;
  return task == TaskType::Link ? 0.05 : 0.10;
}

double RunConfig::resolved_test_fraction() const {
  if (test_fraction >= 0.0) return test_fraction;
  return 0.10;
}

void RunConfig::validate() const {
  if (layers == 0 || heads == 0 || head_dim == 0) {
    throw std::invalid_argument("config: layers, heads and head_dim must be positive");
  }
  if (learning_rate <= 0.0) throw std::invalid_argument("config: learning_rate must be positive");
  if (l2 < 0.0) throw std::invalid_argument("config: l2 must be non-negative");
  if (patience == 0) throw std::invalid_argument("config: patience must be positive");
  if (max_epochs == 0) throw std::invalid_argument("config: max_epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("config: batch_size must be positive");
  for (double rate : {attention_dropout, hidden_dropout}) {
    if (rate < 0.0 || rate >= 1.0) {
      throw std::invalid_argument("config: dropout rates must be in [0, 1)");
    }
  }
  if (resolved_val_fraction() + resolved_test_fraction() >= 1.0) {
    throw std::invalid_argument("config: val and test fractions must leave training data");
  }
  if (cv_folds < 2) throw std::invalid_argument("config: cv_folds must be at least 2");
  if (text_mode != "distinct" && text_mode != "merge") {
    throw std::invalid_argument("config: text_mode must be distinct or merge");
  }
  if (window < 2) throw std::invalid_argument("config: window must be at least 2");
  if (truncate < window) throw std::invalid_argument("config: truncate must cover the window");
  if (!dataset_format.empty() && dataset_format != "citation" && dataset_format != "tu" &&
      dataset_format != "text" && dataset_format != "topic") {
    throw std::invalid_argument("config: unknown dataset_format " + dataset_format);
  }
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "task",          "dataset",        "dataset_format", "layers",
      "heads",         "head_dim",       "activation",     "attention_dropout",
      "hidden_dropout", "final_combine", "use_star",       "multi_label",
      "learning_rate", "l2",             "patience",       "max_epochs",
      "seed",          "batch_size",     "val_fraction",   "test_fraction",
      "cv_folds",      "window",         "text_mode",      "truncate",
      "out_dir",       "sparse_features"};
  return keys;
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().contains(key)) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  RunConfig c;
  try {
    if (j.contains("task")) c.task = task_from_string(j.at("task").get<std::string>());
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
    if (j.contains("dataset_format")) c.dataset_format = j.at("dataset_format").get<std::string>();
    if (j.contains("layers")) c.layers = j.at("layers").get<std::size_t>();
    if (j.contains("heads")) c.heads = j.at("heads").get<std::size_t>();
    if (j.contains("head_dim")) c.head_dim = j.at("head_dim").get<std::size_t>();
    if (j.contains("activation")) c.activation = j.at("activation").get<std::string>();
    if (j.contains("attention_dropout")) c.attention_dropout = j.at("attention_dropout").get<double>();
    if (j.contains("hidden_dropout")) c.hidden_dropout = j.at("hidden_dropout").get<double>();
    if (j.contains("final_combine")) c.final_combine = j.at("final_combine").get<std::string>();
    if (j.contains("use_star")) c.use_star = j.at("use_star").get<bool>();
    if (j.contains("multi_label")) c.multi_label = j.at("multi_label").get<bool>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("l2")) c.l2 = j.at("l2").get<double>();
    if (j.contains("patience")) c.patience = j.at("patience").get<std::size_t>();
    if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("val_fraction")) c.val_fraction = j.at("val_fraction").get<double>();
    if (j.contains("test_fraction")) c.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("cv_folds")) c.cv_folds = j.at("cv_folds").get<std::size_t>();
    if (j.contains("window")) c.window = j.at("window").get<std::size_t>();
    if (j.contains("text_mode")) c.text_mode = j.at("text_mode").get<std::string>();
    if (j.contains("truncate")) c.truncate = j.at("truncate").get<std::size_t>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("sparse_features")) c.sparse_features = j.at("sparse_features").get<bool>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig config_from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

std::string config_to_json_text(const RunConfig& c) {
  json j;
  j["task"] = to_string(c.task);
  j["dataset"] = c.dataset;
  j["dataset_format"] = c.dataset_format;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["head_dim"] = c.head_dim;
  j["activation"] = c.activation;
  j["attention_dropout"] = c.attention_dropout;
  j["hidden_dropout"] = c.hidden_dropout;
  j["final_combine"] = c.final_combine;
  j["use_star"] = c.use_star;
  j["multi_label"] = c.multi_label;
  j["learning_rate"] = c.learning_rate;
  j["l2"] = c.l2;
  j["patience"] = c.patience;
  j["max_epochs"] = c.max_epochs;
  j["seed"] = c.seed;
  j["batch_size"] = c.batch_size;
  j["val_fraction"] = c.resolved_val_fraction();
  j["test_fraction"] = c.resolved_test_fraction();
  j["cv_folds"] = c.cv_folds;
  j["window"] = c.window;
  j["text_mode"] = c.text_mode;
  j["truncate"] = c.truncate;
  j["out_dir"] = c.out_dir;
  j["sparse_features"] = c.sparse_features;
  return j.dump(2);
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  auto transductive_node = [&](double lr, double l2) {
    c.task = TaskType::Node;
    c.layers = 2;
    c.heads = 8;
    c.head_dim = 16;
    c.hidden_dropout = 0.7;
    c.attention_dropout = 0.2;
    c.patience = 50;
    c.learning_rate = lr;
    c.l2 = l2;
  };
  auto graph_preset = [&](double l2, std::size_t head_dim) {
    c.task = TaskType::Graph;
    c.layers = 3;
    c.heads = 4;
    c.head_dim = head_dim;
    c.hidden_dropout = 0.2;
    c.attention_dropout = 0.2;
    c.learning_rate = 0.0005;
    c.l2 = l2;
    c.patience = 50;
    c.cv_folds = 10;
  };
  auto link_preset = [&](std::size_t head_dim, double hidden_dropout) {
    c.task = TaskType::Link;
    c.layers = 3;
    c.heads = 4;
    c.head_dim = head_dim;
    c.hidden_dropout = hidden_dropout;
    c.attention_dropout = 0.0;
    c.learning_rate = 0.0002;
    c.l2 = 0.0005;
    c.patience = 300;
  };

  if (name == "cora-node") transductive_node(0.001, 0.002);
  else if (name == "citeseer-node") transductive_node(0.001, 0.004);
  else if (name == "pubmed-node") transductive_node(0.005, 0.0001);
  else if (name == "ppi-node") {
    c.task = TaskType::Node;
    c.layers = 3;
    c.heads = 4;
    c.head_dim = 128;
    c.hidden_dropout = 0.2;
    c.attention_dropout = 0.2;
    c.learning_rate = 0.0002;
    c.l2 = 0.0;
    c.patience = 50;
    c.multi_label = true;
  } else if (name == "imdb-node") {
    c.task = TaskType::Node;
    c.dataset_format = "topic";
    c.layers = 3;
    c.heads = 4;
    c.head_dim = 256;
    c.hidden_dropout = 0.2;
    c.attention_dropout = 0.2;
    c.learning_rate = 0.0001;
    c.l2 = 0.0;
    c.patience = 50;
  } else if (name == "enzymes-graph") graph_preset(0.0001, 16);
  else if (name == "proteins-graph") graph_preset(0.001, 128);
  else if (name == "dd-graph") graph_preset(0.001, 16);
  else if (name == "mutag-graph") graph_preset(0.0, 16);
  else if (name == "text-graph") {
    c.task = TaskType::TextGraph;
    c.layers = 3;
    c.heads = 4;
    c.head_dim = 128;
    c.hidden_dropout = 0.3;
    c.attention_dropout = 0.3;
    c.learning_rate = 0.01;
    c.l2 = 0.002;
    c.patience = 20;
  } else if (name == "cora-link") link_preset(512, 0.2);
  else if (name == "citeseer-link") link_preset(512, 0.0);
  else if (name == "pubmed-link") link_preset(128, 0.0);
  else throw std::invalid_argument("unknown preset: " + name);
  return c;
}

std::vector<std::string> preset_names() {
  return {"cora-node",   "citeseer-node", "pubmed-node",    "ppi-node",
          "imdb-node",   "enzymes-graph", "proteins-graph", "dd-graph",
          "mutag-graph", "text-graph",    "cora-link",      "citeseer-link",
          "pubmed-link"};
}

}  // namespace graphstar
