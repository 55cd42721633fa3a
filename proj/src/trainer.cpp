#include "graphstar/trainer.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>

#include "json.hpp"

#include "graphstar/adam.hpp"
#include "graphstar/checkpoint.hpp"
#include "graphstar/heads.hpp"
#include "graphstar/ingest.hpp"
#include "graphstar/rng.hpp"
#include "graphstar/splits.hpp"
#include "graphstar/star_layer.hpp"

namespace graphstar {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kTrainRngSalt = 0x517cc1b727220a95ULL;
constexpr double kSparseDensityCutoff = 0.25;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

EncoderConfig encoder_config_of(const RunConfig& c, std::size_t input_dim,
                                std::size_t num_relations = 1) {
  EncoderConfig e;
  e.input_dim = input_dim;
  e.num_relations = num_relations;
  e.num_layers = c.layers;
  e.num_heads = c.heads;
  e.head_dim = c.head_dim;
  e.activation = activation_from_string(c.activation);
  e.attention_dropout = c.attention_dropout;
  e.hidden_dropout = c.hidden_dropout;
  e.final_combine = head_combine_from_string(c.final_combine);
  e.use_star = c.use_star;
  e.validate();
  return e;
}

std::vector<AdamState> make_adam_states(const ParamStore& store, const RunConfig& c) {
  std::vector<AdamState> states;
  states.reserve(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    states.push_back(make_adam_state(store.value(i), c.learning_rate, c.l2));
  }
  return states;
}

void apply_gradients(ParamStore& store, Tape& tape, const Binding& bind,
                     std::vector<AdamState>& states) {
  for (std::size_t i = 0; i < store.count(); ++i) {
    adam_step(store.value(i), tape.grad(bind.vars[i]), states[i]);
  }
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits.at(i, c) > logits.at(i, best)) best = c;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

/// Early-stopping bookkeeping shared by every task loop.
struct StopTracker {
  MetricsRecord record;
  std::vector<Tensor> best_params;
  std::size_t since_best = 0;

  /// Returns true when training should stop.
  bool observe(std::size_t epoch, double train_loss, double val, double test, double seconds,
               const ParamStore& store, std::size_t patience) {
    if (val > record.best_val) {
      record.best_val = val;
      record.best_epoch = epoch;
      record.test_at_best = test;
      best_params = store.snapshot_values();
      since_best = 0;
    } else {
      ++since_best;
    }
    record.rows.push_back({epoch, train_loss, val, record.test_at_best, seconds});
    return since_best >= patience;
  }

  void finish(ParamStore& store) {
    if (!best_params.empty()) store.restore_values(best_params);
  }
};

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

json record_to_json(const MetricsRecord& r) {
  json j;
  j["metric"] = to_string(r.metric);
  j["best_val"] = r.best_val;
  if (std::isfinite(r.test_at_best)) j["test_at_best"] = r.test_at_best;
  j["best_epoch"] = r.best_epoch;
  j["epochs"] = r.rows.size();
  j["diverged"] = r.diverged;
  return j;
}

void write_summary_json(const std::string& path, const RunConfig& config,
                        const MetricsRecord& record, const json& extra = {}) {
  json j;
  j["version"] = kVersion;
  j["task"] = to_string(config.task);
  j["result"] = record_to_json(record);
  j["config"] = json::parse(config_to_json_text(config));
  for (const auto& [k, v] : extra.items()) j[k] = v;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << "\n";
}

void write_run_outputs(const std::string& out_dir, const RunConfig& config,
                       const MetricsRecord& record, const ParamStore& store) {
  if (out_dir.empty()) return;
  ensure_dir(out_dir);
  write_metrics_csv(out_dir + "/metrics.csv", record);
  write_summary_json(out_dir + "/summary.json", config, record);
  save_checkpoint(out_dir + "/checkpoint.bin", store);
}

// ---------------------------------------------------------------------------
// Node classification (citation or topic datasets).
// ---------------------------------------------------------------------------

struct NodeTaskData {
  Graph graph;
  std::size_t num_classes = 0;
  bool multi_label = false;
};

NodeTaskData load_node_data(const RunConfig& c) {
  const std::string format = c.dataset_format.empty() ? "citation" : c.dataset_format;
  NodeTaskData data;
  if (format == "citation") {
    CitationDataset ds = load_citation_dataset(c.dataset);
    data.graph = std::move(ds.graph);
    data.num_classes = ds.num_classes;
  } else if (format == "topic") {
    TopicDataset ds = load_topic_dataset(c.dataset);
    data.graph = std::move(ds.graph);
    data.num_classes = ds.num_classes;
  } else {
    throw std::invalid_argument("node task: unsupported dataset_format " + format);
  }
  data.multi_label = !data.graph.node_label_matrix.empty();
  if (data.multi_label != c.multi_label && c.multi_label) {
    throw std::invalid_argument("config requests multi-label but the dataset is single-label");
  }
  return data;
}

struct NodeModel {
  ParamStore store;
  std::unique_ptr<StarEncoder> encoder;
  NodeHead head;
};

NodeModel build_node_model(const RunConfig& c, std::size_t input_dim, std::size_t classes,
                           bool multi_label) {
  NodeModel m;
  std::mt19937_64 init_rng(c.seed);
  EncoderConfig ecfg = encoder_config_of(c, input_dim);
  m.encoder = std::make_unique<StarEncoder>(ecfg, m.store, init_rng);
  m.head = make_node_head(m.store, ecfg.output_width(), classes,
                          multi_label ? NodeHead::Mode::MultiLabel
                                      : NodeHead::Mode::SingleLabel,
                          init_rng);
  return m;
}

struct NodeEvalScores {
  double val = 0.0;
  double test = std::numeric_limits<double>::quiet_NaN();
};

NodeEvalScores evaluate_node(const NodeModel& m, const EncoderInput& input,
                             const NodeTaskData& data) {
  Tape tape;
  Binding bind = bind_parameters(tape, m.store, false);
  auto enc = m.encoder->encode(tape, bind, input);
  Var logits = node_logits(tape, bind, m.head, enc.nodes);
  NodeEvalScores scores;
  if (data.multi_label) {
    const Tensor& probs = tape.value(tape.sigmoid(logits));
    auto f1_of = [&](const IndexVec& mask) {
      Tensor pred(mask.size(), probs.cols());
      Tensor truth(mask.size(), probs.cols());
      for (std::size_t i = 0; i < mask.size(); ++i) {
        for (std::size_t cidx = 0; cidx < probs.cols(); ++cidx) {
          pred.at(i, cidx) = probs.at(mask[i], cidx) >= 0.5 ? 1.0 : 0.0;
          truth.at(i, cidx) = data.graph.node_label_matrix.at(mask[i], cidx);
        }
      }
      return micro_f1(pred, truth);
    };
    scores.val = f1_of(data.graph.val_mask);
    if (!data.graph.test_mask.empty()) scores.test = f1_of(data.graph.test_mask);
  } else {
    const std::vector<int> pred = argmax_rows(tape.value(logits));
    auto accuracy_of = [&](const IndexVec& mask) {
      std::vector<int> p, t;
      for (std::uint32_t i : mask) {
        p.push_back(pred[i]);
        t.push_back(data.graph.node_labels[i]);
      }
      return accuracy(p, t);
    };
    scores.val = accuracy_of(data.graph.val_mask);
    if (!data.graph.test_mask.empty()) scores.test = accuracy_of(data.graph.test_mask);
  }
  return scores;
}

TrainResult train_node(const RunConfig& c, NodeTaskData& data, const std::string& out_dir) {
  if (data.graph.train_mask.empty() || data.graph.val_mask.empty()) {
    throw std::invalid_argument("node task: train and val masks must be non-empty");
  }
  NodeModel m = build_node_model(c, data.graph.feature_dim(), data.num_classes,
                                 data.multi_label);
  std::vector<AdamState> adam = make_adam_states(m.store, c);

  SparseMatrix sparse;
  bool use_sparse = false;
  if (c.sparse_features) {
    sparse = SparseMatrix::from_dense(data.graph.features);
    use_sparse = sparse.density() < kSparseDensityCutoff;
  }
  EncoderInput input = use_sparse ? make_encoder_input(data.graph, sparse)
                                  : make_encoder_input(data.graph);

  std::mt19937_64 train_rng(c.seed ^ kTrainRngSalt);
  StopTracker tracker;
  tracker.record.metric = data.multi_label ? MetricKind::MicroF1 : MetricKind::Accuracy;

  for (std::size_t epoch = 1; epoch <= c.max_epochs; ++epoch) {
    const auto t0 = Clock::now();
    double loss_value = 0.0;
    {
      Tape tape;
      Binding bind = bind_parameters(tape, m.store, true);
      ForwardOptions fo{.training = true, .rng = &train_rng};
      auto enc = m.encoder->encode(tape, bind, input, fo);
      Var loss = data.multi_label
                     ? node_class_loss_multilabel(tape, bind, m.head, enc.nodes,
                                                  data.graph.node_label_matrix,
                                                  data.graph.train_mask)
                     : node_class_loss(tape, bind, m.head, enc.nodes, data.graph.node_labels,
                                       data.graph.train_mask);
      loss_value = tape.value(loss).scalar();
      if (!std::isfinite(loss_value)) {
        tracker.record.diverged = true;
        break;
      }
      tape.backward(loss);
      try {
        apply_gradients(m.store, tape, bind, adam);
      } catch (const std::runtime_error&) {
        tracker.record.diverged = true;
        break;
      }
    }
    NodeEvalScores scores = evaluate_node(m, input, data);
    if (tracker.observe(epoch, loss_value, scores.val, scores.test, seconds_since(t0), m.store,
                        c.patience)) {
      break;
    }
  }
  tracker.finish(m.store);
  write_run_outputs(out_dir, c, tracker.record, m.store);
  return {tracker.record, c};
}

// ---------------------------------------------------------------------------
// Link prediction over a citation graph.
// ---------------------------------------------------------------------------

struct LinkModel {
  ParamStore store;
  std::unique_ptr<StarEncoder> encoder;
  DistMultDecoder decoder;
};

LinkModel build_link_model(const RunConfig& c, std::size_t input_dim) {
  LinkModel m;
  std::mt19937_64 init_rng(c.seed);
  EncoderConfig ecfg = encoder_config_of(c, input_dim);
  m.encoder = std::make_unique<StarEncoder>(ecfg, m.store, init_rng);
  m.decoder = make_distmult(m.store, ecfg.output_width(), 1);
  return m;
}

double ranking_metric(const LinkModel& m, const Tensor& embeddings,
                      const std::vector<EdgeTriple>& pos, const std::vector<EdgeTriple>& neg) {
  const Tensor& rel = m.store.value(m.decoder.relations);
  Tensor rel_row(1, rel.cols());
  std::copy(rel.row(0), rel.row(0) + rel.cols(), rel_row.data());
  std::vector<double> scores;
  std::vector<int> labels;
  auto add = [&](const std::vector<EdgeTriple>& triples, int label) {
    Tensor s(1, embeddings.cols()), o(1, embeddings.cols());
    for (const EdgeTriple& e : triples) {
      std::copy(embeddings.row(e.src), embeddings.row(e.src) + embeddings.cols(), s.data());
      std::copy(embeddings.row(e.dst), embeddings.row(e.dst) + embeddings.cols(), o.data());
      scores.push_back(distmult_score(s, rel_row, o));
      labels.push_back(label);
    }
  };
  add(pos, 1);
  add(neg, 0);
  return auc_ap_mean(scores, labels);
}

TrainResult train_link(const RunConfig& c, const std::string& out_dir) {
  const std::string format = c.dataset_format.empty() ? "citation" : c.dataset_format;
  if (format != "citation") {
    throw std::invalid_argument("link task: unsupported dataset_format " + format);
  }
  CitationDataset ds = load_citation_dataset(c.dataset);
  const double vf = c.resolved_val_fraction();
  const double tf = c.resolved_test_fraction();
  if (vf <= 0.0) throw std::invalid_argument("link task: needs a validation fraction");
  LinkSplit split = split_link_edges(ds.graph, vf, tf, c.seed);

  LinkModel m = build_link_model(c, split.train_graph.feature_dim());
  std::vector<AdamState> adam = make_adam_states(m.store, c);

  SparseMatrix sparse;
  bool use_sparse = false;
  if (c.sparse_features) {
    sparse = SparseMatrix::from_dense(split.train_graph.features);
    use_sparse = sparse.density() < kSparseDensityCutoff;
  }
  EncoderInput input = use_sparse ? make_encoder_input(split.train_graph, sparse)
                                  : make_encoder_input(split.train_graph);

  std::mt19937_64 train_rng(c.seed ^ kTrainRngSalt);
  StopTracker tracker;
  tracker.record.metric = MetricKind::AucApMean;
  const std::size_t n = split.train_graph.num_nodes;

  for (std::size_t epoch = 1; epoch <= c.max_epochs; ++epoch) {
    const auto t0 = Clock::now();
    double loss_value = 0.0;
    {
      Tape tape;
      Binding bind = bind_parameters(tape, m.store, true);
      ForwardOptions fo{.training = true, .rng = &train_rng};
      auto enc = m.encoder->encode(tape, bind, input, fo);
      // Fresh negatives every epoch, one per training positive.
      std::vector<EdgeTriple> negatives;
      negatives.reserve(split.train_pos.size());
      for (const EdgeTriple& e : split.train_pos) {
        negatives.push_back(sample_negative(e, n, train_rng));
      }
      Var pos_scores = distmult_scores(tape, bind, m.decoder, enc.nodes, split.train_pos);
      Var neg_scores = distmult_scores(tape, bind, m.decoder, enc.nodes, negatives);
      Var loss = link_loss(tape, pos_scores, neg_scores);
      loss_value = tape.value(loss).scalar();
      if (!std::isfinite(loss_value)) {
        tracker.record.diverged = true;
        break;
      }
      tape.backward(loss);
      try {
        apply_gradients(m.store, tape, bind, adam);
      } catch (const std::runtime_error&) {
        tracker.record.diverged = true;
        break;
      }
    }
    double val_metric = 0.0;
    double test_metric = std::numeric_limits<double>::quiet_NaN();
    {
      Tape tape;
      Binding bind = bind_parameters(tape, m.store, false);
      auto enc = m.encoder->encode(tape, bind, input);
      const Tensor& embeddings = tape.value(enc.nodes);
      val_metric = ranking_metric(m, embeddings, split.val_pos, split.val_neg);
      if (!split.test_pos.empty()) {
        test_metric = ranking_metric(m, embeddings, split.test_pos, split.test_neg);
      }
    }
    if (tracker.observe(epoch, loss_value, val_metric, test_metric, seconds_since(t0), m.store,
                        c.patience)) {
      break;
    }
  }
  tracker.finish(m.store);
  write_run_outputs(out_dir, c, tracker.record, m.store);
  return {tracker.record, c};
}

// ---------------------------------------------------------------------------
// Graph classification over a corpus (TU files or text graphs).
// ---------------------------------------------------------------------------

struct GraphProvider {
  std::function<Graph(std::size_t)> get;
  std::vector<std::int32_t> labels;
  std::size_t count = 0;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
  std::vector<std::size_t> train_idx, val_idx, test_idx;
};

GraphProvider load_graph_provider(const RunConfig& c) {
  GraphProvider p;
  const std::string format = c.dataset_format.empty()
                                 ? (c.task == TaskType::TextGraph ? "text" : "tu")
                                 : c.dataset_format;
  if (format == "tu") {
    auto corpus = std::make_shared<GraphCorpus>(load_graph_corpus(c.dataset));
    p.count = corpus->graphs.size();
    p.num_classes = corpus->num_classes;
    p.feature_dim = corpus->feature_dim;
    for (const Graph& g : corpus->graphs) p.labels.push_back(g.graph_label);
    p.get = [corpus](std::size_t i) { return corpus->graphs[i]; };
    // Seeded corpus split.
    std::vector<std::size_t> order(p.count);
    for (std::size_t i = 0; i < p.count; ++i) order[i] = i;
    std::mt19937_64 rng(c.seed);
    shuffle(order, rng);
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(c.resolved_val_fraction() * p.count)));
    const auto n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(c.resolved_test_fraction() * p.count)));
    if (n_val + n_test >= p.count) {
      throw std::invalid_argument("graph task: corpus too small for the requested fractions");
    }
    p.val_idx.assign(order.begin(), order.begin() + n_val);
    p.test_idx.assign(order.begin() + n_val, order.begin() + n_val + n_test);
    p.train_idx.assign(order.begin() + n_val + n_test, order.end());
  } else if (format == "text") {
    auto docs = std::make_shared<std::vector<TextDocument>>(load_text_corpus(c.dataset));
    std::vector<std::vector<std::string>> token_lists;
    for (const TextDocument& d : *docs) token_lists.push_back(d.tokens);
    auto vocab = std::make_shared<Vocabulary>(build_vocabulary(token_lists));
    std::map<std::string, std::int32_t> label_ids;
    for (const TextDocument& d : *docs) label_ids.emplace(d.label, 0);
    {
      std::int32_t next = 0;
      for (auto& [name, id] : label_ids) id = next++;
    }
    p.count = docs->size();
    p.num_classes = label_ids.size();
    p.feature_dim = vocab->size();
    for (const TextDocument& d : *docs) p.labels.push_back(label_ids.at(d.label));
    TextGraphConfig tcfg;
    tcfg.window = c.window;
    tcfg.mode = c.text_mode == "merge" ? OccurrenceMode::MergeSameWord
                                       : OccurrenceMode::DistinctPerOccurrence;
    tcfg.truncate = c.truncate;
    tcfg.validate();
    p.get = [docs, vocab, tcfg, labels = p.labels](std::size_t i) {
      Graph g = text_to_graph((*docs)[i].tokens, tcfg, *vocab);
      g.graph_label = labels[i];
      return g;
    };
    // Original training data splits 90/10 into train/val; test stays test.
    std::vector<std::size_t> train_pool;
    for (std::size_t i = 0; i < docs->size(); ++i) {
      if ((*docs)[i].split == "train") train_pool.push_back(i);
      else p.test_idx.push_back(i);
    }
    if (train_pool.size() < 2) {
      throw std::invalid_argument("text task: need at least two training documents");
    }
    std::mt19937_64 rng(c.seed);
    shuffle(train_pool, rng);
    const auto n_val = std::max<std::size_t>(1, train_pool.size() / 10);
    p.val_idx.assign(train_pool.begin(), train_pool.begin() + n_val);
    p.train_idx.assign(train_pool.begin() + n_val, train_pool.end());
  } else {
    throw std::invalid_argument("graph task: unsupported dataset_format " + format);
  }
  for (std::size_t i = 0; i < p.count; ++i) {
    if (p.labels[i] < 0 || static_cast<std::size_t>(p.labels[i]) >= p.num_classes) {
      throw std::invalid_argument("graph task: graph " + std::to_string(i) +
                                  " has no usable label");
    }
  }
  return p;
}

struct GraphModel {
  ParamStore store;
  std::unique_ptr<StarEncoder> encoder;
  GraphHead head;
};

GraphModel build_graph_model(const RunConfig& c, std::size_t input_dim, std::size_t classes) {
  if (!c.use_star) {
    throw std::invalid_argument("graph task: the graph head reads the star; use_star=false "
                                "is only available for node and link tasks");
  }
  GraphModel m;
  std::mt19937_64 init_rng(c.seed);
  EncoderConfig ecfg = encoder_config_of(c, input_dim);
  m.encoder = std::make_unique<StarEncoder>(ecfg, m.store, init_rng);
  m.head = make_graph_head(m.store, ecfg.output_width(), classes, init_rng);
  return m;
}

struct PreparedBatch {
  BatchedGraph batch;
  SparseMatrix sparse;
  bool use_sparse = false;
  std::vector<std::int32_t> labels;
};

PreparedBatch prepare_batch(const GraphProvider& p, const std::vector<std::size_t>& indices,
                            bool want_sparse) {
  std::vector<Graph> graphs;
  graphs.reserve(indices.size());
  PreparedBatch out;
  for (std::size_t idx : indices) {
    graphs.push_back(p.get(idx));
    out.labels.push_back(p.labels[idx]);
  }
  out.batch = batch_graphs(graphs);
  if (want_sparse) {
    out.sparse = SparseMatrix::from_dense(out.batch.merged.features);
    out.use_sparse = out.sparse.density() < kSparseDensityCutoff;
  }
  return out;
}

EncoderInput batch_input(const PreparedBatch& b) {
  return b.use_sparse ? make_encoder_input(b.batch, b.sparse) : make_encoder_input(b.batch);
}

double evaluate_graphs(const GraphModel& m, const GraphProvider& p,
                       const std::vector<std::size_t>& indices, std::size_t batch_size,
                       bool want_sparse) {
  std::vector<int> predictions, targets;
  for (std::size_t begin = 0; begin < indices.size(); begin += batch_size) {
    const std::size_t end = std::min(indices.size(), begin + batch_size);
    std::vector<std::size_t> chunk(indices.begin() + begin, indices.begin() + end);
    PreparedBatch b = prepare_batch(p, chunk, want_sparse);
    EncoderInput input = batch_input(b);
    Tape tape;
    Binding bind = bind_parameters(tape, m.store, false);
    auto enc = m.encoder->encode(tape, bind, input);
    Var logits = graph_logits(tape, bind, m.head, enc.star);
    for (int v : argmax_rows(tape.value(logits))) predictions.push_back(v);
    for (std::int32_t l : b.labels) targets.push_back(l);
  }
  return accuracy(predictions, targets);
}

MetricsRecord train_graph_classifier(const RunConfig& c, const GraphProvider& p,
                                     GraphModel& m, const std::string& out_dir) {
  if (p.train_idx.empty() || p.val_idx.empty()) {
    throw std::invalid_argument("graph task: train and val sets must be non-empty");
  }
  std::vector<AdamState> adam = make_adam_states(m.store, c);
  std::mt19937_64 train_rng(c.seed ^ kTrainRngSalt);
  StopTracker tracker;
  tracker.record.metric = MetricKind::Accuracy;

  std::vector<std::size_t> order = p.train_idx;
  for (std::size_t epoch = 1; epoch <= c.max_epochs; ++epoch) {
    const auto t0 = Clock::now();
    shuffle(order, train_rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    bool bad = false;
    for (std::size_t begin = 0; begin < order.size() && !bad; begin += c.batch_size) {
      const std::size_t end = std::min(order.size(), begin + c.batch_size);
      std::vector<std::size_t> chunk(order.begin() + begin, order.begin() + end);
      PreparedBatch b = prepare_batch(p, chunk, c.sparse_features);
      EncoderInput input = batch_input(b);
      Tape tape;
      Binding bind = bind_parameters(tape, m.store, true);
      ForwardOptions fo{.training = true, .rng = &train_rng};
      auto enc = m.encoder->encode(tape, bind, input, fo);
      Var loss = graph_class_loss(tape, bind, m.head, enc.star, b.labels);
      const double loss_value = tape.value(loss).scalar();
      if (!std::isfinite(loss_value)) {
        bad = true;
        break;
      }
      loss_sum += loss_value * static_cast<double>(chunk.size());
      seen += chunk.size();
      tape.backward(loss);
      try {
        apply_gradients(m.store, tape, bind, adam);
      } catch (const std::runtime_error&) {
        bad = true;
      }
    }
    if (bad) {
      tracker.record.diverged = true;
      break;
    }
    const double train_loss = loss_sum / static_cast<double>(seen);
    const double val = evaluate_graphs(m, p, p.val_idx, c.batch_size, c.sparse_features);
    double test = std::numeric_limits<double>::quiet_NaN();
    if (!p.test_idx.empty()) {
      test = evaluate_graphs(m, p, p.test_idx, c.batch_size, c.sparse_features);
    }
    if (tracker.observe(epoch, train_loss, val, test, seconds_since(t0), m.store, c.patience)) {
      break;
    }
  }
  tracker.finish(m.store);
  write_run_outputs(out_dir, c, tracker.record, m.store);
  return tracker.record;
}

TrainResult train_graph_task(const RunConfig& c, const std::string& out_dir) {
  GraphProvider p = load_graph_provider(c);
  GraphModel m = build_graph_model(c, p.feature_dim, p.num_classes);
  MetricsRecord record = train_graph_classifier(c, p, m, out_dir);
  return {record, c};
}

}  // namespace

void write_metrics_csv(const std::string& path, const MetricsRecord& record) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "epoch,train_loss,val_metric,test_metric_at_best,seconds\n";
  os.precision(10);
  for (const EpochRow& r : record.rows) {
    os << r.epoch << ',' << r.train_loss << ',' << r.val_metric << ',';
    if (std::isfinite(r.test_metric_at_best)) os << r.test_metric_at_best;
    os << ',' << r.seconds << "\n";
  }
}

TrainResult run_training(const RunConfig& config) {
  config.validate();
  switch (config.task) {
    case TaskType::Node: {
      NodeTaskData data = load_node_data(config);
      return train_node(config, data, config.out_dir);
    }
    case TaskType::Link: return train_link(config, config.out_dir);
    case TaskType::Graph:
    case TaskType::TextGraph: return train_graph_task(config, config.out_dir);
  }
  throw std::invalid_argument("run_training: unknown task");
}

CvResult run_cv(const RunConfig& config) {
  config.validate();
  if (config.task != TaskType::Graph && config.task != TaskType::TextGraph) {
    throw std::invalid_argument("run_cv: cross-validation applies to graph classification");
  }
  GraphProvider p = load_graph_provider(config);
  KFoldSplit folds = kfold_split(p.count, config.cv_folds, config.seed);

  CvResult result;
  std::vector<double> fold_tests;
  for (std::size_t f = 0; f < folds.num_folds(); ++f) {
    GraphProvider fold_p = p;
    fold_p.test_idx = folds.test[f];
    // Carve an inner validation split from the fold's training portion; the
    // test fold never drives checkpoint selection.
    std::vector<std::size_t> pool = folds.train[f];
    std::mt19937_64 rng(config.seed + 1000003 * (f + 1));
    shuffle(pool, rng);
    const auto n_val = std::max<std::size_t>(1, pool.size() / 10);
    fold_p.val_idx.assign(pool.begin(), pool.begin() + n_val);
    fold_p.train_idx.assign(pool.begin() + n_val, pool.end());

    RunConfig fold_cfg = config;
    fold_cfg.seed = config.seed + f;
    GraphModel m = build_graph_model(fold_cfg, p.feature_dim, p.num_classes);
    const std::string fold_dir =
        config.out_dir.empty() ? "" : config.out_dir + "/fold_" + std::to_string(f);
    MetricsRecord record = train_graph_classifier(fold_cfg, fold_p, m, fold_dir);
    fold_tests.push_back(record.test_at_best);
    result.folds.push_back(std::move(record));
  }
  result.metric = MetricKind::Accuracy;
  double sum = 0.0;
  for (double v : fold_tests) sum += v;
  result.mean_test = sum / static_cast<double>(fold_tests.size());
  double sq = 0.0;
  for (double v : fold_tests) sq += (v - result.mean_test) * (v - result.mean_test);
  result.stddev_test = std::sqrt(sq / static_cast<double>(fold_tests.size() - 1));
  result.stderr_test = result.stddev_test / std::sqrt(static_cast<double>(fold_tests.size()));

  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    json j;
    j["version"] = kVersion;
    j["task"] = to_string(config.task);
    j["metric"] = to_string(result.metric);
    j["folds"] = json::array();
    for (const MetricsRecord& r : result.folds) j["folds"].push_back(record_to_json(r));
    j["mean_test"] = result.mean_test;
    j["stddev_test"] = result.stddev_test;   // sample standard deviation
    j["stderr_test"] = result.stderr_test;   // standard error of the mean
    j["config"] = json::parse(config_to_json_text(config));
    std::ofstream os(config.out_dir + "/cv_summary.json");
    os << j.dump(2) << "\n";
  }
  return result;
}

std::vector<SweepRow> run_size_sweep(const RunConfig& config,
                                     const std::vector<double>& fractions) {
  config.validate();
  if (config.task == TaskType::Link) {
    throw std::invalid_argument("run_size_sweep: applies to node and graph tasks");
  }
  if (fractions.empty()) throw std::invalid_argument("run_size_sweep: no fractions");

  std::vector<SweepRow> rows;
  for (double fraction : fractions) {
    if (fraction <= 0.0 || fraction > 1.0) {
      throw std::invalid_argument("run_size_sweep: fractions must be in (0, 1]");
    }
    RunConfig cfg = config;
    cfg.out_dir.clear();
    SweepRow row;
    row.fraction = fraction;
    if (config.task == TaskType::Node) {
      NodeTaskData data = load_node_data(cfg);
      if (fraction < 1.0) {
        // Removed training nodes join the evaluation pools, half to val and
        // half to test.
        std::vector<std::uint32_t> pool = data.graph.train_mask;
        std::mt19937_64 rng(cfg.seed ^ 0xABCDEF12345ULL);
        shuffle(pool, rng);
        const auto keep = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(pool.size())));
        if (keep == 0) throw std::invalid_argument("run_size_sweep: no training items remain");
        std::vector<std::uint32_t> kept(pool.begin(), pool.begin() + keep);
        std::vector<std::uint32_t> moved(pool.begin() + keep, pool.end());
        std::vector<std::uint32_t> to_val(moved.begin(), moved.begin() + moved.size() / 2);
        std::vector<std::uint32_t> to_test(moved.begin() + moved.size() / 2, moved.end());
        auto extend_sorted = [](std::vector<std::uint32_t>& dst,
                                const std::vector<std::uint32_t>& extra) {
          dst.insert(dst.end(), extra.begin(), extra.end());
          std::sort(dst.begin(), dst.end());
        };
        std::sort(kept.begin(), kept.end());
        data.graph.train_mask = kept;
        extend_sorted(data.graph.val_mask, to_val);
        extend_sorted(data.graph.test_mask, to_test);
      }
      TrainResult r = train_node(cfg, data, "");
      row.test_metric = r.record.test_at_best;
      row.val_metric = r.record.best_val;
    } else {
      GraphProvider p = load_graph_provider(cfg);
      if (fraction < 1.0) {
        std::vector<std::size_t> pool = p.train_idx;
        std::mt19937_64 rng(cfg.seed ^ 0xABCDEF12345ULL);
        shuffle(pool, rng);
        const auto keep = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(pool.size())));
        if (keep == 0) throw std::invalid_argument("run_size_sweep: no training items remain");
        std::vector<std::size_t> moved(pool.begin() + keep, pool.end());
        p.train_idx.assign(pool.begin(), pool.begin() + keep);
        p.val_idx.insert(p.val_idx.end(), moved.begin(), moved.begin() + moved.size() / 2);
        p.test_idx.insert(p.test_idx.end(), moved.begin() + moved.size() / 2, moved.end());
      }
      GraphModel m = build_graph_model(cfg, p.feature_dim, p.num_classes);
      MetricsRecord record = train_graph_classifier(cfg, p, m, "");
      row.test_metric = record.test_at_best;
      row.val_metric = record.best_val;
    }
    rows.push_back(row);
  }

  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    std::ofstream os(config.out_dir + "/sweep.csv");
    os << "fraction,test_metric,val_metric\n";
    os.precision(10);
    for (const SweepRow& r : rows) {
      os << r.fraction << ',' << r.test_metric << ',' << r.val_metric << "\n";
    }
  }
  return rows;
}

EvalResult run_eval(const RunConfig& config, const std::string& checkpoint_path) {
  config.validate();
  EvalResult result;
  switch (config.task) {
    case TaskType::Node: {
      NodeTaskData data = load_node_data(config);
      NodeModel m = build_node_model(config, data.graph.feature_dim(), data.num_classes,
                                     data.multi_label);
      load_checkpoint(checkpoint_path, m.store);
      SparseMatrix sparse;
      bool use_sparse = false;
      if (config.sparse_features) {
        sparse = SparseMatrix::from_dense(data.graph.features);
        use_sparse = sparse.density() < kSparseDensityCutoff;
      }
      EncoderInput input = use_sparse ? make_encoder_input(data.graph, sparse)
                                      : make_encoder_input(data.graph);
      NodeEvalScores scores = evaluate_node(m, input, data);
      result.metric = data.multi_label ? MetricKind::MicroF1 : MetricKind::Accuracy;
      result.test_metric = scores.test;
      return result;
    }
    case TaskType::Link: {
      CitationDataset ds = load_citation_dataset(config.dataset);
      LinkSplit split = split_link_edges(ds.graph, config.resolved_val_fraction(),
                                         config.resolved_test_fraction(), config.seed);
      LinkModel m = build_link_model(config, split.train_graph.feature_dim());
      load_checkpoint(checkpoint_path, m.store);
      SparseMatrix sparse;
      bool use_sparse = false;
      if (config.sparse_features) {
        sparse = SparseMatrix::from_dense(split.train_graph.features);
        use_sparse = sparse.density() < kSparseDensityCutoff;
      }
      EncoderInput input = use_sparse ? make_encoder_input(split.train_graph, sparse)
                                      : make_encoder_input(split.train_graph);
      Tape tape;
      Binding bind = bind_parameters(tape, m.store, false);
      auto enc = m.encoder->encode(tape, bind, input);
      result.metric = MetricKind::AucApMean;
      result.test_metric =
          ranking_metric(m, tape.value(enc.nodes), split.test_pos, split.test_neg);
      return result;
    }
    case TaskType::Graph:
    case TaskType::TextGraph: {
      GraphProvider p = load_graph_provider(config);
      GraphModel m = build_graph_model(config, p.feature_dim, p.num_classes);
      load_checkpoint(checkpoint_path, m.store);
      result.metric = MetricKind::Accuracy;
      result.test_metric =
          evaluate_graphs(m, p, p.test_idx, config.batch_size, config.sparse_features);
      return result;
    }
  }
  throw std::invalid_argument("run_eval: unknown task");
}

std::string dataset_summary(const RunConfig& config) {
  config.validate();
  json j;
  j["task"] = to_string(config.task);
  j["dataset"] = config.dataset;
  switch (config.task) {
    case TaskType::Node: {
      NodeTaskData data = load_node_data(config);
      j["nodes"] = data.graph.num_nodes;
      j["edges"] = data.graph.edges.size();
      j["feature_dim"] = data.graph.feature_dim();
      j["classes"] = data.num_classes;
      j["multi_label"] = data.multi_label;
      j["train_nodes"] = data.graph.train_mask.size();
      j["val_nodes"] = data.graph.val_mask.size();
      j["test_nodes"] = data.graph.test_mask.size();
      break;
    }
    case TaskType::Link: {
      CitationDataset ds = load_citation_dataset(config.dataset);
      LinkSplit split = split_link_edges(ds.graph, config.resolved_val_fraction(),
                                         config.resolved_test_fraction(), config.seed);
      j["nodes"] = ds.graph.num_nodes;
      j["edges"] = ds.graph.edges.size();
      j["feature_dim"] = ds.graph.feature_dim();
      j["train_pos"] = split.train_pos.size();
      j["val_pos"] = split.val_pos.size();
      j["test_pos"] = split.test_pos.size();
      break;
    }
    case TaskType::Graph:
    case TaskType::TextGraph: {
      GraphProvider p = load_graph_provider(config);
      j["graphs"] = p.count;
      j["classes"] = p.num_classes;
      j["feature_dim"] = p.feature_dim;
      j["train_graphs"] = p.train_idx.size();
      j["val_graphs"] = p.val_idx.size();
      j["test_graphs"] = p.test_idx.size();
      break;
    }
  }
  return j.dump(2);
}

}  // namespace graphstar
