#include "graphstar/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace graphstar {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void parse_fail(const std::string& file, std::size_t line, const std::string& why) {
  throw std::runtime_error(file + ":" + std::to_string(line) + ": " + why);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    // trim surrounding blanks
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

double parse_double(const std::string& s, const std::string& file, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    parse_fail(file, line, "expected a number, got '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& file, std::size_t line) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    parse_fail(file, line, "expected an integer, got '" + s + "'");
  }
}

std::ifstream open_or_fail(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return is;
}

void row_normalize(Tensor& features) {
  for (std::size_t i = 0; i < features.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < features.cols(); ++c) sum += features.at(i, c);
    if (sum != 0.0) {
      for (std::size_t c = 0; c < features.cols(); ++c) features.at(i, c) /= sum;
    }
  }
}

}  // namespace

CitationDataset load_citation_dataset(const std::string& dir) {
  const std::string features_path = dir + "/features.csv";
  const std::string labels_path = dir + "/labels.csv";
  const std::string edges_path = dir + "/edges.csv";
  const std::string splits_path = dir + "/splits.json";

  // features.csv establishes node order.
  std::unordered_map<std::string, std::uint32_t> node_index;
  std::vector<std::vector<double>> rows;
  {
    auto is = open_or_fail(features_path);
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto fields = split_csv(line);
      if (fields.size() < 2) parse_fail(features_path, lineno, "need node_id plus features");
      if (width == 0) width = fields.size() - 1;
      if (fields.size() - 1 != width) {
        parse_fail(features_path, lineno, "expected " + std::to_string(width) + " features");
      }
      if (!node_index.emplace(fields[0], static_cast<std::uint32_t>(rows.size())).second) {
        parse_fail(features_path, lineno, "duplicate node id " + fields[0]);
      }
      std::vector<double> row(width);
      for (std::size_t c = 0; c < width; ++c) {
        row[c] = parse_double(fields[c + 1], features_path, lineno);
      }
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(features_path + ": no nodes");
  }
  const std::size_t n = rows.size();
  const std::size_t d = rows[0].size();
  Tensor features(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(rows[i].begin(), rows[i].end(), features.row(i));
  }
  row_normalize(features);

  auto lookup = [&](const std::string& id, const std::string& file, std::size_t lineno) {
    auto it = node_index.find(id);
    if (it == node_index.end()) parse_fail(file, lineno, "unknown node id " + id);
    return it->second;
  };

  // labels.csv: single class per node, or space-separated ids (multi-label).
  std::vector<std::string> raw_labels(n);
  std::vector<bool> labeled(n, false);
  bool multi_label = false;
  {
    auto is = open_or_fail(labels_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto fields = split_csv(line);
      if (fields.size() != 2) parse_fail(labels_path, lineno, "expected node_id,label");
      const std::uint32_t idx = lookup(fields[0], labels_path, lineno);
      if (labeled[idx]) parse_fail(labels_path, lineno, "duplicate label for " + fields[0]);
      labeled[idx] = true;
      raw_labels[idx] = fields[1];
      if (fields[1].find(' ') != std::string::npos) multi_label = true;
    }
  }

  CitationDataset out;
  if (multi_label) {
    std::size_t num_classes = 0;
    std::vector<std::vector<long>> per_node(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!labeled[i]) continue;
      std::istringstream ls(raw_labels[i]);
      std::string tok;
      while (ls >> tok) {
        const long c = parse_long(tok, labels_path, 0);
        if (c < 0) throw std::runtime_error(labels_path + ": negative class id");
        per_node[i].push_back(c);
        num_classes = std::max(num_classes, static_cast<std::size_t>(c) + 1);
      }
    }
    out.graph.node_label_matrix = Tensor(n, num_classes);
    for (std::size_t i = 0; i < n; ++i) {
      for (long c : per_node[i]) out.graph.node_label_matrix.at(i, c) = 1.0;
    }
    out.num_classes = num_classes;
  } else {
    // Map class names to ids in sorted order for determinism.
    std::set<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
      if (labeled[i]) names.insert(raw_labels[i]);
    }
    std::map<std::string, std::int32_t> class_of;
    for (const std::string& name : names) {
      class_of[name] = static_cast<std::int32_t>(out.class_names.size());
      out.class_names.push_back(name);
    }
    out.num_classes = out.class_names.size();
    out.graph.node_labels.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      if (labeled[i]) out.graph.node_labels[i] = class_of[raw_labels[i]];
    }
  }

  std::vector<EdgeTriple> edges;
  {
    auto is = open_or_fail(edges_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto fields = split_csv(line);
      if (fields.size() != 2) parse_fail(edges_path, lineno, "expected src,dst");
      edges.push_back({lookup(fields[0], edges_path, lineno),
                       lookup(fields[1], edges_path, lineno), 0});
    }
  }

  Graph built = build_graph(std::move(features), std::move(edges), 1, {.symmetrize = true});
  built.node_labels = std::move(out.graph.node_labels);
  built.node_label_matrix = std::move(out.graph.node_label_matrix);
  out.graph = std::move(built);

  {
    auto is = open_or_fail(splits_path);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(splits_path + ": " + e.what());
    }
    auto read_mask = [&](const char* key) {
      std::vector<std::uint32_t> mask;
      if (!j.contains(key)) return mask;
      for (const auto& v : j.at(key)) {
        const std::string id = v.is_string() ? v.get<std::string>() : std::to_string(v.get<long>());
        mask.push_back(lookup(id, splits_path, 0));
      }
      std::sort(mask.begin(), mask.end());
      return mask;
    };
    out.graph.train_mask = read_mask("train");
    out.graph.val_mask = read_mask("val");
    out.graph.test_mask = read_mask("test");
  }
  check_labels_and_masks(out.graph);
  return out;
}

GraphCorpus load_graph_corpus(const std::string& dir) {
  std::string prefix;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 6 && name.ends_with("_A.txt")) {
      prefix = name.substr(0, name.size() - 6);
      break;
    }
  }
  if (prefix.empty()) throw std::runtime_error(dir + ": no <name>_A.txt file found");
  const std::string base = dir + "/" + prefix;

  // graph_indicator: 1-based graph id per node, contiguous coverage.
  std::vector<std::size_t> graph_of_node;
  std::size_t num_graphs = 0;
  {
    auto is = open_or_fail(base + "_graph_indicator.txt");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      const long g = parse_long(split_csv(line)[0], base + "_graph_indicator.txt", lineno);
      if (g < 1) parse_fail(base + "_graph_indicator.txt", lineno, "graph ids are 1-based");
      graph_of_node.push_back(static_cast<std::size_t>(g - 1));
      num_graphs = std::max(num_graphs, static_cast<std::size_t>(g));
    }
  }
  const std::size_t total_nodes = graph_of_node.size();
  if (total_nodes == 0) throw std::runtime_error(base + "_graph_indicator.txt: empty");
  {
    std::vector<bool> seen(num_graphs, false);
    for (std::size_t g : graph_of_node) seen[g] = true;
    for (std::size_t g = 0; g < num_graphs; ++g) {
      if (!seen[g]) {
        throw std::runtime_error(base + "_graph_indicator.txt: graph " + std::to_string(g + 1) +
                                 " has no nodes (indicator gap)");
      }
    }
  }

  std::vector<std::int32_t> graph_labels_raw;
  {
    auto is = open_or_fail(base + "_graph_labels.txt");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      graph_labels_raw.push_back(
          static_cast<std::int32_t>(parse_long(split_csv(line)[0], base + "_graph_labels.txt",
                                               lineno)));
    }
    if (graph_labels_raw.size() != num_graphs) {
      throw std::runtime_error(base + "_graph_labels.txt: " +
                               std::to_string(graph_labels_raw.size()) + " labels for " +
                               std::to_string(num_graphs) + " graphs");
    }
  }
  // Remap arbitrary label values onto 0..C-1 in sorted order.
  std::map<std::int32_t, std::int32_t> label_map;
  for (std::int32_t l : graph_labels_raw) label_map.emplace(l, 0);
  {
    std::int32_t next = 0;
    for (auto& [raw, mapped] : label_map) mapped = next++;
  }

  // Optional node labels / attributes decide the feature scheme.
  std::vector<long> node_labels;
  if (fs::exists(base + "_node_labels.txt")) {
    auto is = open_or_fail(base + "_node_labels.txt");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      node_labels.push_back(parse_long(split_csv(line)[0], base + "_node_labels.txt", lineno));
    }
    if (node_labels.size() != total_nodes) {
      throw std::runtime_error(base + "_node_labels.txt: node count mismatch");
    }
  }
  std::vector<std::vector<double>> node_attrs;
  if (fs::exists(base + "_node_attributes.txt")) {
    auto is = open_or_fail(base + "_node_attributes.txt");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto fields = split_csv(line);
      std::vector<double> row;
      for (const auto& f : fields) {
        row.push_back(parse_double(f, base + "_node_attributes.txt", lineno));
      }
      if (!node_attrs.empty() && row.size() != node_attrs.front().size()) {
        parse_fail(base + "_node_attributes.txt", lineno, "ragged attribute row");
      }
      node_attrs.push_back(std::move(row));
    }
    if (node_attrs.size() != total_nodes) {
      throw std::runtime_error(base + "_node_attributes.txt: node count mismatch");
    }
  }

  // Feature scheme: attributes if present, else one-hot node labels, else 1.
  std::size_t feature_dim = 1;
  std::map<long, std::size_t> label_feature_index;
  if (!node_attrs.empty()) {
    feature_dim = node_attrs.front().size();
  } else if (!node_labels.empty()) {
    for (long l : node_labels) label_feature_index.emplace(l, 0);
    std::size_t next = 0;
    for (auto& [raw, idx] : label_feature_index) idx = next++;
    feature_dim = label_feature_index.size();
  }

  // Per-graph node index rebasing.
  std::vector<std::size_t> local_index(total_nodes);
  std::vector<std::size_t> graph_sizes(num_graphs, 0);
  for (std::size_t v = 0; v < total_nodes; ++v) {
    local_index[v] = graph_sizes[graph_of_node[v]]++;
  }

  std::vector<Tensor> features(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) features[g] = Tensor(graph_sizes[g], feature_dim);
  for (std::size_t v = 0; v < total_nodes; ++v) {
    Tensor& f = features[graph_of_node[v]];
    const std::size_t i = local_index[v];
    if (!node_attrs.empty()) {
      std::copy(node_attrs[v].begin(), node_attrs[v].end(), f.row(i));
    } else if (!node_labels.empty()) {
      f.at(i, label_feature_index[node_labels[v]]) = 1.0;
    } else {
      f.at(i, 0) = 1.0;
    }
  }

  std::vector<std::vector<EdgeTriple>> edges(num_graphs);
  {
    auto is = open_or_fail(base + "_A.txt");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto fields = split_csv(line);
      if (fields.size() != 2) parse_fail(base + "_A.txt", lineno, "expected u,v");
      const long u = parse_long(fields[0], base + "_A.txt", lineno);
      const long v = parse_long(fields[1], base + "_A.txt", lineno);
      if (u < 1 || v < 1 || static_cast<std::size_t>(u) > total_nodes ||
          static_cast<std::size_t>(v) > total_nodes) {
        parse_fail(base + "_A.txt", lineno, "node id out of range");
      }
      const std::size_t gu = graph_of_node[u - 1];
      const std::size_t gv = graph_of_node[v - 1];
      if (gu != gv) parse_fail(base + "_A.txt", lineno, "edge crosses graphs");
      edges[gu].push_back({static_cast<std::uint32_t>(local_index[u - 1]),
                           static_cast<std::uint32_t>(local_index[v - 1]), 0});
    }
  }

  GraphCorpus corpus;
  corpus.feature_dim = feature_dim;
  corpus.num_classes = label_map.size();
  corpus.graphs.reserve(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    Graph built = build_graph(std::move(features[g]), std::move(edges[g]), 1,
                              {.symmetrize = true});
    built.graph_label = label_map.at(graph_labels_raw[g]);
    corpus.graphs.push_back(std::move(built));
  }
  return corpus;
}

void TextGraphConfig::validate() const {
  if (window < 2) throw std::invalid_argument("text graph: window must be at least 2");
  if (truncate < window) {
    throw std::invalid_argument("text graph: truncation must be at least the window width");
  }
}

std::uint32_t Vocabulary::require(const std::string& token) const {
  auto it = ids.find(token);
  if (it == ids.end()) throw std::invalid_argument("vocabulary: unknown token '" + token + "'");
  return it->second;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& documents) {
  Vocabulary vocab;
  for (const auto& doc : documents) {
    for (const auto& tok : doc) {
      vocab.ids.emplace(tok, static_cast<std::uint32_t>(vocab.ids.size()));
    }
  }
  return vocab;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : text) {
    if (std::isalnum(ch) || ch == '\'') {
      current.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

Graph text_to_graph(const std::vector<std::string>& tokens, const TextGraphConfig& config,
                    const Vocabulary& vocab, const Tensor* embeddings) {
  config.validate();
  if (tokens.empty()) throw std::invalid_argument("text_to_graph: empty token list");
  if (config.features == TextFeatureMode::EmbeddingTable) {
    if (embeddings == nullptr) {
      throw std::invalid_argument("text_to_graph: embedding mode needs a table");
    }
    if (embeddings->rows() < vocab.size()) {
      throw std::invalid_argument("text_to_graph: embedding table smaller than vocabulary");
    }
  }

  std::vector<std::string> text(tokens.begin(),
                                tokens.begin() +
                                    std::min<std::size_t>(tokens.size(), config.truncate));

  // Node ids per token position.
  std::vector<std::uint32_t> node_of(text.size());
  std::vector<std::uint32_t> word_of_node;
  if (config.mode == OccurrenceMode::DistinctPerOccurrence) {
    for (std::size_t p = 0; p < text.size(); ++p) {
      node_of[p] = static_cast<std::uint32_t>(p);
      word_of_node.push_back(vocab.require(text[p]));
    }
  } else {
    std::unordered_map<std::string, std::uint32_t> node_ids;
    for (std::size_t p = 0; p < text.size(); ++p) {
      auto [it, inserted] = node_ids.emplace(text[p],
                                             static_cast<std::uint32_t>(node_ids.size()));
      node_of[p] = it->second;
      if (inserted) word_of_node.push_back(vocab.require(text[p]));
    }
  }
  const std::size_t n = word_of_node.size();

  // Every pair of distinct nodes co-occurring inside a window gets an edge;
  // texts shorter than the window form one window.
  std::vector<EdgeTriple> edges;
  const std::size_t num_windows = text.size() >= config.window
                                      ? text.size() - config.window + 1
                                      : 1;
  for (std::size_t w = 0; w < num_windows; ++w) {
    const std::size_t end = std::min(w + config.window, text.size());
    for (std::size_t a = w; a < end; ++a) {
      for (std::size_t b = a + 1; b < end; ++b) {
        if (node_of[a] != node_of[b]) edges.push_back({node_of[a], node_of[b], 0});
      }
    }
  }

  const std::size_t dim = config.features == TextFeatureMode::OneHotVocabulary
                              ? vocab.size()
                              : embeddings->cols();
  Tensor features(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (config.features == TextFeatureMode::OneHotVocabulary) {
      features.at(i, word_of_node[i]) = 1.0;
    } else {
      std::copy(embeddings->row(word_of_node[i]), embeddings->row(word_of_node[i]) + dim,
                features.row(i));
    }
  }
  return build_graph(std::move(features), std::move(edges), 1, {.symmetrize = true});
}

std::vector<TextDocument> load_text_corpus(const std::string& path) {
  auto is = open_or_fail(path);
  std::vector<TextDocument> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) parse_fail(path, lineno, "expected split<TAB>label<TAB>text");
    TextDocument doc;
    doc.split = line.substr(0, t1);
    doc.label = line.substr(t1 + 1, t2 - t1 - 1);
    doc.tokens = tokenize(line.substr(t2 + 1));
    if (doc.split != "train" && doc.split != "test") {
      parse_fail(path, lineno, "split must be train or test, got '" + doc.split + "'");
    }
    if (doc.tokens.empty()) parse_fail(path, lineno, "document has no tokens");
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw std::runtime_error(path + ": no documents");
  return docs;
}

Graph build_topic_graph(const Tensor& doc_embeddings, const std::vector<std::int32_t>& topic_ids,
                        const std::vector<std::int32_t>& labels,
                        const std::vector<std::uint32_t>& train_mask,
                        const std::vector<std::uint32_t>& val_mask,
                        const std::vector<std::uint32_t>& test_mask) {
  const std::size_t n = doc_embeddings.rows();
  if (topic_ids.size() != n || labels.size() != n) {
    throw std::invalid_argument("build_topic_graph: one topic id and label per document");
  }
  std::map<std::int32_t, std::vector<std::uint32_t>> by_topic;
  for (std::size_t i = 0; i < n; ++i) {
    by_topic[topic_ids[i]].push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<EdgeTriple> edges;
  for (const auto& [topic, members] : by_topic) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        edges.push_back({members[a], members[b], 0});
      }
    }
  }
  Graph g = build_graph(doc_embeddings, std::move(edges), 1, {.symmetrize = true});
  g.node_labels = labels;
  g.train_mask = train_mask;
  g.val_mask = val_mask;
  g.test_mask = test_mask;
  check_labels_and_masks(g);
  return g;
}

TopicDataset load_topic_dataset(const std::string& dir) {
  auto [table, ids] = load_embedding_table(dir + "/embeddings.bin");
  std::unordered_map<std::string, std::uint32_t> row_of;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    row_of.emplace(ids[i], static_cast<std::uint32_t>(i));
  }

  const std::string docs_path = dir + "/docs.csv";
  auto is = open_or_fail(docs_path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::int32_t> topics(table.rows(), 0), labels(table.rows(), -1);
  std::vector<std::uint32_t> train, val, test;
  std::vector<bool> seen(table.rows(), false);
  std::size_t num_classes = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 4) parse_fail(docs_path, lineno, "expected doc_id,topic_id,label,split");
    auto it = row_of.find(fields[0]);
    if (it == row_of.end()) parse_fail(docs_path, lineno, "doc id not in embedding table");
    const std::uint32_t row = it->second;
    if (seen[row]) parse_fail(docs_path, lineno, "duplicate doc id " + fields[0]);
    seen[row] = true;
    topics[row] = static_cast<std::int32_t>(parse_long(fields[1], docs_path, lineno));
    labels[row] = static_cast<std::int32_t>(parse_long(fields[2], docs_path, lineno));
    if (labels[row] >= 0) {
      num_classes = std::max(num_classes, static_cast<std::size_t>(labels[row]) + 1);
    }
    if (fields[3] == "train") train.push_back(row);
    else if (fields[3] == "val") val.push_back(row);
    else if (fields[3] == "test") test.push_back(row);
    else if (fields[3] != "none") parse_fail(docs_path, lineno, "unknown split " + fields[3]);
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw std::runtime_error(docs_path + ": no row for doc " + ids[i]);
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());
  TopicDataset out;
  out.graph = build_topic_graph(table, topics, labels, train, val, test);
  out.num_classes = num_classes;
  return out;
}

void save_embedding_table(const std::string& path, const Tensor& table,
                          const std::vector<std::string>& ids) {
  if (ids.size() != table.rows()) {
    throw std::invalid_argument("embedding table: one id per row required");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
  };
  put_u32(static_cast<std::uint32_t>(table.rows()));
  put_u32(static_cast<std::uint32_t>(table.cols()));
  for (std::size_t i = 0; i < table.size(); ++i) {
    const float f = static_cast<float>(table.data()[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(bits);
  }
  if (!os) throw std::runtime_error("write failed for " + path);
  std::ofstream sidecar(path + ".ids");
  if (!sidecar) throw std::runtime_error("cannot open " + path + ".ids for writing");
  for (const std::string& id : ids) sidecar << id << "\n";
}

std::pair<Tensor, std::vector<std::string>> load_embedding_table(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  auto get_u32 = [&]() {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error(path + ": truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  };
  const std::uint32_t rows = get_u32();
  const std::uint32_t cols = get_u32();
  Tensor table(rows, cols);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::uint32_t bits = get_u32();
    float f;
    std::memcpy(&f, &bits, 4);
    table.data()[i] = static_cast<double>(f);
  }
  std::ifstream sidecar(path + ".ids");
  if (!sidecar) throw std::runtime_error("cannot open " + path + ".ids");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(sidecar, line)) {
    if (!line.empty()) ids.push_back(line);
  }
  if (ids.size() != rows) {
    throw std::runtime_error(path + ".ids: " + std::to_string(ids.size()) + " ids for " +
                             std::to_string(rows) + " rows");
  }
  return {std::move(table), std::move(ids)};
}

}  // namespace graphstar
