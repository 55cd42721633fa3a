#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "graphstar/ingest.hpp"
#include "graphstar/rng.hpp"

using namespace graphstar;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("/tmp") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  void write(const std::string& file, const std::string& content) const {
    std::ofstream os(path / file);
    os << content;
  }
  std::string str() const { return path.string(); }
};

using Pair = std::pair<std::uint32_t, std::uint32_t>;

std::set<Pair> undirected_pairs(const Graph& g) {
  std::set<Pair> out;
  for (const EdgeTriple& e : g.edges) {
    out.insert({std::min(e.src, e.dst), std::max(e.src, e.dst)});
  }
  return out;
}

/// Independent re-derivation of the sliding-window co-occurrence edge set.
std::set<Pair> window_pair_oracle(const std::vector<std::string>& tokens,
                                  const TextGraphConfig& cfg) {
  std::vector<std::string> text(tokens.begin(),
                                tokens.begin() +
                                    std::min<std::size_t>(tokens.size(), cfg.truncate));
  std::vector<std::uint32_t> node_of(text.size());
  if (cfg.mode == OccurrenceMode::DistinctPerOccurrence) {
    for (std::size_t p = 0; p < text.size(); ++p) node_of[p] = static_cast<std::uint32_t>(p);
  } else {
    std::map<std::string, std::uint32_t> first;
    for (std::size_t p = 0; p < text.size(); ++p) {
      auto [it, unused] = first.emplace(text[p], static_cast<std::uint32_t>(first.size()));
      node_of[p] = it->second;
    }
  }
  std::set<Pair> pairs;
  const std::size_t windows = text.size() >= cfg.window ? text.size() - cfg.window + 1 : 1;
  for (std::size_t w = 0; w < windows; ++w) {
    for (std::size_t a = w; a < std::min(w + cfg.window, text.size()); ++a) {
      for (std::size_t b = a + 1; b < std::min(w + cfg.window, text.size()); ++b) {
        if (node_of[a] != node_of[b]) {
          pairs.insert({std::min(node_of[a], node_of[b]), std::max(node_of[a], node_of[b])});
        }
      }
    }
  }
  return pairs;
}

}  // namespace

TEST_CASE("citation loader builds a symmetrized normalized graph") {
  TempDir dir("gs_citation_fixture");
  dir.write("features.csv", "n0,2,2\nn1,1,0\n");
  dir.write("labels.csv", "n0,ai\nn1,db\n");
  dir.write("edges.csv", "n0,n1\n");
  dir.write("splits.json", R"({"train": ["n0"], "val": [], "test": ["n1"]})");
  CitationDataset ds = load_citation_dataset(dir.str());
  CHECK(ds.graph.num_nodes == 2);
  CHECK(ds.num_classes == 2);
  CHECK(ds.class_names == std::vector<std::string>{"ai", "db"});
  CHECK(ds.graph.edges == std::vector<EdgeTriple>{{0, 1, 0}, {1, 0, 0}});
  CHECK(ds.graph.features.at(0, 0) == doctest::Approx(0.5));  // row-normalized
  CHECK(ds.graph.features.at(1, 0) == doctest::Approx(1.0));
  CHECK(ds.graph.train_mask == std::vector<std::uint32_t>{0});
  CHECK(ds.graph.test_mask == std::vector<std::uint32_t>{1});
  CHECK(ds.graph.node_labels == std::vector<std::int32_t>{0, 1});
}

TEST_CASE("all-zero feature rows stay zero under normalization") {
  TempDir dir("gs_citation_zero");
  dir.write("features.csv", "a,0,0\nb,3,1\n");
  dir.write("labels.csv", "a,0\nb,1\n");
  dir.write("edges.csv", "a,b\n");
  dir.write("splits.json", R"({"train": ["a"]})");
  CitationDataset ds = load_citation_dataset(dir.str());
  CHECK(ds.graph.features.at(0, 0) == 0.0);
  CHECK(ds.graph.features.at(0, 1) == 0.0);
  CHECK(ds.graph.features.at(1, 0) == doctest::Approx(0.75));
}

TEST_CASE("citation loader reports the offending line") {
  TempDir dir("gs_citation_bad");
  dir.write("features.csv", "a,1,1\nb,oops,1\n");
  dir.write("labels.csv", "a,0\n");
  dir.write("edges.csv", "");
  dir.write("splits.json", "{}");
  try {
    load_citation_dataset(dir.str());
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("features.csv:2") != std::string::npos);
  }
}

TEST_CASE("citation loader is pure") {
  TempDir dir("gs_citation_pure");
  dir.write("features.csv", "a,1,2\nb,0,1\nc,1,1\n");
  dir.write("labels.csv", "a,x\nb,y\nc,x\n");
  dir.write("edges.csv", "a,b\nb,c\n");
  dir.write("splits.json", R"({"train": ["a","b"], "test": ["c"]})");
  CitationDataset d1 = load_citation_dataset(dir.str());
  CitationDataset d2 = load_citation_dataset(dir.str());
  CHECK(d1.graph == d2.graph);
}

TEST_CASE("multi-label citation labels fill the label matrix") {
  TempDir dir("gs_citation_multi");
  dir.write("features.csv", "a,1,0\nb,0,1\n");
  dir.write("labels.csv", "a,0 2\nb,1\n");
  dir.write("edges.csv", "a,b\n");
  dir.write("splits.json", R"({"train": ["a"], "test": ["b"]})");
  CitationDataset ds = load_citation_dataset(dir.str());
  CHECK(ds.num_classes == 3);
  CHECK(ds.graph.node_label_matrix.at(0, 0) == 1.0);
  CHECK(ds.graph.node_label_matrix.at(0, 2) == 1.0);
  CHECK(ds.graph.node_label_matrix.at(0, 1) == 0.0);
  CHECK(ds.graph.node_label_matrix.at(1, 1) == 1.0);
}

TEST_CASE("graph corpus loads TU-style fixtures") {
  TempDir dir("gs_tu_fixture");
  dir.write("demo_A.txt", "1, 2\n2, 1\n3, 4\n4, 3\n");
  dir.write("demo_graph_indicator.txt", "1\n1\n2\n2\n");
  dir.write("demo_graph_labels.txt", "1\n-1\n");
  dir.write("demo_node_labels.txt", "0\n1\n1\n0\n");
  GraphCorpus corpus = load_graph_corpus(dir.str());
  REQUIRE(corpus.graphs.size() == 2);
  CHECK(corpus.num_classes == 2);
  CHECK(corpus.feature_dim == 2);  // one-hot over node labels {0, 1}
  CHECK(corpus.graphs[0].num_nodes == 2);
  CHECK(corpus.graphs[0].graph_label == 1);  // raw 1 maps after raw -1
  CHECK(corpus.graphs[1].graph_label == 0);
  CHECK(corpus.graphs[0].features.at(0, 0) == 1.0);
  CHECK(corpus.graphs[0].features.at(1, 1) == 1.0);
  CHECK(corpus.graphs[0].edges == std::vector<EdgeTriple>{{0, 1, 0}, {1, 0, 0}});
}

TEST_CASE("single node graphs without edges are legal corpus members") {
  TempDir dir("gs_tu_single");
  dir.write("demo_A.txt", "2, 3\n3, 2\n");
  dir.write("demo_graph_indicator.txt", "1\n2\n2\n");
  dir.write("demo_graph_labels.txt", "1\n2\n");
  GraphCorpus corpus = load_graph_corpus(dir.str());
  REQUIRE(corpus.graphs.size() == 2);
  CHECK(corpus.graphs[0].num_nodes == 1);
  CHECK(corpus.graphs[0].edges.empty());
  CHECK(corpus.feature_dim == 1);  // constant feature fallback
  CHECK(corpus.graphs[0].features.at(0, 0) == 1.0);
}

TEST_CASE("indicator gaps are rejected") {
  TempDir dir("gs_tu_gap");
  dir.write("demo_A.txt", "1, 2\n");
  dir.write("demo_graph_indicator.txt", "1\n3\n");  // graph 2 missing
  dir.write("demo_graph_labels.txt", "1\n2\n3\n");
  CHECK_THROWS_AS(load_graph_corpus(dir.str()), std::runtime_error);
}

TEST_CASE("text_to_graph distinct mode keeps repeated words apart") {
  TextGraphConfig cfg;
  cfg.window = 2;
  Vocabulary vocab = build_vocabulary({{"a", "b"}});
  Graph g = text_to_graph({"a", "b", "a"}, cfg, vocab);
  CHECK(g.num_nodes == 3);
  CHECK(undirected_pairs(g) == std::set<Pair>{{0, 1}, {1, 2}});
  // Repeated words share the same one-hot feature row.
  CHECK(g.features.at(0, 0) == 1.0);
  CHECK(g.features.at(2, 0) == 1.0);
  CHECK(g.features.at(1, 1) == 1.0);
}

TEST_CASE("text_to_graph merge mode dedupes windows") {
  TextGraphConfig cfg;
  cfg.window = 2;
  cfg.mode = OccurrenceMode::MergeSameWord;
  Vocabulary vocab = build_vocabulary({{"a", "b"}});
  Graph g = text_to_graph({"a", "b", "a"}, cfg, vocab);
  CHECK(g.num_nodes == 2);
  CHECK(undirected_pairs(g) == std::set<Pair>{{0, 1}});
}

TEST_CASE("text_to_graph window three enumerates pairwise unions") {
  TextGraphConfig cfg;
  cfg.window = 3;
  Vocabulary vocab = build_vocabulary({{"a", "b", "c", "d"}});
  Graph g = text_to_graph({"a", "b", "c", "d"}, cfg, vocab);
  CHECK(undirected_pairs(g) == std::set<Pair>{{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}});
}

TEST_CASE("text_to_graph rejects an empty token list and bad configs") {
  TextGraphConfig cfg;
  Vocabulary vocab;
  CHECK_THROWS_AS(text_to_graph({}, cfg, vocab), std::invalid_argument);
  TextGraphConfig narrow;
  narrow.window = 1;
  CHECK_THROWS_AS(text_to_graph({"a"}, narrow, vocab), std::invalid_argument);
  TextGraphConfig short_trunc;
  short_trunc.truncate = 2;
  short_trunc.window = 4;
  CHECK_THROWS_AS(text_to_graph({"a"}, short_trunc, vocab), std::invalid_argument);
}

TEST_CASE("text_to_graph matches the window-pair oracle on random sequences") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f", "g"};
  for (int trial = 0; trial < 60; ++trial) {
    TextGraphConfig cfg;
    cfg.window = 2 + uniform_index(rng, 4);
    cfg.mode = trial % 2 == 0 ? OccurrenceMode::DistinctPerOccurrence
                              : OccurrenceMode::MergeSameWord;
    cfg.truncate = std::max<std::size_t>(cfg.window, 5 + uniform_index(rng, 45));
    const std::size_t len = 1 + uniform_index(rng, 50);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < len; ++i) {
      tokens.push_back(words[uniform_index(rng, words.size())]);
    }
    Vocabulary vocab = build_vocabulary({tokens});
    Graph g = text_to_graph(tokens, cfg, vocab);
    CHECK(undirected_pairs(g) == window_pair_oracle(tokens, cfg));
    // The pre-dedup bound on emitted undirected edges.
    const std::size_t effective = std::min(len, cfg.truncate);
    if (effective >= cfg.window) {
      const std::size_t bound =
          (effective - cfg.window + 1) * cfg.window * (cfg.window - 1) / 2;
      CHECK(undirected_pairs(g).size() <= bound);
    }
    Graph again = text_to_graph(tokens, cfg, vocab);
    CHECK(g == again);
  }
}

TEST_CASE("tokenizer lowercases and strips punctuation") {
  CHECK(tokenize("Hello, World! it's FINE.") ==
        std::vector<std::string>{"hello", "world", "it's", "fine"});
  CHECK(tokenize("...") == std::vector<std::string>{});
}

TEST_CASE("topic graphs link same-topic documents") {
  Tensor emb = Tensor::from_rows({{1.0}, {2.0}, {3.0}});
  Graph g = build_topic_graph(emb, {1, 1, 2}, {0, 1, 0});
  CHECK(undirected_pairs(g) == std::set<Pair>{{0, 1}});
  Graph lonely = build_topic_graph(emb, {1, 2, 3}, {0, 1, 0});
  CHECK(lonely.edges.empty());
  Graph triangle = build_topic_graph(emb, {5, 5, 5}, {0, 1, 0});
  CHECK(undirected_pairs(triangle) == std::set<Pair>{{0, 1}, {0, 2}, {1, 2}});
  CHECK_THROWS_AS(build_topic_graph(emb, {1, 2}, {0, 1, 0}), std::invalid_argument);
}

TEST_CASE("topic graphs are disjoint unions of cliques") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 20);
    Tensor emb(n, 2);
    std::vector<std::int32_t> topics(n), labels(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      topics[i] = static_cast<std::int32_t>(uniform_index(rng, 4));
    }
    Graph g = build_topic_graph(emb, topics, labels);
    auto pairs = undirected_pairs(g);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const bool linked = pairs.contains({static_cast<std::uint32_t>(a),
                                            static_cast<std::uint32_t>(b)});
        CHECK(linked == (topics[a] == topics[b]));
      }
    }
  }
}

TEST_CASE("embedding table round trip with id sidecar") {
  TempDir dir("gs_embed");
  Tensor table = Tensor::from_rows({{0.5, -1.25}, {3.0, 0.125}});
  save_embedding_table(dir.str() + "/e.bin", table, {"doc1", "doc2"});
  auto [loaded, ids] = load_embedding_table(dir.str() + "/e.bin");
  CHECK(ids == std::vector<std::string>{"doc1", "doc2"});
  REQUIRE(loaded.same_shape(table));
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(loaded.data()[i] == table.data()[i]);  // exactly representable values
  }
  CHECK_THROWS_AS(load_embedding_table(dir.str() + "/missing.bin"), std::runtime_error);
}

TEST_CASE("text corpus file parses splits labels and tokens") {
  TempDir dir("gs_textcorpus");
  dir.write("corpus.tsv", "train\tpos\tGreat movie, loved it!\ntest\tneg\tAwful.\n");
  auto docs = load_text_corpus(dir.str() + "/corpus.tsv");
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].split == "train");
  CHECK(docs[0].label == "pos");
  CHECK(docs[0].tokens == std::vector<std::string>{"great", "movie", "loved", "it"});
  dir.write("bad.tsv", "dev\tx\thello\n");
  CHECK_THROWS_AS(load_text_corpus(dir.str() + "/bad.tsv"), std::runtime_error);
}

TEST_CASE("topic dataset loads documents and masks from disk") {
  TempDir dir("gs_topicdata");
  Tensor emb = Tensor::from_rows({{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}});
  save_embedding_table(dir.str() + "/embeddings.bin", emb, {"d0", "d1", "d2"});
  std::ofstream(dir.path / "docs.csv")
      << "d0,7,0,train\nd1,7,1,val\nd2,8,0,test\n";
  TopicDataset ds = load_topic_dataset(dir.str());
  CHECK(ds.graph.num_nodes == 3);
  CHECK(ds.num_classes == 2);
  CHECK(undirected_pairs(ds.graph) == std::set<Pair>{{0, 1}});
  CHECK(ds.graph.train_mask == std::vector<std::uint32_t>{0});
  CHECK(ds.graph.val_mask == std::vector<std::uint32_t>{1});
  CHECK(ds.graph.test_mask == std::vector<std::uint32_t>{2});
}
