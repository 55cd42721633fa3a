#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "graphstar/graph.hpp"

namespace graphstar {

// ---------------------------------------------------------------------------
// Citation-style datasets: a directory holding
//   features.csv  node_id,<float...>          (one row per node)
//   labels.csv    node_id,label               (label: integer or class name)
//   edges.csv     src,dst
//   splits.json   {"train": [...], "val": [...], "test": [...]}
// Multi-label corpora list space-separated class ids in the label column.
// ---------------------------------------------------------------------------

struct CitationDataset {
  Graph graph;  // edges symmetrized, features row-normalized
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;  // empty for numeric labels
};

CitationDataset load_citation_dataset(const std::string& dir);

// ---------------------------------------------------------------------------
// TU-style graph corpora: <name>_A.txt, <name>_graph_indicator.txt,
// <name>_graph_labels.txt, optional <name>_node_labels.txt /
// <name>_node_attributes.txt, all 1-based as published.
// ---------------------------------------------------------------------------

struct GraphCorpus {
  std::vector<Graph> graphs;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
};

GraphCorpus load_graph_corpus(const std::string& dir);

// ---------------------------------------------------------------------------
// Sliding-window text graphs.
// ---------------------------------------------------------------------------

enum class OccurrenceMode { DistinctPerOccurrence, MergeSameWord };
enum class TextFeatureMode { OneHotVocabulary, EmbeddingTable };

struct TextGraphConfig {
  std::size_t window = 4;
  OccurrenceMode mode = OccurrenceMode::DistinctPerOccurrence;
  std::size_t truncate = 3072;
  TextFeatureMode features = TextFeatureMode::OneHotVocabulary;
  void validate() const;
};

struct Vocabulary {
  std::unordered_map<std::string, std::uint32_t> ids;
  std::size_t size() const { return ids.size(); }
  std::uint32_t require(const std::string& token) const;
};

/// Tokens in first-appearance order across the corpus.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& documents);

/// Lowercase, strip punctuation, split on whitespace.
std::vector<std::string> tokenize(const std::string& text);

/// Word co-occurrence graph over sliding windows of the (truncated) token
/// list. Texts shorter than the window form a single window. Features are a
/// one-hot vocabulary encoding or rows of `embeddings` indexed by word id.
Graph text_to_graph(const std::vector<std::string>& tokens, const TextGraphConfig& config,
                    const Vocabulary& vocab, const Tensor* embeddings = nullptr);

/// Text corpus file: TSV lines "split<TAB>label<TAB>text" with split in
/// {train, test}.
struct TextDocument {
  std::string split;
  std::string label;
  std::vector<std::string> tokens;
};

std::vector<TextDocument> load_text_corpus(const std::string& path);

// ---------------------------------------------------------------------------
// Same-topic document graphs.
// ---------------------------------------------------------------------------

/// One node per document; an undirected edge joins every pair of documents
/// sharing a topic id. Embeddings become node features.
Graph build_topic_graph(const Tensor& doc_embeddings, const std::vector<std::int32_t>& topic_ids,
                        const std::vector<std::int32_t>& labels,
                        const std::vector<std::uint32_t>& train_mask = {},
                        const std::vector<std::uint32_t>& val_mask = {},
                        const std::vector<std::uint32_t>& test_mask = {});

/// Topic-graph datasets on disk: docs.csv (doc_id,topic_id,label,split) plus
/// embeddings.bin / embeddings.bin.ids in the embedding-table format.
struct TopicDataset {
  Graph graph;
  std::size_t num_classes = 0;
};

TopicDataset load_topic_dataset(const std::string& dir);

// ---------------------------------------------------------------------------
// Embedding table: u32 row count, u32 width, little-endian f32 payload, plus
// an id-order sidecar "<path>.ids" with one id per line.
// ---------------------------------------------------------------------------

void save_embedding_table(const std::string& path, const Tensor& table,
                          const std::vector<std::string>& ids);
std::pair<Tensor, std::vector<std::string>> load_embedding_table(const std::string& path);

}  // namespace graphstar
