#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "factgraph/errors.hpp"
#include "factgraph/metrics.hpp"
#include "factgraph/penman.hpp"

namespace factgraph {

// One (document, summary-sentence) pair. Graphs are carried as Penman
// strings (the dataset wire format); models parse them on demand.
struct FactualityExample {
  std::string id;
  std::string origin;  // cnndm | xsum | synthetic
  std::vector<std::string> document;  // sentences
  std::vector<std::string> doc_amrs;  // one Penman string per sentence
  std::string summary_sentence;
  std::string summary_amr;
  std::optional<Label> label;
  std::vector<std::pair<int, int>> nonfactual_spans;  // [start,end) chars
  std::map<std::string, std::vector<int>> alignments;  // var -> word indices
};

struct EmptyDocumentError : std::runtime_error {
  explicit EmptyDocumentError(const std::string& m) : std::runtime_error(m) {}
};
struct NoEdgesError : std::runtime_error {
  explicit NoEdgesError(const std::string& m) : std::runtime_error(m) {}
};
struct SpanOutOfBoundsError : std::runtime_error {
  explicit SpanOutOfBoundsError(const std::string& m)
      : std::runtime_error(m) {}
};

// Lowercased word tokens with sentence punctuation stripped.
std::vector<std::string> word_tokens(const std::string& sentence);

// Character span [begin,end) of each whitespace-separated word.
std::vector<std::pair<int, int>> word_char_spans(const std::string& sentence);

// Deterministic lexical sentence embedder: term-frequency vectors with
// inverse-document-frequency weights, cosine similarity.
class TfidfEmbedder {
 public:
  explicit TfidfEmbedder(const std::vector<std::string>& corpus_sentences);

  std::map<std::string, double> embed(const std::string& sentence) const;
  static double cosine(const std::map<std::string, double>& a,
                       const std::map<std::string, double>& b);

 private:
  std::map<std::string, double> idf_;
  double default_idf_;
};

// Ranks document sentences by tf-idf cosine similarity against the
// summary; returns min(k, #sentences) indices, ties broken by document
// order.
std::vector<int> select_doc_graphs(const std::vector<std::string>& doc_sentences,
                                   const std::string& summary, int k);

// Exact lowercase match between the concept label (sense suffix removed)
// and summary words; quoted string constants likewise for reentrant use.
// Lossy fallback for when no aligner output is present.
std::map<std::string, std::vector<int>> lexical_match_alignments(
    const AmrGraph& summary_graph, const std::string& summary_sentence);

// An edge is NonFactual iff either endpoint variable is aligned to a word
// overlapping a non-factual span; unaligned nodes never trigger it.
// Returned labels are index-aligned with summary_graph.edges().
std::vector<Label> edge_label_from_spans(
    const AmrGraph& summary_graph, const std::string& summary_sentence,
    const std::map<std::string, std::vector<int>>& alignments,
    const std::vector<std::pair<int, int>>& nonfactual_spans);

// Logical OR of edge non-factuality.
Label aggregate_edges(const std::vector<Label>& edge_labels);

// Mean of {Factual -> 1, NonFactual -> 0}.
double summary_score(const std::vector<Label>& sentence_labels);

// "look-01" -> "look"
std::string strip_sense_suffix(const std::string& concept_label);

}  // namespace factgraph
