#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "factgraph/penman.hpp"

namespace factgraph {

// ---------------------------------------------------------------------------
// Subword vocabulary: byte-pair merges by frequency with lexicographic
// tie-break, greedy longest-match tokenization. Reserved ids come first.
// ---------------------------------------------------------------------------

class SubwordVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kMask = 2;
  static constexpr int kCls = 3;
  static constexpr int kSep = 4;
  static constexpr int kNumReserved = 5;

  SubwordVocab() = default;

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(id); }
  int id_of(const std::string& tok) const {
    auto it = index_.find(tok);
    return it == index_.end() ? -1 : it->second;
  }

  // Greedy longest-match left-to-right over one whitespace-free segment.
  // Characters not covered by any token map to kUnk.
  std::vector<int> encode_segment(const std::string& segment) const;

  // Splits on whitespace and encodes each segment; `spans` (optional)
  // receives the [begin,end) token range of each segment.
  std::vector<int> encode(const std::string& text,
                          std::vector<std::pair<int, int>>* spans
                          = nullptr) const;

  std::string decode(const std::vector<int>& ids) const;

  void save(const std::string& path, const std::string& header_note) const;
  static SubwordVocab load(const std::string& path);

  friend SubwordVocab build_vocab(const std::vector<std::string>& corpus,
                                  int max_size);

 private:
  void add_token(const std::string& tok);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::size_t max_token_len_ = 1;
};

struct EmptyCorpusError : std::runtime_error {
  EmptyCorpusError() : std::runtime_error("vocabulary corpus is empty") {}
};

// Deterministic BPE-style vocabulary: reserved tokens, then all single
// characters of the (lowercased) corpus, then merged pairs by descending
// frequency, ties broken by lexicographically smaller merged string.
SubwordVocab build_vocab(const std::vector<std::string>& corpus, int max_size);

// ---------------------------------------------------------------------------
// Graph canonicalization
// ---------------------------------------------------------------------------

enum class NodeKind { Concept, Relation, Constant };

struct BipartiteNode {
  std::string label;
  NodeKind kind;
};

// Unlabeled version of an AmrGraph: each labeled edge (u, r, v) becomes a
// relation node r with edges u->r and r->v. Constant targets get their own
// node per occurrence.
struct BipartiteGraph {
  std::vector<BipartiteNode> nodes;
  std::vector<std::pair<int, int>> edges;
  int root = -1;
};

enum class EdgeType : uint8_t { Forward = 0, Reverse = 1, Self = 2 };
constexpr int kNumEdgeTypes = 3;

struct TokenGraphNode {
  int token_id;       // subword id in the shared vocab
  std::string token;  // subword text, for inspection
  int origin;         // bipartite node this token came from
};

struct TokenGraph {
  std::vector<TokenGraphNode> nodes;
  std::vector<std::tuple<int, int, EdgeType>> edges;
  bool truncated = false;
};

BipartiteGraph to_bipartite(const AmrGraph& graph);

// AMR node count as used by the bipartite invariant |V_b| = |V_a| + |E_a|:
// variables plus one node per constant edge target occurrence.
std::size_t amr_node_count(const AmrGraph& graph);

// Node labels are lowercased (quotes stripped from string constants) and
// tokenized; every bipartite edge expands to the token cross-product with
// matching reverse edges, and each token node gets a self edge. Graphs
// whose token count exceeds `max_nodes` are truncated breadth-first from
// the root and flagged.
TokenGraph to_token_graph(const BipartiteGraph& bg, const SubwordVocab& vocab,
                          int max_nodes = 512);

// Label text fed to the tokenizer for a bipartite node.
std::string node_surface(const BipartiteNode& node);

}  // namespace factgraph
