#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "factgraph/canon.hpp"
#include "factgraph/encoders.hpp"
#include "factgraph/example.hpp"

namespace factgraph {

struct EdgePrediction {
  AmrEdge edge;
  Label label = Label::Factual;
  double prob_factual = 0.0;
};

struct SentencePrediction {
  Label label = Label::Factual;
  double prob_factual = 0.0;
};

// Whitespace text normalized the same way the vocabulary corpus is
// consumed: lowercased words, punctuation stripped.
inline std::string normalize_for_vocab(const std::string& sentence) {
  std::string out;
  for (const std::string& w : word_tokens(sentence)) {
    if (w.empty()) continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// Bipartite node index of each edge's target (variables resolve to their
// instance node, constants to their per-occurrence node), replaying the
// construction order of to_bipartite.
inline std::vector<int> edge_target_nodes(const AmrGraph& g) {
  std::vector<int> out;
  int next = static_cast<int>(g.num_variables());
  std::unordered_map<std::string, int> var_node;
  for (std::size_t i = 0; i < g.instances().size(); ++i)
    var_node[g.instances()[i].first] = static_cast<int>(i);
  for (const AmrEdge& e : g.edges()) {
    ++next;  // relation node
    if (e.target_is_constant)
      out.push_back(next++);
    else
      out.push_back(var_node.at(e.target));
  }
  return out;
}

inline BipartiteGraph bipartite_union(const BipartiteGraph& a,
                                      const BipartiteGraph& b) {
  BipartiteGraph out = a;
  const int offset = static_cast<int>(a.nodes.size());
  for (const auto& n : b.nodes) out.nodes.push_back(n);
  for (const auto& [s, t] : b.edges)
    out.edges.emplace_back(s + offset, t + offset);
  return out;
}

// Sentence-level and edge-level factuality models over one shared encoder
// stack. The graph side of an edge representation either sums the k
// per-document-graph node states (the literal reading) or averages them,
// per config.
template <typename T>
class FactGraphModel {
 public:
  using Mat = Matrix<T>;

  struct Config {
    BackboneConfig backbone;
    int k = 5;
    bool mean_graph_reps = false;
    int max_graph_nodes = 512;
  };

  FactGraphModel(SubwordVocab vocab, const Config& config, uint64_t seed)
      : vocab_(std::move(vocab)),
        cfg_(config),
        enc_(with_vocab(config.backbone, vocab_), seed) {
    Rng rng(derive_seed(seed, 0xed));
    const int d = cfg_.backbone.d_model;
    Mat w(4 * d, 2);
    for (Eigen::Index i = 0; i < w.size(); ++i)
      w(i) = T(rng.normal()) / std::sqrt(T(4 * d));
    edge_w_ = parameter<T>(w);
    edge_b_ = parameter<T>(Mat::Zero(1, 2));
  }

  Encoders<T>& encoders() { return enc_; }
  const Config& config() const { return cfg_; }
  const SubwordVocab& vocab() const { return vocab_; }

  std::vector<Tensor<T>> trainable_params() const {
    auto out = enc_.trainable_params();
    out.push_back(edge_w_);
    out.push_back(edge_b_);
    return out;
  }

  // --- sentence-level model ------------------------------------------------

  // Class logits (1 x 2, columns = {NonFactual, Factual}); keeps the graph
  // alive for training.
  Tensor<T> sentence_logits(const FactualityExample& ex) {
    std::vector<int> segments;
    auto input = text_input(ex, &segments);
    auto t = gather_rows(enc_.text_encode(input, segments), {0});
    auto z_s = enc_.graph_encode(summary_token_graph(ex));
    std::vector<Tensor<T>> doc_reps;
    for (int idx : selected_docs(ex))
      doc_reps.push_back(enc_.graph_encode(doc_token_graph(ex, idx)));
    auto g = enc_.attend_pool(z_s, doc_reps);
    return enc_.classify(t, g);
  }

  SentencePrediction sentence_score(const FactualityExample& ex) {
    auto probs = softmax_rows(sentence_logits(ex));
    SentencePrediction out;
    out.prob_factual = static_cast<double>(
        probs->value(0, static_cast<int>(Label::Factual)));
    out.label = out.prob_factual >= 0.5 ? Label::Factual : Label::NonFactual;
    return out;
  }

  // --- edge-level model ----------------------------------------------------

  // One logits row per summary-graph edge, index-aligned with edges().
  // Throws NoEdgesError for edge-free graphs (callers fall back to the
  // sentence-level path).
  Tensor<T> edge_logits(const FactualityExample& ex) {
    AmrGraph gs = parse_penman(ex.summary_amr);
    if (gs.edges().empty())
      throw NoEdgesError("summary graph has no edges to classify");

    // text side: summed word representations per aligned variable
    auto align = ex.alignments.empty()
                     ? lexical_match_alignments(gs, ex.summary_sentence)
                     : ex.alignments;
    std::vector<std::pair<int, int>> word_spans;
    std::vector<int> sum_ids =
        vocab_.encode(normalize_for_vocab(ex.summary_sentence), &word_spans);
    std::vector<int> sum_positions, segments;
    auto input = enc_.build_text_input(document_ids(ex), sum_ids,
                                       &sum_positions, &segments);
    Tensor<T> text_reps = enc_.text_encode(input, segments);
    const int d = cfg_.backbone.d_model;
    auto zero_rep = constant<T>(Mat::Zero(1, d));

    auto text_rep_of = [&](const std::string& var) -> Tensor<T> {
      auto it = align.find(var);
      if (it == align.end()) return zero_rep;
      Tensor<T> acc;
      for (int w : it->second) {
        if (w < 0 || w >= static_cast<int>(word_spans.size())) continue;
        std::vector<int> positions;
        for (int tk = word_spans[w].first; tk < word_spans[w].second; ++tk)
          positions.push_back(sum_positions[tk]);
        if (positions.empty()) continue;
        auto word_rep = mean_rows(gather_rows(text_reps, positions));
        acc = acc ? add(acc, word_rep) : word_rep;
      }
      return acc ? acc : zero_rep;
    };

    // graph side: per selected document graph, encode the disjoint union
    // G_s (+) G_d and take each summary node's token-node mean
    BipartiteGraph sb = to_bipartite(gs);
    const int n_summary_nodes = static_cast<int>(sb.nodes.size());
    std::vector<Tensor<T>> node_reps(n_summary_nodes);
    int runs = 0;
    for (int idx : selected_docs(ex)) {
      std::vector<int> segments;
      TokenGraph joint = union_token_graph(ex, idx, &segments);
      Tensor<T> h = enc_.graph_encode_nodes(joint, segments);
      std::vector<std::vector<int>> owned(n_summary_nodes);
      for (std::size_t t = 0; t < joint.nodes.size(); ++t)
        if (joint.nodes[t].origin < n_summary_nodes)
          owned[joint.nodes[t].origin].push_back(static_cast<int>(t));
      for (int v = 0; v < n_summary_nodes; ++v) {
        if (owned[v].empty()) continue;  // truncated away
        auto rep = mean_rows(gather_rows(h, owned[v]));
        node_reps[v] = node_reps[v] ? add(node_reps[v], rep) : rep;
      }
      ++runs;
    }
    if (cfg_.mean_graph_reps && runs > 1)
      for (auto& r : node_reps)
        if (r) r = scale(r, T(1) / T(runs));

    auto graph_rep_of = [&](int node) -> Tensor<T> {
      return node_reps[node] ? node_reps[node] : zero_rep;
    };

    std::unordered_map<std::string, int> var_index;
    for (std::size_t i = 0; i < gs.instances().size(); ++i)
      var_index[gs.instances()[i].first] = static_cast<int>(i);
    std::vector<int> targets = edge_target_nodes(gs);

    std::vector<Tensor<T>> rows;
    for (std::size_t e = 0; e < gs.edges().size(); ++e) {
      const AmrEdge& edge = gs.edges()[e];
      auto r_u = concat_cols(text_rep_of(edge.source),
                             graph_rep_of(var_index.at(edge.source)));
      auto r_v = concat_cols(
          edge.target_is_constant ? zero_rep : text_rep_of(edge.target),
          graph_rep_of(targets[e]));
      rows.push_back(concat_cols(r_u, r_v));
    }
    return add_rowwise(matmul(concat_rows<T>(rows), edge_w_), edge_b_);
  }

  std::vector<EdgePrediction> edge_scores(const FactualityExample& ex) {
    AmrGraph gs = parse_penman(ex.summary_amr);
    auto probs = softmax_rows(edge_logits(ex));
    std::vector<EdgePrediction> out;
    for (std::size_t e = 0; e < gs.edges().size(); ++e) {
      EdgePrediction p;
      p.edge = gs.edges()[e];
      p.prob_factual = static_cast<double>(
          probs->value(static_cast<Eigen::Index>(e),
                       static_cast<int>(Label::Factual)));
      p.label = p.prob_factual >= 0.5 ? Label::Factual : Label::NonFactual;
      out.push_back(p);
    }
    return out;
  }

  // Edge predictions aggregated to a sentence label (any non-factual edge
  // wins); edge-free graphs fall back to the sentence-level classifier.
  SentencePrediction aggregated_score(const FactualityExample& ex) {
    AmrGraph gs = parse_penman(ex.summary_amr);
    if (gs.edges().empty()) return sentence_score(ex);
    auto preds = edge_scores(ex);
    SentencePrediction out;
    out.prob_factual = 1.0;
    std::vector<Label> labels;
    for (const auto& p : preds) {
      labels.push_back(p.label);
      out.prob_factual = std::min(out.prob_factual, p.prob_factual);
    }
    out.label = aggregate_edges(labels);
    return out;
  }

  // --- shared plumbing -----------------------------------------------------

  std::vector<int> selected_docs(const FactualityExample& ex) const {
    if (auto* hit = cache_find(doc_select_cache_, ex.id)) return *hit;
    return cache_put(doc_select_cache_, ex.id,
                     select_doc_graphs(ex.document, ex.summary_sentence,
                                       cfg_.k));
  }

  std::vector<int> document_ids(const FactualityExample& ex) const {
    if (auto* hit = cache_find(doc_ids_cache_, ex.id)) return *hit;
    std::string text;
    for (const auto& s : ex.document) {
      if (!text.empty()) text += ' ';
      text += normalize_for_vocab(s);
    }
    return cache_put(doc_ids_cache_, ex.id, vocab_.encode(text));
  }

  std::vector<int> text_input(const FactualityExample& ex,
                              std::vector<int>* segments = nullptr) const {
    return enc_.build_text_input(
        document_ids(ex), vocab_.encode(normalize_for_vocab(ex.summary_sentence)),
        nullptr, segments);
  }

  TokenGraph summary_token_graph(const FactualityExample& ex) const {
    if (auto* hit = cache_find(summary_graph_cache_, ex.id)) return *hit;
    return cache_put(summary_graph_cache_, ex.id,
                     to_token_graph(to_bipartite(parse_penman(ex.summary_amr)),
                                    vocab_, cfg_.max_graph_nodes));
  }

  TokenGraph doc_token_graph(const FactualityExample& ex, int idx) const {
    std::string key = ex.id + '#' + std::to_string(idx);
    if (auto* hit = cache_find(doc_graph_cache_, key)) return *hit;
    return cache_put(doc_graph_cache_, key,
                     to_token_graph(to_bipartite(parse_penman(
                                        ex.doc_amrs[idx])),
                                    vocab_, cfg_.max_graph_nodes));
  }

  // Disjoint union of the summary graph and one document graph; `segments`
  // marks summary-side token nodes 1 and document-side nodes 0.
  TokenGraph union_token_graph(const BipartiteGraph& summary_bipartite,
                               const std::string& doc_amr,
                               std::vector<int>* segments) const {
    const int n_summary_nodes = static_cast<int>(summary_bipartite.nodes.size());
    BipartiteGraph db = to_bipartite(parse_penman(doc_amr));
    TokenGraph joint = to_token_graph(bipartite_union(summary_bipartite, db),
                                      vocab_, cfg_.max_graph_nodes);
    if (segments) {
      segments->clear();
      for (const auto& node : joint.nodes)
        segments->push_back(node.origin < n_summary_nodes ? 1 : 0);
    }
    return joint;
  }

  TokenGraph union_token_graph(const FactualityExample& ex, int doc_idx,
                               std::vector<int>* segments) const {
    std::string key = ex.id + '#' + std::to_string(doc_idx);
    if (auto* hit = cache_find(union_graph_cache_, key)) {
      if (segments) *segments = hit->second;
      return hit->first;
    }
    std::vector<int> segs;
    TokenGraph joint = union_token_graph(
        to_bipartite(parse_penman(ex.summary_amr)), ex.doc_amrs[doc_idx],
        &segs);
    if (segments) *segments = segs;
    return cache_put(union_graph_cache_, key,
                     std::make_pair(std::move(joint), std::move(segs)))
        .first;
  }

  Tensor<T> edge_head_w() { return edge_w_; }
  Tensor<T> edge_head_b() { return edge_b_; }

 private:
  static BackboneConfig with_vocab(BackboneConfig b, const SubwordVocab& v) {
    b.vocab_size = v.size();
    return b;
  }

  // Examples are immutable during a run, so derived inputs (tokenized
  // graphs, document selections) are memoized by example id.
  template <typename V>
  static const V* cache_find(const std::unordered_map<std::string, V>& cache,
                             const std::string& key) {
    auto it = cache.find(key);
    return it == cache.end() ? nullptr : &it->second;
  }
  template <typename V>
  static const V& cache_put(std::unordered_map<std::string, V>& cache,
                            const std::string& key, V value) {
    return cache.emplace(key, std::move(value)).first->second;
  }

  SubwordVocab vocab_;
  Config cfg_;
  Encoders<T> enc_;
  Tensor<T> edge_w_, edge_b_;
  mutable std::unordered_map<std::string, std::vector<int>> doc_select_cache_;
  mutable std::unordered_map<std::string, std::vector<int>> doc_ids_cache_;
  mutable std::unordered_map<std::string, TokenGraph> summary_graph_cache_;
  mutable std::unordered_map<std::string, TokenGraph> doc_graph_cache_;
  mutable std::unordered_map<std::string,
                             std::pair<TokenGraph, std::vector<int>>>
      union_graph_cache_;
};

}  // namespace factgraph
