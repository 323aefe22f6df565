#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factgraph/canon.hpp"
#include "factgraph/tensor.hpp"

namespace factgraph {

struct OverLengthError : std::runtime_error {
  explicit OverLengthError(const std::string& m) : std::runtime_error(m) {}
};
struct EmptyGraphError : std::runtime_error {
  explicit EmptyGraphError(const std::string& m) : std::runtime_error(m) {}
};
struct EmptyDocumentGraphsError : std::runtime_error {
  explicit EmptyDocumentGraphsError(const std::string& m)
      : std::runtime_error(m) {}
};

struct BackboneConfig {
  int layers = 4;
  int d_model = 128;
  int heads = 4;
  int d_ff = 512;
  int max_seq = 128;
  int vocab_size = 0;
  int adapter_dim = 32;
  int pool_heads = 4;

  void validate() const {
    if (d_model % heads != 0)
      throw std::invalid_argument("d_model must be divisible by heads");
    if (vocab_size <= 0) throw std::invalid_argument("vocab_size unset");
  }
};

// Shared frozen transformer (post-layer-norm) plus the trainable pieces:
// text adapters, structural (graph) adapters, attention pooling over
// document-graph representations, and the two-way classifier.
//
// The backbone is randomly initialized with the query and key projections
// tied for the first half of each layer's heads, so those heads score a
// positive-semidefinite token-similarity kernel out of the box (identical
// tokens find each other); the remaining heads draw independent key
// projections so that positions with no duplicates — the classification
// token in particular — still mix information across the sequence.
template <typename T>
class Encoders {
 public:
  using Mat = Matrix<T>;

  Encoders(const BackboneConfig& config, uint64_t seed)
      : cfg_(config) {
    cfg_.validate();
    Rng rng(derive_seed(seed, 0xb0));
    const int d = cfg_.d_model, m = cfg_.adapter_dim, f = cfg_.d_ff;
    const T ws = T(1) / std::sqrt(T(d));

    // Unit-scale token embeddings give the first attention layer the same
    // input magnitude the post-layer-norm layers see, so its similarity
    // logits are sharp instead of near-uniform; positions and segments are
    // deliberately smaller so that an identical token elsewhere in the
    // sequence competes with self-attention instead of losing to the
    // positional term.
    tok_emb_ = frozen(randn(rng, cfg_.vocab_size, d, T(1)));
    pos_emb_ = frozen(randn(rng, cfg_.max_seq, d, T(0.3)));
    // segment (token-type) embeddings: 0 = document side, 1 = summary side.
    // Without them, a summary token attending to an identical document
    // token retrieves the same value as attending to itself, so "my token
    // also occurs in the document" would be invisible to the classifier.
    seg_emb_ = frozen(randn(rng, 2, d, T(0.3)));
    for (int l = 0; l < cfg_.layers; ++l) {
      Layer lay;
      lay.wq = frozen(randn(rng, d, d, ws));
      {
        // tied keys for the matching heads, fresh keys for the mixing ones
        Mat wk = lay.wq->value;
        const int dh = d / cfg_.heads;
        for (int hd = cfg_.heads / 2; hd < cfg_.heads; ++hd)
          wk.middleCols(hd * dh, dh) = randn(rng, d, dh, ws);
        lay.wk = frozen(std::move(wk));
      }
      lay.wv = frozen(randn(rng, d, d, ws));
      lay.wo = frozen(randn(rng, d, d, ws));
      lay.ln1_g = frozen(Mat::Ones(1, d));
      lay.ln1_b = frozen(Mat::Zero(1, d));
      lay.w1 = frozen(randn(rng, d, f, ws));
      lay.b1 = frozen(Mat::Zero(1, f));
      lay.w2 = frozen(randn(rng, f, d, T(1) / std::sqrt(T(f))));
      lay.b2 = frozen(Mat::Zero(1, d));
      lay.ln2_g = frozen(Mat::Ones(1, d));
      lay.ln2_b = frozen(Mat::Zero(1, d));
      layers_.push_back(lay);

      text_adapters_.push_back(make_adapter(rng, d, m));   // before ffn
      text_adapters_.push_back(make_adapter(rng, d, m));   // after ffn

      Structural st;
      for (int r = 0; r < kNumEdgeTypes; ++r)
        st.conv.push_back(trainable(randn(rng, d, m, ws)));
      st.we = trainable(Mat::Zero(m, d));  // residual start: encoder == backbone
      graph_struct_.push_back(st);
      graph_adapters_.push_back(make_adapter(rng, d, m));  // after ffn
    }

    pool_q_ = trainable(randn(rng, d, d, ws));
    pool_k_ = trainable(pool_q_->value);  // tied init, trained separately
    pool_r_ = trainable(randn(rng, d, d, ws));
    cls_w_ = trainable(randn(rng, 2 * d, 2, ws));
    cls_b_ = trainable(Mat::Zero(1, 2));
    node_pred_w_ = trainable(randn(rng, d, d, ws));
  }

  const BackboneConfig& config() const { return cfg_; }

  // --- input assembly ------------------------------------------------------

  // [CLS] document [SEP] summary [SEP]; the document tail is truncated to
  // fit max_seq. `summary_positions` (optional) receives the sequence
  // positions of the summary tokens, in order; `segments` (optional)
  // receives the per-position segment ids (document side 0 through the
  // first [SEP], summary side 1 after it).
  std::vector<int> build_text_input(const std::vector<int>& doc_ids,
                                    const std::vector<int>& summary_ids,
                                    std::vector<int>* summary_positions =
                                        nullptr,
                                    std::vector<int>* segments =
                                        nullptr) const {
    const int fixed = 3 + static_cast<int>(summary_ids.size());
    if (fixed > cfg_.max_seq)
      throw OverLengthError("summary alone exceeds max sequence length");
    int doc_budget = cfg_.max_seq - fixed;
    std::vector<int> ids;
    ids.push_back(SubwordVocab::kCls);
    for (int i = 0; i < std::min<int>(doc_budget, doc_ids.size()); ++i)
      ids.push_back(doc_ids[i]);
    ids.push_back(SubwordVocab::kSep);
    if (segments) segments->assign(ids.size(), 0);
    if (summary_positions) summary_positions->clear();
    for (int id : summary_ids) {
      if (summary_positions)
        summary_positions->push_back(static_cast<int>(ids.size()));
      ids.push_back(id);
    }
    ids.push_back(SubwordVocab::kSep);
    if (segments) segments->resize(ids.size(), 1);
    return ids;
  }

  // --- encoders ------------------------------------------------------------

  // Per-position representations; row 0 is the classification rep t.
  // `segments` (empty = all zero) selects per-position segment embeddings.
  Tensor<T> text_encode(const std::vector<int>& input_ids,
                        const std::vector<int>& segments = {}) {
    if (static_cast<int>(input_ids.size()) > cfg_.max_seq)
      throw OverLengthError("input exceeds max sequence length");
    Tensor<T> h = embed(input_ids, /*positions=*/true, segments);
    for (int l = 0; l < cfg_.layers; ++l) {
      h = attention_block(h, layers_[l]);
      h = apply_adapter(h, text_adapters_[2 * l]);
      h = ffn_block(h, layers_[l]);
      h = apply_adapter(h, text_adapters_[2 * l + 1]);
    }
    return h;
  }

  // Per-node representations, row-aligned with graph.nodes. No positional
  // encodings: node order carries no meaning. `segments` (empty = all
  // zero) marks node provenance when encoding a summary/document union.
  Tensor<T> graph_encode_nodes(const TokenGraph& graph,
                               const std::vector<int>& segments = {}) {
    if (graph.nodes.empty()) throw EmptyGraphError("graph has no nodes");
    std::vector<int> ids;
    for (const auto& n : graph.nodes) ids.push_back(n.token_id);
    auto adj = adjacency(graph);
    Tensor<T> h = embed(ids, /*positions=*/false, segments);
    for (int l = 0; l < cfg_.layers; ++l) {
      h = attention_block(h, layers_[l]);
      h = structural_adapter(h, adj, graph_struct_[l]);
      h = ffn_block(h, layers_[l]);
      h = apply_adapter(h, graph_adapters_[l]);
    }
    return h;
  }

  // Mean-pooled graph representation z^G (1 x d).
  Tensor<T> graph_encode(const TokenGraph& graph) {
    return mean_rows(graph_encode_nodes(graph));
  }

  // Eq-3-style pooling: per-head scaled dot-product attention of the
  // summary-graph rep over the document-graph reps; values are W_r z_i.
  Tensor<T> attend_pool(Tensor<T> z_s, const std::vector<Tensor<T>>& doc_reps,
                        Mat* alpha_out = nullptr) {
    if (doc_reps.empty())
      throw EmptyDocumentGraphsError("no document graph representations");
    Tensor<T> z = concat_rows<T>(doc_reps);  // k x d
    Tensor<T> q = matmul(z_s, pool_q_);      // 1 x d
    Tensor<T> k = matmul(z, pool_k_);        // k x d
    Tensor<T> v = matmul(z, pool_r_);        // k x d
    const int dh = cfg_.d_model / cfg_.pool_heads;
    const T inv = T(1) / std::sqrt(T(dh));
    if (alpha_out)
      alpha_out->resize(cfg_.pool_heads, static_cast<Eigen::Index>(
                                             doc_reps.size()));
    std::vector<Tensor<T>> heads;
    for (int hd = 0; hd < cfg_.pool_heads; ++hd) {
      auto qh = slice_cols(q, hd * dh, dh);
      auto kh = slice_cols(k, hd * dh, dh);
      auto vh = slice_cols(v, hd * dh, dh);
      auto alpha = softmax_rows(scale(matmul_nt(qh, kh), inv));  // 1 x k
      if (alpha_out) alpha_out->row(hd) = alpha->value.row(0);
      heads.push_back(matmul(alpha, vh));  // 1 x dh
    }
    Tensor<T> g = heads[0];
    for (std::size_t i = 1; i < heads.size(); ++i)
      g = concat_cols(g, heads[i]);
    return g;
  }

  // Class logits (1 x 2) over {NonFactual, Factual}; order matches the
  // Label enum so argmax casts directly.
  Tensor<T> classify(Tensor<T> t, Tensor<T> g) {
    return add_rowwise(matmul(concat_cols(t, g), cls_w_), cls_b_);
  }

  // Generic head for edge or auxiliary classifiers over concatenated reps.
  Tensor<T> logits_head(Tensor<T> x, Tensor<T> w, Tensor<T> b) {
    return add_rowwise(matmul(x, w), b);
  }

  // Masked-node pretraining: mask a sample of nodes, predict their token
  // ids against the tied embedding table. Returns a scalar loss (zero
  // tensor when nothing is masked). When `segments` is given it is passed
  // through to the encoder, and `mask_segment` (if >= 0) limits masking to
  // nodes of that segment — masking only the summary side of a
  // summary/document union forces the adapters to reconstruct nodes from
  // their counterparts across the segment boundary.
  Tensor<T> masked_node_pretrain_step(const TokenGraph& graph, double mask_rate,
                                      uint64_t seed,
                                      const std::vector<int>& segments = {},
                                      int mask_segment = -1) {
    if (graph.nodes.empty()) throw EmptyGraphError("graph has no nodes");
    Rng rng(seed);
    TokenGraph masked = graph;
    std::vector<int> positions, targets;
    for (std::size_t i = 0; i < masked.nodes.size(); ++i) {
      if (mask_segment >= 0 &&
          (i >= segments.size() || segments[i] != mask_segment))
        continue;
      if (rng.uniform() < mask_rate) {
        positions.push_back(static_cast<int>(i));
        targets.push_back(masked.nodes[i].token_id);
        masked.nodes[i].token_id = SubwordVocab::kMask;
      }
    }
    if (positions.empty()) return constant<T>(Mat::Zero(1, 1));
    Tensor<T> h = graph_encode_nodes(masked, segments);
    Tensor<T> picked = gather_rows(h, positions);
    Tensor<T> logits = matmul_nt(matmul(picked, node_pred_w_), tok_emb_);
    return cross_entropy(logits, targets);
  }

  // --- parameter sets ------------------------------------------------------

  std::vector<Tensor<T>> backbone_params() const {
    std::vector<Tensor<T>> out = {tok_emb_, pos_emb_, seg_emb_};
    for (const auto& l : layers_)
      for (const auto& t : {l.wq, l.wk, l.wv, l.wo, l.ln1_g, l.ln1_b, l.w1,
                            l.b1, l.w2, l.b2, l.ln2_g, l.ln2_b})
        out.push_back(t);
    return out;
  }

  std::vector<Tensor<T>> text_adapter_params() const {
    std::vector<Tensor<T>> out;
    for (const auto& a : text_adapters_) {
      out.push_back(a.down);
      out.push_back(a.up);
    }
    return out;
  }

  std::vector<Tensor<T>> graph_adapter_params() const {
    std::vector<Tensor<T>> out;
    for (const auto& s : graph_struct_) {
      for (const auto& w : s.conv) out.push_back(w);
      out.push_back(s.we);
    }
    for (const auto& a : graph_adapters_) {
      out.push_back(a.down);
      out.push_back(a.up);
    }
    return out;
  }

  std::vector<Tensor<T>> head_params() const {
    return {pool_q_, pool_k_, pool_r_, cls_w_, cls_b_, node_pred_w_};
  }

  Tensor<T> node_prediction_head() const { return node_pred_w_; }

  std::vector<Tensor<T>> trainable_params() const {
    std::vector<Tensor<T>> out = text_adapter_params();
    for (const auto& t : graph_adapter_params()) out.push_back(t);
    for (const auto& t : head_params()) out.push_back(t);
    return out;
  }

  std::vector<Tensor<T>> all_params() const {
    std::vector<Tensor<T>> out = backbone_params();
    for (const auto& t : trainable_params()) out.push_back(t);
    return out;
  }

  // Residual-identity switch used by tests: zero the adapter output
  // projections so both encoders collapse to the bare backbone.
  void zero_adapter_outputs() {
    for (auto& a : text_adapters_) a.up->value.setZero();
    for (auto& a : graph_adapters_) a.up->value.setZero();
    for (auto& s : graph_struct_) s.we->value.setZero();
  }

 private:
  struct Layer {
    Tensor<T> wq, wk, wv, wo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
  };
  struct Adapter {
    Tensor<T> down;  // d x m
    Tensor<T> up;    // m x d, zero-initialized for the residual identity
  };
  struct Structural {
    std::vector<Tensor<T>> conv;  // per edge type, d x m
    Tensor<T> we;                 // m x d
  };

  Mat randn(Rng& rng, int r, int c, T s) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = s * T(rng.normal());
    return m;
  }
  Tensor<T> frozen(Mat m) { return constant<T>(std::move(m)); }
  Tensor<T> trainable(Mat m) { return parameter<T>(std::move(m)); }

  Adapter make_adapter(Rng& rng, int d, int m) {
    Adapter a;
    a.down = trainable(randn(rng, d, m, T(1) / std::sqrt(T(d))));
    a.up = trainable(Mat::Zero(m, d));
    return a;
  }

  Tensor<T> embed(const std::vector<int>& ids, bool positions,
                  const std::vector<int>& segments = {}) {
    for (int id : ids)
      if (id < 0 || id >= cfg_.vocab_size)
        throw ShapeMismatchError("token id out of vocabulary range");
    if (!segments.empty() && segments.size() != ids.size())
      throw ShapeMismatchError("segment ids do not match input length");
    for (int s : segments)
      if (s < 0 || s > 1) throw ShapeMismatchError("segment id out of range");
    Tensor<T> h = gather_rows(tok_emb_, ids);
    if (positions) {
      std::vector<int> pos(ids.size());
      for (std::size_t i = 0; i < ids.size(); ++i)
        pos[i] = static_cast<int>(i);
      h = add(h, gather_rows(pos_emb_, pos));
    }
    if (!segments.empty()) h = add(h, gather_rows(seg_emb_, segments));
    return h;
  }

  Tensor<T> attention_block(Tensor<T> h, const Layer& l) {
    Tensor<T> q = matmul(h, l.wq);
    Tensor<T> k = matmul(h, l.wk);
    Tensor<T> v = matmul(h, l.wv);
    const int dh = cfg_.d_model / cfg_.heads;
    const T inv = T(1) / std::sqrt(T(dh));
    std::vector<Tensor<T>> heads;
    for (int hd = 0; hd < cfg_.heads; ++hd) {
      auto qh = slice_cols(q, hd * dh, dh);
      auto kh = slice_cols(k, hd * dh, dh);
      auto vh = slice_cols(v, hd * dh, dh);
      auto weights = softmax_rows(scale(matmul_nt(qh, kh), inv));
      heads.push_back(matmul(weights, vh));
    }
    Tensor<T> cat = heads[0];
    for (std::size_t i = 1; i < heads.size(); ++i)
      cat = concat_cols(cat, heads[i]);
    Tensor<T> attn = matmul(cat, l.wo);
    return layer_norm_rows(add(h, attn), l.ln1_g, l.ln1_b);
  }

  Tensor<T> ffn_block(Tensor<T> h, const Layer& l) {
    Tensor<T> f = add_rowwise(
        matmul(gelu(add_rowwise(matmul(h, l.w1), l.b1)), l.w2), l.b2);
    return layer_norm_rows(add(h, f), l.ln2_g, l.ln2_b);
  }

  // ẑ = up · relu(down · LN(h)) + h with a parameterless inner norm
  Tensor<T> apply_adapter(Tensor<T> h, const Adapter& a) {
    Tensor<T> n = plain_norm(h);
    return add(matmul(relu(matmul(n, a.down)), a.up), h);
  }

  Tensor<T> plain_norm(Tensor<T> h) {
    if (!unit_gamma_ || unit_gamma_->value.cols() != h->value.cols()) {
      unit_gamma_ = constant<T>(Mat::Ones(1, h->value.cols()));
      zero_beta_ = constant<T>(Mat::Zero(1, h->value.cols()));
    }
    return layer_norm_rows(h, unit_gamma_, zero_beta_);
  }

  // keep adjacency public: its normalization is part of the contract
 public:
  // Mean-normalized adjacency per edge type: row v collects incoming
  // messages, each scaled by 1/|incoming of that type at v|.
  std::vector<Mat> adjacency(const TokenGraph& graph) const {
    const int n = static_cast<int>(graph.nodes.size());
    std::vector<Mat> adj(kNumEdgeTypes, Mat::Zero(n, n));
    std::vector<std::vector<int>> counts(kNumEdgeTypes,
                                         std::vector<int>(n, 0));
    for (const auto& [s, t, ty] : graph.edges)
      ++counts[static_cast<int>(ty)][t];
    for (const auto& [s, t, ty] : graph.edges) {
      int r = static_cast<int>(ty);
      adj[r](t, s) += T(1) / T(counts[r][t]);
    }
    return adj;
  }

 private:
  // z = relu(Σ_r A_r LN(h) W_r) W_e + h
  Tensor<T> structural_adapter(Tensor<T> h, const std::vector<Mat>& adj,
                               const Structural& s) {
    Tensor<T> n = plain_norm(h);
    Tensor<T> g;
    for (int r = 0; r < kNumEdgeTypes; ++r) {
      Tensor<T> msg = matmul(constant<T>(adj[r]), matmul(n, s.conv[r]));
      g = g ? add(g, msg) : msg;
    }
    return add(matmul(relu(g), s.we), h);
  }

  BackboneConfig cfg_;
  Tensor<T> tok_emb_, pos_emb_, seg_emb_;
  std::vector<Layer> layers_;
  std::vector<Adapter> text_adapters_;   // 2 per layer
  std::vector<Adapter> graph_adapters_;  // 1 per layer
  std::vector<Structural> graph_struct_;
  Tensor<T> pool_q_, pool_k_, pool_r_, cls_w_, cls_b_, node_pred_w_;
  Tensor<T> unit_gamma_, zero_beta_;
};

}  // namespace factgraph
