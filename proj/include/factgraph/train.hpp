#pragma once

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "factgraph/factuality.hpp"
#include "factgraph/metrics.hpp"

namespace factgraph {

struct EmptySplitError : std::runtime_error {
  explicit EmptySplitError(const std::string& m) : std::runtime_error(m) {}
};

enum class TrainMode { Sentence, Edge };

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 4;
  int epochs = 10;
  double max_grad_norm = 1.0;
  uint64_t seed = 1;
};

struct TrainResult {
  std::vector<double> dev_bacc_per_epoch;
  double best_dev_bacc = 0.0;
  int best_epoch = -1;
};

// Gold edge labels for one example, index-aligned with the summary-graph
// edges; empty when the graph has no edges.
inline std::vector<Label> gold_edge_labels(const FactualityExample& ex) {
  AmrGraph gs = parse_penman(ex.summary_amr);
  if (gs.edges().empty()) return {};
  auto align = ex.alignments.empty()
                   ? lexical_match_alignments(gs, ex.summary_sentence)
                   : ex.alignments;
  return edge_label_from_spans(gs, ex.summary_sentence, align,
                               ex.nonfactual_spans);
}

template <typename T>
std::vector<Label> predict_sentences(FactGraphModel<T>& model,
                                     const std::vector<FactualityExample>& xs,
                                     bool via_edges) {
  std::vector<Label> out;
  for (const auto& ex : xs)
    out.push_back(via_edges ? model.aggregated_score(ex).label
                            : model.sentence_score(ex).label);
  return out;
}

template <typename T>
double dev_metric(FactGraphModel<T>& model,
                  const std::vector<FactualityExample>& dev, TrainMode mode) {
  std::vector<Label> gold;
  for (const auto& ex : dev) gold.push_back(*ex.label);
  return bacc(predict_sentences(model, dev, mode == TrainMode::Edge), gold);
}

struct PretrainConfig {
  int passes = 2;
  double mask_rate = 0.3;
  double lr = 1e-4;
  uint64_t seed = 1;
  // When true, each step masks the summary side of a summary/document
  // union graph, so reconstructing a node means finding its counterpart
  // across the segment boundary; when false, summary graphs are masked in
  // isolation.
  bool use_unions = true;
};

// Masked-node pretraining for the graph adapters (plus the node
// prediction head). The backbone stays frozen throughout.
template <typename T>
void pretrain_graph_adapters(FactGraphModel<T>& model,
                             const std::vector<FactualityExample>& xs,
                             const PretrainConfig& cfg,
                             std::ostream* log = nullptr) {
  if (xs.empty()) throw EmptySplitError("pretraining split must be nonempty");
  auto params = model.encoders().graph_adapter_params();
  params.push_back(model.encoders().node_prediction_head());
  Adam<T> opt(params, T(cfg.lr));
  uint64_t step = 0;
  for (int pass = 0; pass < cfg.passes; ++pass) {
    double total = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const FactualityExample& ex = xs[i];
      Tensor<T> loss;
      ++step;
      if (cfg.use_unions) {
        auto docs = model.selected_docs(ex);
        if (docs.empty()) continue;
        // rotate through the selected documents across passes
        int idx = docs[(pass + i) % docs.size()];
        std::vector<int> segments;
        TokenGraph joint = model.union_token_graph(ex, idx, &segments);
        loss = model.encoders().masked_node_pretrain_step(
            joint, cfg.mask_rate, derive_seed(cfg.seed, step), segments,
            /*mask_segment=*/1);
      } else {
        loss = model.encoders().masked_node_pretrain_step(
            model.summary_token_graph(ex), cfg.mask_rate,
            derive_seed(cfg.seed, step));
      }
      if (!loss->requires_grad) continue;  // nothing masked this step
      zero_grad(params);
      backward(loss);
      opt.step(T(1), T(1));
      total += static_cast<double>(loss->value(0, 0));
      ++count;
    }
    if (log)
      *log << "pretrain pass " << pass + 1 << "/" << cfg.passes << "  loss "
           << (count ? total / count : 0.0) << "\n";
  }
}

// Adam with a linearly decreasing learning rate (no warm-up), gradient
// norm clipping, and best-dev-BACC checkpointing kept in memory: the
// winning epoch's parameter values are restored into the model on return.
template <typename T>
TrainResult train_model(FactGraphModel<T>& model,
                        const std::vector<FactualityExample>& train,
                        const std::vector<FactualityExample>& dev,
                        TrainMode mode, const TrainConfig& cfg,
                        std::ostream* log = nullptr) {
  if (train.empty() || dev.empty())
    throw EmptySplitError("train and dev splits must be nonempty");
  for (const auto& ex : train)
    if (!ex.label) throw EmptySplitError("unlabeled training example: " + ex.id);

  auto params = model.trainable_params();
  Adam<T> opt(params, T(cfg.lr));
  Rng shuffler(derive_seed(cfg.seed, 0x7a));

  std::vector<int> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  const long steps_per_epoch =
      (static_cast<long>(train.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = steps_per_epoch * cfg.epochs;
  long step = 0;

  TrainResult result;
  std::vector<Matrix<T>> best_values;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffler.shuffle(order);
    double epoch_loss = 0.0;
    long loss_terms = 0;
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(cfg.batch_size)) {
      zero_grad(params);
      int used = 0;
      for (std::size_t b = at;
           b < std::min(order.size(),
                        at + static_cast<std::size_t>(cfg.batch_size));
           ++b) {
        const FactualityExample& ex = train[order[b]];
        Tensor<T> loss;
        if (mode == TrainMode::Sentence) {
          loss = cross_entropy(model.sentence_logits(ex),
                               {static_cast<int>(*ex.label)});
        } else {
          std::vector<Label> gold = gold_edge_labels(ex);
          if (gold.empty()) continue;  // edge-free graph: nothing to train on
          std::vector<int> labels;
          for (Label l : gold) labels.push_back(static_cast<int>(l));
          loss = cross_entropy(model.edge_logits(ex), labels);
        }
        backward(loss);
        epoch_loss += static_cast<double>(loss->value(0, 0));
        ++loss_terms;
        ++used;
      }
      ++step;
      if (used == 0) continue;
      // batch-mean gradients (averaged before clipping, as usual)
      for (const auto& p : params)
        if (p->grad.size() != 0) p->grad /= T(used);
      T lr_scale = T(1.0 - static_cast<double>(step - 1) /
                               static_cast<double>(total_steps));
      opt.step(lr_scale, T(cfg.max_grad_norm));
    }

    double score = dev_metric(model, dev, mode);
    result.dev_bacc_per_epoch.push_back(score);
    if (log)
      *log << "epoch " << epoch + 1 << "/" << cfg.epochs << "  loss "
           << (loss_terms ? epoch_loss / loss_terms : 0.0) << "  dev_bacc "
           << score << "\n";
    if (result.best_epoch < 0 || score > result.best_dev_bacc) {
      result.best_dev_bacc = score;
      result.best_epoch = epoch;
      best_values.clear();
      for (const auto& p : params) best_values.push_back(p->value);
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i)
    params[i]->value = best_values[i];
  return result;
}

// Flattened edge-level predictions and gold labels over a split.
template <typename T>
std::pair<std::vector<Label>, std::vector<Label>> evaluate_edges(
    FactGraphModel<T>& model, const std::vector<FactualityExample>& xs) {
  std::vector<Label> pred, gold;
  for (const auto& ex : xs) {
    std::vector<Label> g = gold_edge_labels(ex);
    if (g.empty()) continue;
    auto scores = model.edge_scores(ex);
    for (std::size_t e = 0; e < g.size(); ++e) {
      pred.push_back(scores[e].label);
      gold.push_back(g[e]);
    }
  }
  return {pred, gold};
}

struct KSweepRow {
  int k = 0;
  double test_bacc = 0.0;
};

// Trains one sentence-level model per k and reports held-out BACC;
// deterministic given the seed.
template <typename T>
std::vector<KSweepRow> k_sweep(
    const SubwordVocab& vocab, typename FactGraphModel<T>::Config base,
    const std::vector<FactualityExample>& train,
    const std::vector<FactualityExample>& dev,
    const std::vector<FactualityExample>& test, const TrainConfig& cfg,
    const std::vector<int>& ks = {1, 3, 5, 7}, std::ostream* log = nullptr) {
  std::vector<KSweepRow> rows;
  std::vector<Label> gold;
  for (const auto& ex : test) gold.push_back(*ex.label);
  for (int k : ks) {
    auto config = base;
    config.k = k;
    FactGraphModel<T> model(vocab, config, cfg.seed);
    train_model(model, train, dev, TrainMode::Sentence, cfg, log);
    KSweepRow row;
    row.k = k;
    row.test_bacc = bacc(predict_sentences(model, test, false), gold);
    rows.push_back(row);
    if (log) *log << "k=" << k << "  test_bacc " << row.test_bacc << "\n";
  }
  return rows;
}

}  // namespace factgraph
