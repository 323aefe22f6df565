#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <sstream>

#include "factgraph/checkpoint.hpp"
#include "factgraph/dataset.hpp"
#include "factgraph/synth.hpp"
#include "factgraph/train.hpp"

using namespace factgraph;
using Mat = Matrix<double>;

namespace {

SubwordVocab shared_vocab() {
  return build_vocab(template_vocabulary_lines(), 2048);
}

FactGraphModel<double>::Config tiny_config(const SubwordVocab& v) {
  FactGraphModel<double>::Config cfg;
  cfg.backbone.layers = 2;
  cfg.backbone.d_model = 16;
  cfg.backbone.heads = 2;
  cfg.backbone.d_ff = 32;
  cfg.backbone.max_seq = 128;
  cfg.backbone.adapter_dim = 4;
  cfg.backbone.pool_heads = 2;
  cfg.backbone.vocab_size = v.size();
  cfg.k = 3;
  return cfg;
}

std::vector<FactualityExample> small_corpus(int n, uint64_t seed = 7) {
  SynthConfig sc;
  sc.num_examples = n;
  sc.seed = seed;
  return generate_corpus(sc);
}

}  // namespace

TEST_CASE("sentence scoring is deterministic and well-formed") {
  SubwordVocab v = shared_vocab();
  auto cfg = tiny_config(v);
  auto xs = small_corpus(4);
  FactGraphModel<double> a(v, cfg, 11), b(v, cfg, 11);
  for (const auto& ex : xs) {
    auto pa = a.sentence_score(ex);
    auto pb = b.sentence_score(ex);
    CHECK(pa.prob_factual == pb.prob_factual);
    CHECK(pa.prob_factual >= 0.0);
    CHECK(pa.prob_factual <= 1.0);
    CHECK((pa.label == Label::Factual) == (pa.prob_factual >= 0.5));
  }
  FactGraphModel<double> c(v, cfg, 12);
  bool any_diff = false;
  for (const auto& ex : xs)
    any_diff |= c.sentence_score(ex).prob_factual !=
                a.sentence_score(ex).prob_factual;
  CHECK(any_diff);
}

TEST_CASE("edge logits align with summary edges") {
  SubwordVocab v = shared_vocab();
  auto cfg = tiny_config(v);
  FactGraphModel<double> model(v, cfg, 5);
  auto xs = small_corpus(6);
  for (const auto& ex : xs) {
    AmrGraph gs = parse_penman(ex.summary_amr);
    if (gs.edges().empty()) continue;
    auto logits = model.edge_logits(ex);
    CHECK(logits->value.rows() == static_cast<Eigen::Index>(gs.edges().size()));
    CHECK(logits->value.cols() == 2);
    auto scores = model.edge_scores(ex);
    REQUIRE(scores.size() == gs.edges().size());
    for (std::size_t e = 0; e < scores.size(); ++e) {
      CHECK(scores[e].edge == gs.edges()[e]);
      CHECK(scores[e].prob_factual >= 0.0);
      CHECK(scores[e].prob_factual <= 1.0);
    }
  }
}

TEST_CASE("mean and sum graph reps agree on a single selected graph") {
  SubwordVocab v = shared_vocab();
  auto cfg = tiny_config(v);
  cfg.k = 1;
  auto mean_cfg = cfg;
  mean_cfg.mean_graph_reps = true;
  FactGraphModel<double> sum_model(v, cfg, 9);
  FactGraphModel<double> mean_model(v, mean_cfg, 9);
  auto xs = small_corpus(4);
  for (const auto& ex : xs) {
    if (parse_penman(ex.summary_amr).edges().empty()) continue;
    CHECK((sum_model.edge_logits(ex)->value -
           mean_model.edge_logits(ex)->value)
              .norm() == 0.0);
  }
}

TEST_CASE("edge-free graphs fall back to the sentence classifier") {
  SubwordVocab v = shared_vocab();
  FactGraphModel<double> model(v, tiny_config(v), 3);
  auto ex = small_corpus(1).front();
  ex.summary_amr = "(c / city)";
  ex.alignments.clear();
  CHECK_THROWS_AS(model.edge_logits(ex), NoEdgesError);
  auto agg = model.aggregated_score(ex);
  auto sent = model.sentence_score(ex);
  CHECK(agg.prob_factual == sent.prob_factual);
  CHECK(agg.label == sent.label);
}

TEST_CASE("aggregated label is the OR of edge labels") {
  SubwordVocab v = shared_vocab();
  FactGraphModel<double> model(v, tiny_config(v), 3);
  for (const auto& ex : small_corpus(6)) {
    if (parse_penman(ex.summary_amr).edges().empty()) continue;
    auto edges = model.edge_scores(ex);
    std::vector<Label> labels;
    double min_prob = 1.0;
    for (const auto& e : edges) {
      labels.push_back(e.label);
      min_prob = std::min(min_prob, e.prob_factual);
    }
    auto agg = model.aggregated_score(ex);
    CHECK(agg.label == aggregate_edges(labels));
    CHECK(agg.prob_factual == min_prob);
  }
}

TEST_CASE("checkpoint round-trips parameters bitwise") {
  SubwordVocab v = shared_vocab();
  auto cfg = tiny_config(v);
  // checkpoints cover the trainable parameters only, so both models must
  // share the frozen backbone seed
  FactGraphModel<double> a(v, cfg, 21), b(v, cfg, 21);
  auto pa = a.trainable_params();
  auto pb = b.trainable_params();
  REQUIRE(pa.size() == pb.size());
  Rng rng(99);
  for (auto& p : pb)
    for (Eigen::Index i = 0; i < p->value.size(); ++i)
      p->value(i) += 0.1 * rng.normal();

  const std::string path = "test_ckpt_roundtrip.bin";
  save_checkpoint(path, {{"seed", "21"}}, numbered(pa));
  auto meta = load_checkpoint(path, numbered(pb));
  CHECK(meta.at("seed") == "21");
  for (std::size_t i = 0; i < pa.size(); ++i)
    CHECK((pa[i]->value - pb[i]->value).norm() == 0.0);

  auto ex = small_corpus(1).front();
  CHECK(a.sentence_score(ex).prob_factual == b.sentence_score(ex).prob_factual);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint converts between element widths") {
  auto t32 = parameter<float>(Matrix<float>::Random(3, 5));
  auto t64 = parameter<double>(Matrix<double>::Zero(3, 5));
  const std::string path = "test_ckpt_width.bin";
  save_checkpoint<float>(path, {}, {{"w", t32}});
  load_checkpoint<double>(path, {{"w", t64}});
  for (Eigen::Index i = 0; i < t32->value.size(); ++i)
    CHECK(t64->value(i) == static_cast<double>(t32->value(i)));
  std::remove(path.c_str());
}

TEST_CASE("checkpoint rejects malformed input") {
  auto t = parameter<double>(Matrix<double>::Zero(2, 2));
  const std::string path = "test_ckpt_bad.bin";
  {
    std::ofstream os(path, std::ios::binary);
    os << "not a checkpoint at all";
  }
  CHECK_THROWS_AS(load_checkpoint<double>(path, {{"w", t}}), CheckpointError);

  save_checkpoint<double>(path, {}, {{"w", t}});
  auto wrong_shape = parameter<double>(Matrix<double>::Zero(2, 3));
  CHECK_THROWS_AS(load_checkpoint<double>(path, {{"w", wrong_shape}}),
                  CheckpointError);
  auto other = parameter<double>(Matrix<double>::Zero(2, 2));
  CHECK_THROWS_AS(load_checkpoint<double>(path, {{"other", other}}),
                  CheckpointError);
  std::remove(path.c_str());
}

TEST_CASE("gold edge labels flag corrupted spans") {
  auto xs = small_corpus(40);
  bool saw_nonfactual_edge = false, saw_clean = false;
  for (const auto& ex : xs) {
    auto gold = gold_edge_labels(ex);
    if (gold.empty()) continue;
    if (ex.label == Label::NonFactual) {
      REQUIRE(!ex.nonfactual_spans.empty());
      if (aggregate_edges(gold) == Label::NonFactual)
        saw_nonfactual_edge = true;
    } else {
      saw_clean = true;
      CHECK(aggregate_edges(gold) == Label::Factual);
    }
  }
  CHECK(saw_nonfactual_edge);
  CHECK(saw_clean);
}

TEST_CASE("sentence training improves dev balanced accuracy") {
  SubwordVocab v = shared_vocab();
  auto cfg = tiny_config(v);
  auto xs = small_corpus(120, 3);
  auto [train, dev, test] = split_dataset(xs, 0.7, 0.29, 17);

  FactGraphModel<double> model(v, cfg, 1);
  double before = dev_metric(model, dev, TrainMode::Sentence);

  TrainConfig tc;
  tc.epochs = 4;
  tc.lr = 3e-3;  // small model, tiny corpus: larger steps keep the test fast
  auto result = train_model(model, train, dev, TrainMode::Sentence, tc);
  CHECK(result.dev_bacc_per_epoch.size() == 4);
  CHECK(result.best_epoch >= 0);
  CHECK(result.best_dev_bacc >= before);
  // the restored parameters reproduce the best recorded score
  CHECK(dev_metric(model, dev, TrainMode::Sentence) ==
        doctest::Approx(result.best_dev_bacc));
}

TEST_CASE("edge training runs and selects a best epoch") {
  SubwordVocab v = shared_vocab();
  auto cfg = tiny_config(v);
  auto xs = small_corpus(60, 5);
  auto [train, dev, test] = split_dataset(xs, 0.7, 0.29, 23);

  FactGraphModel<double> model(v, cfg, 2);
  TrainConfig tc;
  tc.epochs = 2;
  tc.lr = 1e-3;
  auto result = train_model(model, train, dev, TrainMode::Edge, tc);
  CHECK(result.dev_bacc_per_epoch.size() == 2);
  CHECK(result.best_epoch >= 0);

  auto [pred, gold] = evaluate_edges(model, dev);
  CHECK(pred.size() == gold.size());
  CHECK(!pred.empty());
}

TEST_CASE("training rejects empty or unlabeled splits") {
  SubwordVocab v = shared_vocab();
  FactGraphModel<double> model(v, tiny_config(v), 1);
  auto xs = small_corpus(4);
  TrainConfig tc;
  CHECK_THROWS_AS(
      train_model(model, {}, xs, TrainMode::Sentence, tc), EmptySplitError);
  auto unlabeled = xs;
  unlabeled[0].label.reset();
  CHECK_THROWS_AS(
      train_model(model, unlabeled, xs, TrainMode::Sentence, tc),
      EmptySplitError);
}

TEST_CASE("k sweep is deterministic") {
  SubwordVocab v = shared_vocab();
  auto cfg = tiny_config(v);
  auto xs = small_corpus(24, 9);
  auto [train, dev, test] = split_dataset(xs, 0.5, 0.25, 31);

  TrainConfig tc;
  tc.epochs = 1;
  auto a = k_sweep<double>(v, cfg, train, dev, test, tc, {1, 3});
  auto b = k_sweep<double>(v, cfg, train, dev, test, tc, {1, 3});
  REQUIRE(a.size() == 2);
  CHECK(a[0].k == 1);
  CHECK(a[1].k == 3);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i].test_bacc == b[i].test_bacc);
}
