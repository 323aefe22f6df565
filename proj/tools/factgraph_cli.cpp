// Command-line front end: Penman inspection, canonicalization statistics,
// Smatch scoring, synthetic corpus generation, model training/scoring, and
// the metrics/correlation harness.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "factgraph/checkpoint.hpp"
#include "factgraph/dataset.hpp"
#include "factgraph/smatch.hpp"
#include "factgraph/synth.hpp"
#include "factgraph/train.hpp"

using namespace factgraph;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& m) : std::runtime_error(m) {}
};

using Model = FactGraphModel<float>;

// Vocabulary over everything the model will tokenize: sentences plus the
// label surfaces of every graph node.
SubwordVocab vocab_from_records(const std::vector<FactualityExample>& records,
                                int max_size) {
  std::vector<std::string> lines;
  for (const auto& ex : records) {
    for (const auto& s : ex.document) lines.push_back(normalize_for_vocab(s));
    lines.push_back(normalize_for_vocab(ex.summary_sentence));
    std::vector<std::string> amrs = ex.doc_amrs;
    amrs.push_back(ex.summary_amr);
    for (const auto& amr : amrs) {
      std::string line;
      for (const auto& node : to_bipartite(parse_penman(amr)).nodes) {
        if (!line.empty()) line += ' ';
        line += node_surface(node);
      }
      lines.push_back(line);
    }
  }
  return build_vocab(lines, max_size);
}

std::map<std::string, std::string> model_meta(const Model::Config& cfg,
                                              uint64_t seed,
                                              const std::string& mode) {
  const BackboneConfig& b = cfg.backbone;
  return {{"format", "factgraph-model"},
          {"mode", mode},
          {"layers", std::to_string(b.layers)},
          {"d_model", std::to_string(b.d_model)},
          {"heads", std::to_string(b.heads)},
          {"d_ff", std::to_string(b.d_ff)},
          {"max_seq", std::to_string(b.max_seq)},
          {"adapter_dim", std::to_string(b.adapter_dim)},
          {"pool_heads", std::to_string(b.pool_heads)},
          {"vocab_size", std::to_string(b.vocab_size)},
          {"k", std::to_string(cfg.k)},
          {"mean_graph_reps", cfg.mean_graph_reps ? "1" : "0"},
          {"max_graph_nodes", std::to_string(cfg.max_graph_nodes)},
          {"model_seed", std::to_string(seed)}};
}

// Reads the checkpoint twice: once for metadata to rebuild the model
// shape, then into the freshly constructed parameters.
Model load_model(const std::string& path, const SubwordVocab& vocab,
                 std::string* mode_out = nullptr) {
  auto meta = read_checkpoint_meta(path);
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end())
      throw CheckpointError("checkpoint metadata missing key: " + key);
    return it->second;
  };
  if (need("format") != "factgraph-model")
    throw CheckpointError("not a model checkpoint: " + path);
  Model::Config cfg;
  cfg.backbone.layers = std::stoi(need("layers"));
  cfg.backbone.d_model = std::stoi(need("d_model"));
  cfg.backbone.heads = std::stoi(need("heads"));
  cfg.backbone.d_ff = std::stoi(need("d_ff"));
  cfg.backbone.max_seq = std::stoi(need("max_seq"));
  cfg.backbone.adapter_dim = std::stoi(need("adapter_dim"));
  cfg.backbone.pool_heads = std::stoi(need("pool_heads"));
  cfg.k = std::stoi(need("k"));
  cfg.mean_graph_reps = need("mean_graph_reps") == "1";
  cfg.max_graph_nodes = std::stoi(need("max_graph_nodes"));
  if (std::stoi(need("vocab_size")) != vocab.size())
    throw CheckpointError("vocabulary size does not match the checkpoint");
  uint64_t seed = std::stoull(need("model_seed"));
  Model model(vocab, cfg, seed);
  load_checkpoint<float>(path, numbered(model.trainable_params()));
  if (mode_out) *mode_out = need("mode");
  return model;
}

std::vector<FactualityExample> labeled_only(
    const std::vector<FactualityExample>& records) {
  std::vector<FactualityExample> out;
  for (const auto& ex : records)
    if (ex.label) out.push_back(ex);
  return out;
}

// --- subcommand bodies -----------------------------------------------------

int run_parse(const std::string& input, bool print) {
  auto graphs = read_penman_file(input);
  int problems = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    for (const std::string& msg : validate(graphs[i])) {
      std::cout << "graph " << i << ": " << msg << "\n";
      ++problems;
    }
    AmrGraph back = parse_penman(serialize_penman(graphs[i]));
    auto a = triples(graphs[i]), b = triples(back);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) {
      std::cout << "graph " << i << ": round-trip changed the triple set\n";
      ++problems;
    }
    if (print) std::cout << serialize_penman(graphs[i]) << "\n\n";
  }
  std::cout << graphs.size() << " graphs, " << problems << " problems\n";
  return problems == 0 ? 0 : kExitData;
}

int run_canon(const std::string& input, int vocab_max, int max_nodes) {
  auto graphs = read_penman_file(input);
  std::vector<std::string> lines;
  for (const auto& g : graphs) {
    std::string line;
    for (const auto& node : to_bipartite(g).nodes) {
      if (!line.empty()) line += ' ';
      line += node_surface(node);
    }
    lines.push_back(line);
  }
  SubwordVocab vocab = build_vocab(lines, vocab_max);
  std::cout << "graph\tamr_nodes\tamr_edges\tbip_nodes\tbip_edges\ttokens\t"
               "tok_edges\ttruncated\n";
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    BipartiteGraph bg = to_bipartite(graphs[i]);
    TokenGraph tg = to_token_graph(bg, vocab, max_nodes);
    std::cout << i << "\t" << amr_node_count(graphs[i]) << "\t"
              << graphs[i].num_edges() << "\t" << bg.nodes.size() << "\t"
              << bg.edges.size() << "\t" << tg.nodes.size() << "\t"
              << tg.edges.size() << "\t" << (tg.truncated ? 1 : 0) << "\n";
  }
  return 0;
}

int run_smatch(const std::string& gold, const std::string& pred, int restarts,
               uint64_t seed, const std::string& report_path) {
  auto g1 = read_penman_file(gold);
  auto g2 = read_penman_file(pred);
  if (g1.size() != g2.size())
    throw UsageError("gold and pred files hold different graph counts");
  std::ofstream report;
  if (!report_path.empty()) {
    report.open(report_path);
    if (!report) throw std::runtime_error("cannot write " + report_path);
  }
  double psum = 0, rsum = 0, fsum = 0;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    SmatchResult r = smatch(g1[i], g2[i], restarts, seed);
    std::cout << "pair " << i << "  precision " << r.precision << "  recall "
              << r.recall << "  f1 " << r.f1 << "\n";
    if (report)
      report << i << "\t" << r.precision << "\t" << r.recall << "\t" << r.f1
             << "\n";
    psum += r.precision;
    rsum += r.recall;
    fsum += r.f1;
  }
  if (g1.empty()) throw UsageError("no graphs to compare");
  double n = static_cast<double>(g1.size());
  std::cout << "average  precision " << psum / n << "  recall " << rsum / n
            << "  f1 " << fsum / n << "\n";
  return 0;
}

int run_synth(const std::string& out, int num, uint64_t seed,
              double corruption_rate, double paraphrase_rate) {
  SynthConfig cfg;
  cfg.num_examples = num;
  cfg.seed = seed;
  cfg.corruption_rate = corruption_rate;
  cfg.pronoun_paraphrase_rate = paraphrase_rate;
  auto records = generate_corpus(cfg);
  save_dataset(out, records);
  long factual = 0;
  for (const auto& ex : records)
    if (ex.label == Label::Factual) ++factual;
  std::cout << "wrote " << records.size() << " records (" << factual
            << " factual, " << records.size() - factual << " non-factual) to "
            << out << "\n";
  return 0;
}

int run_train(const std::string& data, const std::string& ckpt_out,
              const std::string& vocab_out, const std::string& mode,
              TrainConfig tc, Model::Config cfg, uint64_t model_seed,
              double train_frac, double dev_frac,
              const std::vector<int>& sweep_ks) {
  auto records = labeled_only(load_dataset(data));
  auto split = split_dataset(records, train_frac, dev_frac, tc.seed);
  SubwordVocab vocab = vocab_from_records(records, 4096);
  cfg.backbone.vocab_size = vocab.size();

  if (!sweep_ks.empty()) {
    std::cout << "k\ttest_bacc\n";
    for (const auto& row :
         k_sweep<float>(vocab, cfg, split.train, split.dev, split.test, tc,
                        sweep_ks))
      std::cout << row.k << "\t" << row.test_bacc << "\n";
    return 0;
  }

  Model model(vocab, cfg, model_seed);
  TrainMode m = mode == "edge" ? TrainMode::Edge : TrainMode::Sentence;
  TrainResult result = train_model(model, split.train, split.dev, m, tc,
                                   &std::cout);
  std::cout << "best dev_bacc " << result.best_dev_bacc << " at epoch "
            << result.best_epoch + 1 << "\n";
  if (!split.test.empty()) {
    std::vector<Label> gold;
    for (const auto& ex : split.test) gold.push_back(*ex.label);
    std::cout << "test bacc "
              << bacc(predict_sentences(model, split.test,
                                        m == TrainMode::Edge),
                      gold)
              << "\n";
  }
  if (!vocab_out.empty()) vocab.save(vocab_out, "trained with " + data);
  if (!ckpt_out.empty())
    save_checkpoint(ckpt_out, model_meta(model.config(), model_seed, mode),
                    numbered(model.trainable_params()));
  return 0;
}

int run_score(const std::string& data, const std::string& ckpt,
              const std::string& vocab_path, std::string mode,
              const std::string& out_path) {
  auto records = load_dataset(data);
  SubwordVocab vocab = SubwordVocab::load(vocab_path);
  std::string trained_mode;
  Model model = load_model(ckpt, vocab, &trained_mode);
  if (mode.empty()) mode = trained_mode;

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    os = &file;
  }

  std::vector<Label> sentence_labels;
  for (const auto& ex : records) {
    if (mode == "edge") {
      SentencePrediction agg = model.aggregated_score(ex);
      sentence_labels.push_back(agg.label);
      AmrGraph gs = parse_penman(ex.summary_amr);
      if (!gs.edges().empty()) {
        auto preds = model.edge_scores(ex);
        for (std::size_t e = 0; e < preds.size(); ++e)
          *os << ex.id << "\tedge\t" << e << "\t" << preds[e].edge.source
              << "\t" << preds[e].edge.relation << "\t" << preds[e].edge.target
              << "\t"
              << (preds[e].label == Label::Factual ? "factual" : "non_factual")
              << "\t" << preds[e].prob_factual << "\n";
      }
      *os << ex.id << "\tsentence\t"
          << (agg.label == Label::Factual ? "factual" : "non_factual") << "\t"
          << agg.prob_factual << "\n";
    } else {
      SentencePrediction p = model.sentence_score(ex);
      sentence_labels.push_back(p.label);
      *os << ex.id << "\tsentence\t"
          << (p.label == Label::Factual ? "factual" : "non_factual") << "\t"
          << p.prob_factual << "\n";
    }
  }
  if (mode == "summary" || mode == "edge" || mode == "sentence") {
    *os << "summary_score\t" << summary_score(sentence_labels) << "\n";
  }
  return 0;
}

int run_eval(const std::string& data, const std::string& ckpt,
             const std::string& vocab_path, std::string mode) {
  auto records = labeled_only(load_dataset(data));
  if (records.empty()) throw UsageError("no labeled records to evaluate");
  SubwordVocab vocab = SubwordVocab::load(vocab_path);
  std::string trained_mode;
  Model model = load_model(ckpt, vocab, &trained_mode);
  if (mode.empty()) mode = trained_mode;

  std::vector<Label> gold;
  for (const auto& ex : records) gold.push_back(*ex.label);
  auto preds = predict_sentences(model, records, mode == "edge");
  std::cout << classification_report(preds, gold).to_text();
  if (mode == "edge") {
    auto [epred, egold] = evaluate_edges(model, records);
    if (!epred.empty()) {
      std::cout << "edge-level:\n"
                << classification_report(epred, egold).to_text();
    }
  }
  return 0;
}

// Comma-separated table with a header row; quoting is not supported.
std::vector<std::map<std::string, double>> read_csv(const std::string& path,
                                                    std::vector<std::string>*
                                                        header_out) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw UsageError("empty table: " + path);
  std::vector<std::string> header;
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
  if (header_out) *header_out = header;
  std::vector<std::map<std::string, double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::map<std::string, double> row;
    std::size_t col = 0;
    for (std::string cell; std::getline(ls, cell, ','); ++col) {
      if (col >= header.size())
        throw UsageError("line " + std::to_string(lineno) +
                         ": more cells than header columns");
      try {
        row[header[col]] = std::stod(cell);
      } catch (const std::exception&) {
        throw UsageError("line " + std::to_string(lineno) +
                         ": non-numeric cell in column " + header[col]);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_corr(const std::string& input, const std::string& xcol,
             const std::string& ycol, const std::vector<std::string>& covcols) {
  auto rows = read_csv(input, nullptr);
  auto column = [&](const std::string& name) {
    std::vector<double> out;
    for (const auto& row : rows) {
      auto it = row.find(name);
      if (it == row.end()) throw UsageError("missing column: " + name);
      out.push_back(it->second);
    }
    return out;
  };
  auto x = column(xcol);
  auto y = column(ycol);
  if (covcols.empty()) {
    auto [pr, pp] = pearson(x, y);
    auto [sr, sp] = spearman(x, y);
    std::cout << "pearson " << pr << " (p " << pp << ")\n"
              << "spearman " << sr << " (p " << sp << ")\n";
  } else {
    std::vector<std::vector<double>> cov;
    for (const auto& c : covcols) cov.push_back(column(c));
    auto [pr, pp] = partial_pearson(x, y, cov);
    auto [sr, sp] = partial_spearman(x, y, cov);
    std::cout << "partial pearson " << pr << " (p " << pp << ")\n"
              << "partial spearman " << sr << " (p " << sp << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FactGraph factuality toolkit"};
  app.require_subcommand(1);

  // parse
  std::string parse_input;
  bool parse_print = false;
  auto* cmd_parse = app.add_subcommand("parse", "validate and round-trip a Penman file");
  cmd_parse->add_option("--input", parse_input, "Penman file")->required();
  cmd_parse->add_flag("--print", parse_print, "echo normalized graphs");

  // canon
  std::string canon_input;
  int canon_vocab = 2048, canon_max_nodes = 512;
  auto* cmd_canon = app.add_subcommand("canon", "token-graph statistics for a Penman file");
  cmd_canon->add_option("--input", canon_input, "Penman file")->required();
  cmd_canon->add_option("--vocab-size", canon_vocab, "max vocabulary size");
  cmd_canon->add_option("--max-nodes", canon_max_nodes, "token-node cap");

  // smatch
  std::string sm_gold, sm_pred, sm_report;
  int sm_restarts = 8;
  uint64_t sm_seed = 0;
  auto* cmd_smatch = app.add_subcommand("smatch", "Smatch scores between two Penman files");
  cmd_smatch->add_option("--gold", sm_gold, "gold Penman file")->required();
  cmd_smatch->add_option("--pred", sm_pred, "predicted Penman file")->required();
  cmd_smatch->add_option("--restarts", sm_restarts, "hill-climb restarts");
  cmd_smatch->add_option("--seed", sm_seed, "restart seed");
  cmd_smatch->add_option("--report", sm_report, "machine-readable output file");

  // synth
  std::string synth_out;
  int synth_num = 2000;
  uint64_t synth_seed = 1;
  double synth_rate = 0.5, synth_para = 0.1;
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic corruption corpus");
  cmd_synth->add_option("--out", synth_out, "dataset output path")->required();
  cmd_synth->add_option("--num", synth_num, "number of examples");
  cmd_synth->add_option("--seed", synth_seed, "generator seed");
  cmd_synth->add_option("--corruption-rate", synth_rate, "fraction corrupted");
  cmd_synth->add_option("--paraphrase-rate", synth_para, "pronoun paraphrase rate");

  // train
  std::string tr_data, tr_ckpt, tr_vocab, tr_mode = "sentence", tr_sweep;
  TrainConfig tr_cfg;
  Model::Config tr_model_cfg;
  uint64_t tr_model_seed = 1;
  double tr_train_frac = 0.8, tr_dev_frac = 0.1;
  auto* cmd_train = app.add_subcommand("train", "train a factuality model");
  cmd_train->add_option("--data", tr_data, "dataset file")->required();
  cmd_train->add_option("--checkpoint", tr_ckpt, "checkpoint output path");
  cmd_train->add_option("--vocab", tr_vocab, "vocabulary output path");
  cmd_train->add_option("--mode", tr_mode, "sentence | edge")
      ->check(CLI::IsMember({"sentence", "edge"}));
  cmd_train->add_option("--lr", tr_cfg.lr, "learning rate");
  cmd_train->add_option("--batch", tr_cfg.batch_size, "batch size");
  cmd_train->add_option("--epochs", tr_cfg.epochs, "training epochs");
  cmd_train->add_option("--seed", tr_cfg.seed, "shuffle/split seed");
  cmd_train->add_option("--model-seed", tr_model_seed, "parameter init seed");
  cmd_train->add_option("--adapter-dim", tr_model_cfg.backbone.adapter_dim,
                        "adapter bottleneck size");
  cmd_train->add_option("--k", tr_model_cfg.k, "document graphs per example");
  cmd_train->add_option("--train-frac", tr_train_frac, "train split fraction");
  cmd_train->add_option("--dev-frac", tr_dev_frac, "dev split fraction");
  cmd_train->add_option("--sweep-k", tr_sweep,
                        "comma-separated k values; runs the sweep harness");

  // score
  std::string sc_data, sc_ckpt, sc_vocab, sc_mode, sc_out;
  auto* cmd_score = app.add_subcommand("score", "score a dataset with a trained model");
  cmd_score->add_option("--data", sc_data, "dataset file")->required();
  cmd_score->add_option("--checkpoint", sc_ckpt, "model checkpoint")->required();
  cmd_score->add_option("--vocab", sc_vocab, "vocabulary file")->required();
  cmd_score->add_option("--mode", sc_mode, "sentence | edge | summary")
      ->check(CLI::IsMember({"sentence", "edge", "summary", ""}));
  cmd_score->add_option("--out", sc_out, "write records here instead of stdout");

  // eval
  std::string ev_data, ev_ckpt, ev_vocab, ev_mode;
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a trained model on labeled data");
  cmd_eval->add_option("--data", ev_data, "dataset file")->required();
  cmd_eval->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required();
  cmd_eval->add_option("--vocab", ev_vocab, "vocabulary file")->required();
  cmd_eval->add_option("--mode", ev_mode, "sentence | edge")
      ->check(CLI::IsMember({"sentence", "edge", ""}));

  // corr
  std::string co_input, co_x, co_y;
  std::vector<std::string> co_cov;
  auto* cmd_corr = app.add_subcommand("corr", "correlate two numeric columns of a CSV file");
  cmd_corr->add_option("--input", co_input, "CSV file with a header row")->required();
  cmd_corr->add_option("--x", co_x, "first column name")->required();
  cmd_corr->add_option("--y", co_y, "second column name")->required();
  cmd_corr->add_option("--covariate", co_cov, "covariate column (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (cmd_parse->parsed()) return run_parse(parse_input, parse_print);
    if (cmd_canon->parsed())
      return run_canon(canon_input, canon_vocab, canon_max_nodes);
    if (cmd_smatch->parsed())
      return run_smatch(sm_gold, sm_pred, sm_restarts, sm_seed, sm_report);
    if (cmd_synth->parsed())
      return run_synth(synth_out, synth_num, synth_seed, synth_rate,
                       synth_para);
    if (cmd_train->parsed()) {
      std::vector<int> ks;
      std::stringstream ss(tr_sweep);
      for (std::string part; std::getline(ss, part, ',');)
        if (!part.empty()) ks.push_back(std::stoi(part));
      return run_train(tr_data, tr_ckpt, tr_vocab, tr_mode, tr_cfg,
                       tr_model_cfg, tr_model_seed, tr_train_frac, tr_dev_frac,
                       ks);
    }
    if (cmd_score->parsed())
      return run_score(sc_data, sc_ckpt, sc_vocab, sc_mode, sc_out);
    if (cmd_eval->parsed()) return run_eval(ev_data, ev_ckpt, ev_vocab, ev_mode);
    if (cmd_corr->parsed()) return run_corr(co_input, co_x, co_y, co_cov);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
