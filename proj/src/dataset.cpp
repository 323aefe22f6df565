#include "factgraph/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "factgraph/rng.hpp"

namespace factgraph {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {
    "id",          "origin",           "document",   "doc_amrs",
    "summary_sentence", "summary_amr", "label",      "nonfactual_spans",
    "alignments"};

std::vector<std::string> string_array(const json& j, int line,
                                      const std::string& key) {
  if (!j.is_array()) throw SchemaViolation(line, key + " must be an array");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string())
      throw SchemaViolation(line, key + " entries must be strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

FactualityExample parse_record(const json& j, int line) {
  if (!j.is_object()) throw SchemaViolation(line, "record must be an object");
  for (const auto& [key, _] : j.items())
    if (!kKnownKeys.count(key))
      throw SchemaViolation(line, "unknown key '" + key + "'");
  for (const char* key :
       {"id", "origin", "document", "doc_amrs", "summary_sentence",
        "summary_amr"})
    if (!j.contains(key))
      throw SchemaViolation(line, std::string("missing key '") + key + "'");

  FactualityExample ex;
  if (!j["id"].is_string()) throw SchemaViolation(line, "id must be a string");
  ex.id = j["id"].get<std::string>();
  if (!j["origin"].is_string())
    throw SchemaViolation(line, "origin must be a string");
  ex.origin = j["origin"].get<std::string>();
  if (ex.origin != "cnndm" && ex.origin != "xsum" && ex.origin != "synthetic")
    throw SchemaViolation(line, "origin must be cnndm, xsum or synthetic");
  ex.document = string_array(j["document"], line, "document");
  ex.doc_amrs = string_array(j["doc_amrs"], line, "doc_amrs");
  if (ex.document.size() != ex.doc_amrs.size())
    throw SchemaViolation(line, "document and doc_amrs length mismatch");
  if (!j["summary_sentence"].is_string())
    throw SchemaViolation(line, "summary_sentence must be a string");
  ex.summary_sentence = j["summary_sentence"].get<std::string>();
  if (!j["summary_amr"].is_string())
    throw SchemaViolation(line, "summary_amr must be a string");
  ex.summary_amr = j["summary_amr"].get<std::string>();

  if (j.contains("label")) {
    if (!j["label"].is_string())
      throw SchemaViolation(line, "label must be a string");
    std::string l = j["label"].get<std::string>();
    if (l == "factual")
      ex.label = Label::Factual;
    else if (l == "non_factual")
      ex.label = Label::NonFactual;
    else
      throw SchemaViolation(line, "label must be factual or non_factual");
  }
  if (j.contains("nonfactual_spans")) {
    if (!j["nonfactual_spans"].is_array())
      throw SchemaViolation(line, "nonfactual_spans must be an array");
    for (const auto& s : j["nonfactual_spans"]) {
      if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() ||
          !s[1].is_number_integer())
        throw SchemaViolation(line,
                              "nonfactual_spans entries must be [start, end]");
      ex.nonfactual_spans.emplace_back(s[0].get<int>(), s[1].get<int>());
    }
  }
  if (j.contains("alignments")) {
    if (!j["alignments"].is_object())
      throw SchemaViolation(line, "alignments must be an object");
    for (const auto& [var, idx] : j["alignments"].items()) {
      if (!idx.is_array())
        throw SchemaViolation(line, "alignment values must be arrays");
      std::vector<int> words;
      for (const auto& w : idx) {
        if (!w.is_number_integer())
          throw SchemaViolation(line, "alignment indices must be integers");
        words.push_back(w.get<int>());
      }
      ex.alignments[var] = std::move(words);
    }
  }
  return ex;
}

}  // namespace

std::vector<FactualityExample> parse_dataset_lines(
    const std::string& text, std::vector<std::string>* warnings) {
  std::vector<FactualityExample> out;
  std::set<std::string> seen_ids;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaViolation(lineno, e.what());
    }
    FactualityExample ex = parse_record(j, lineno);
    if (ex.id.empty()) throw SchemaViolation(lineno, "id must be nonempty");
    if (!seen_ids.insert(ex.id).second) {
      if (warnings)
        warnings->push_back("line " + std::to_string(lineno) +
                            ": duplicate id '" + ex.id + "' dropped");
      continue;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<FactualityExample> load_dataset(const std::string& path,
                                            std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset_lines(buf.str(), warnings);
}

std::string dataset_record_json(const FactualityExample& ex) {
  json j;
  j["id"] = ex.id;
  j["origin"] = ex.origin;
  j["document"] = ex.document;
  j["doc_amrs"] = ex.doc_amrs;
  j["summary_sentence"] = ex.summary_sentence;
  j["summary_amr"] = ex.summary_amr;
  if (ex.label)
    j["label"] = (*ex.label == Label::Factual) ? "factual" : "non_factual";
  if (!ex.nonfactual_spans.empty()) {
    json spans = json::array();
    for (const auto& [b, e] : ex.nonfactual_spans)
      spans.push_back(json::array({b, e}));
    j["nonfactual_spans"] = spans;
  }
  if (!ex.alignments.empty()) {
    json a = json::object();
    for (const auto& [var, idx] : ex.alignments) a[var] = idx;
    j["alignments"] = a;
  }
  return j.dump();
}

void save_dataset(const std::string& path,
                  const std::vector<FactualityExample>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (const auto& r : records) out << dataset_record_json(r) << "\n";
}

DatasetSplit split_dataset(const std::vector<FactualityExample>& records,
                           double train_frac, double dev_frac, uint64_t seed) {
  if (train_frac <= 0.0 || dev_frac <= 0.0 || train_frac + dev_frac >= 1.0)
    throw std::invalid_argument("split fractions must be positive with room "
                                "left for the test split");
  // strata: factual / non-factual / unlabeled
  std::vector<std::vector<int>> strata(3);
  for (std::size_t i = 0; i < records.size(); ++i) {
    int s = !records[i].label ? 2
            : (*records[i].label == Label::Factual ? 0 : 1);
    strata[s].push_back(static_cast<int>(i));
  }
  DatasetSplit out;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& idx = strata[s];
    Rng rng(derive_seed(seed, s));
    rng.shuffle(idx);
    std::size_t n = idx.size();
    std::size_t n_train = static_cast<std::size_t>(train_frac * n + 0.5);
    std::size_t n_dev = static_cast<std::size_t>(dev_frac * n + 0.5);
    n_train = std::min(n_train, n);
    n_dev = std::min(n_dev, n - n_train);
    for (std::size_t i = 0; i < n; ++i) {
      const FactualityExample& r = records[idx[i]];
      if (i < n_train)
        out.train.push_back(r);
      else if (i < n_train + n_dev)
        out.dev.push_back(r);
      else
        out.test.push_back(r);
    }
  }
  return out;
}

}  // namespace factgraph
