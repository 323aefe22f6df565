#include "factgraph/example.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace factgraph {

std::vector<std::string> word_tokens(const std::string& sentence) {
  std::vector<std::string> out;
  std::istringstream in(sentence);
  std::string w;
  while (in >> w) {
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back())) &&
           w.back() != '-')
      w.pop_back();
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front())) &&
           w.front() != '-')
      w.erase(w.begin());
    for (char& c : w)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(w);
  }
  return out;
}

std::vector<std::pair<int, int>> word_char_spans(const std::string& sentence) {
  std::vector<std::pair<int, int>> out;
  int i = 0, n = static_cast<int>(sentence.size());
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
    if (i >= n) break;
    int j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(sentence[j]))) ++j;
    out.emplace_back(i, j);
    i = j;
  }
  return out;
}

TfidfEmbedder::TfidfEmbedder(const std::vector<std::string>& corpus_sentences) {
  std::map<std::string, long> doc_freq;
  for (const std::string& s : corpus_sentences) {
    std::set<std::string> seen;
    for (const std::string& w : word_tokens(s))
      if (!w.empty()) seen.insert(w);
    for (const std::string& w : seen) ++doc_freq[w];
  }
  const double n = static_cast<double>(std::max<std::size_t>(
      corpus_sentences.size(), 1));
  for (const auto& [w, df] : doc_freq)
    idf_[w] = std::log((n + 1.0) / (static_cast<double>(df) + 1.0)) + 1.0;
  default_idf_ = std::log(n + 1.0) + 1.0;
}

std::map<std::string, double> TfidfEmbedder::embed(
    const std::string& sentence) const {
  std::map<std::string, double> tf;
  for (const std::string& w : word_tokens(sentence))
    if (!w.empty()) tf[w] += 1.0;
  for (auto& [w, v] : tf) {
    auto it = idf_.find(w);
    v *= (it == idf_.end() ? default_idf_ : it->second);
  }
  return tf;
}

double TfidfEmbedder::cosine(const std::map<std::string, double>& a,
                             const std::map<std::string, double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [w, v] : a) {
    na += v * v;
    auto it = b.find(w);
    if (it != b.end()) dot += v * it->second;
  }
  for (const auto& [w, v] : b) nb += v * v;
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

std::vector<int> select_doc_graphs(const std::vector<std::string>& doc_sentences,
                                   const std::string& summary, int k) {
  if (doc_sentences.empty())
    throw EmptyDocumentError("select_doc_graphs: empty document");
  if (k < 1) throw std::invalid_argument("select_doc_graphs: k must be >= 1");
  TfidfEmbedder embedder(doc_sentences);
  auto sum_vec = embedder.embed(summary);
  std::vector<std::pair<double, int>> scored;
  for (std::size_t i = 0; i < doc_sentences.size(); ++i)
    scored.emplace_back(
        -TfidfEmbedder::cosine(embedder.embed(doc_sentences[i]), sum_vec),
        static_cast<int>(i));
  std::stable_sort(scored.begin(), scored.end());
  std::vector<int> out;
  for (std::size_t i = 0; i < scored.size() && i < static_cast<std::size_t>(k);
       ++i)
    out.push_back(scored[i].second);
  return out;
}

std::string strip_sense_suffix(const std::string& concept_label) {
  std::size_t dash = concept_label.rfind('-');
  if (dash == std::string::npos || dash + 1 >= concept_label.size())
    return concept_label;
  for (std::size_t i = dash + 1; i < concept_label.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(concept_label[i])))
      return concept_label;
  return concept_label.substr(0, dash);
}

std::map<std::string, std::vector<int>> lexical_match_alignments(
    const AmrGraph& summary_graph, const std::string& summary_sentence) {
  std::map<std::string, std::vector<int>> out;
  std::vector<std::string> words = word_tokens(summary_sentence);
  for (const auto& [var, concept_label] : summary_graph.instances()) {
    std::string base = strip_sense_suffix(concept_label);
    for (char& c : base)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::vector<int> hits;
    for (std::size_t w = 0; w < words.size(); ++w)
      if (words[w] == base) hits.push_back(static_cast<int>(w));
    if (!hits.empty()) out[var] = hits;
  }
  return out;
}

std::vector<Label> edge_label_from_spans(
    const AmrGraph& summary_graph, const std::string& summary_sentence,
    const std::map<std::string, std::vector<int>>& alignments,
    const std::vector<std::pair<int, int>>& nonfactual_spans) {
  const int len = static_cast<int>(summary_sentence.size());
  for (const auto& [b, e] : nonfactual_spans)
    if (b < 0 || e > len || b >= e)
      throw SpanOutOfBoundsError("span [" + std::to_string(b) + "," +
                                 std::to_string(e) + ") out of bounds");
  for (const auto& [var, idx] : alignments)
    if (!summary_graph.has_variable(var))
      throw std::invalid_argument("alignment for unknown variable: " + var);

  auto spans = word_char_spans(summary_sentence);
  std::set<int> flagged_words;
  for (std::size_t w = 0; w < spans.size(); ++w)
    for (const auto& [b, e] : nonfactual_spans)
      if (spans[w].first < e && b < spans[w].second)
        flagged_words.insert(static_cast<int>(w));

  std::set<std::string> flagged_vars;
  for (const auto& [var, idx] : alignments)
    for (int w : idx)
      if (flagged_words.count(w)) flagged_vars.insert(var);

  std::vector<Label> out;
  for (const AmrEdge& e : summary_graph.edges()) {
    bool bad = flagged_vars.count(e.source) ||
               (!e.target_is_constant && flagged_vars.count(e.target));
    out.push_back(bad ? Label::NonFactual : Label::Factual);
  }
  return out;
}

Label aggregate_edges(const std::vector<Label>& edge_labels) {
  if (edge_labels.empty())
    throw NoEdgesError("aggregate_edges: no edges to aggregate");
  for (Label l : edge_labels)
    if (l == Label::NonFactual) return Label::NonFactual;
  return Label::Factual;
}

double summary_score(const std::vector<Label>& sentence_labels) {
  if (sentence_labels.empty())
    throw EmptyInputError("summary_score: no sentence labels");
  double sum = 0.0;
  for (Label l : sentence_labels) sum += (l == Label::Factual ? 1.0 : 0.0);
  return sum / static_cast<double>(sentence_labels.size());
}

}  // namespace factgraph
