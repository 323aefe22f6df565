#include "factgraph/canon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

namespace factgraph {

namespace {

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_ws(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// SubwordVocab
// ---------------------------------------------------------------------------

void SubwordVocab::add_token(const std::string& tok) {
  if (index_.count(tok)) return;
  index_[tok] = static_cast<int>(tokens_.size());
  tokens_.push_back(tok);
  max_token_len_ = std::max(max_token_len_, tok.size());
}

std::vector<int> SubwordVocab::encode_segment(const std::string& segment) const {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < segment.size()) {
    std::size_t best_len = 0;
    int best_id = -1;
    std::size_t cap = std::min(max_token_len_, segment.size() - i);
    for (std::size_t len = cap; len >= 1; --len) {
      auto it = index_.find(segment.substr(i, len));
      if (it != index_.end()) {
        best_len = len;
        best_id = it->second;
        break;
      }
    }
    if (best_id < 0) {
      out.push_back(kUnk);
      ++i;
    } else {
      out.push_back(best_id);
      i += best_len;
    }
  }
  return out;
}

std::vector<int> SubwordVocab::encode(
    const std::string& text, std::vector<std::pair<int, int>>* spans) const {
  std::vector<int> out;
  if (spans) spans->clear();
  for (const std::string& w : split_ws(text)) {
    int begin = static_cast<int>(out.size());
    auto ids = encode_segment(w);
    out.insert(out.end(), ids.begin(), ids.end());
    if (spans) spans->emplace_back(begin, static_cast<int>(out.size()));
  }
  return out;
}

std::string SubwordVocab::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) out += token(id);
  return out;
}

void SubwordVocab::save(const std::string& path,
                        const std::string& header_note) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write vocab file: " + path);
  f << "# factgraph subword vocabulary; line number = token id\n";
  if (!header_note.empty()) f << "# " << header_note << "\n";
  for (const std::string& t : tokens_) f << t << "\n";
}

SubwordVocab SubwordVocab::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open vocab file: " + path);
  SubwordVocab v;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line[0] == '#') continue;
    v.add_token(line);
  }
  if (v.size() < SubwordVocab::kNumReserved)
    throw std::runtime_error("vocab file missing reserved tokens: " + path);
  return v;
}

SubwordVocab build_vocab(const std::vector<std::string>& corpus, int max_size) {
  if (corpus.empty()) throw EmptyCorpusError();

  // word -> count, each word as a symbol sequence
  std::map<std::string, long> word_counts;
  for (const std::string& line : corpus)
    for (const std::string& w : split_ws(lowercase(line))) ++word_counts[w];
  if (word_counts.empty()) throw EmptyCorpusError();

  struct Word {
    std::vector<std::string> syms;
    long count;
  };
  std::vector<Word> words;
  std::map<std::string, long> char_counts;
  for (const auto& [w, c] : word_counts) {
    Word word{{}, c};
    for (char ch : w) {
      word.syms.emplace_back(1, ch);
      char_counts[word.syms.back()] += c;
    }
    words.push_back(std::move(word));
  }

  SubwordVocab vocab;
  vocab.add_token("[PAD]");
  vocab.add_token("[UNK]");
  vocab.add_token("[MASK]");
  vocab.add_token("[CLS]");
  vocab.add_token("[SEP]");
  // all single characters always included, most frequent first
  {
    std::vector<std::pair<long, std::string>> by_freq;
    for (const auto& [s, c] : char_counts) by_freq.emplace_back(-c, s);
    std::sort(by_freq.begin(), by_freq.end());
    for (const auto& [negc, s] : by_freq) vocab.add_token(s);
  }

  while (vocab.size() < max_size) {
    // most frequent adjacent pair; tie-break: lexicographically smaller merge
    std::map<std::string, long> pair_counts;
    for (const Word& w : words)
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i)
        pair_counts[w.syms[i] + w.syms[i + 1]] += w.count;
    std::string best;
    long best_count = 1;  // require frequency >= 2
    for (const auto& [merged, c] : pair_counts) {
      if (vocab.id_of(merged) >= 0) continue;
      if (c > best_count || (c == best_count && !best.empty() && merged < best)) {
        best = merged;
        best_count = c;
      }
    }
    if (best.empty()) break;
    vocab.add_token(best);
    for (Word& w : words) {
      std::vector<std::string> merged;
      std::size_t i = 0;
      while (i < w.syms.size()) {
        if (i + 1 < w.syms.size() && w.syms[i] + w.syms[i + 1] == best) {
          merged.push_back(best);
          i += 2;
        } else {
          merged.push_back(w.syms[i]);
          ++i;
        }
      }
      w.syms = std::move(merged);
    }
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Canonicalization
// ---------------------------------------------------------------------------

std::size_t amr_node_count(const AmrGraph& graph) {
  std::size_t constants = 0;
  for (const AmrEdge& e : graph.edges())
    if (e.target_is_constant) ++constants;
  return graph.num_variables() + constants;
}

BipartiteGraph to_bipartite(const AmrGraph& graph) {
  BipartiteGraph bg;
  std::unordered_map<std::string, int> var_node;
  for (const auto& [var, concept_label] : graph.instances()) {
    var_node[var] = static_cast<int>(bg.nodes.size());
    bg.nodes.push_back({concept_label, NodeKind::Concept});
  }
  if (graph.has_variable(graph.root())) bg.root = var_node[graph.root()];
  for (const AmrEdge& e : graph.edges()) {
    int rel = static_cast<int>(bg.nodes.size());
    bg.nodes.push_back({e.relation, NodeKind::Relation});
    int tgt;
    if (e.target_is_constant) {
      tgt = static_cast<int>(bg.nodes.size());
      bg.nodes.push_back({e.target, NodeKind::Constant});
    } else {
      tgt = var_node.at(e.target);
    }
    bg.edges.emplace_back(var_node.at(e.source), rel);
    bg.edges.emplace_back(rel, tgt);
  }
  return bg;
}

std::string node_surface(const BipartiteNode& node) {
  std::string label = node.label;
  if (label.size() >= 2 && label.front() == '"' && label.back() == '"')
    label = label.substr(1, label.size() - 2);
  return lowercase(label);
}

TokenGraph to_token_graph(const BipartiteGraph& bg, const SubwordVocab& vocab,
                          int max_nodes) {
  // tokens per bipartite node
  std::vector<std::vector<int>> node_tokens(bg.nodes.size());
  std::vector<std::vector<std::string>> node_token_text(bg.nodes.size());
  for (std::size_t i = 0; i < bg.nodes.size(); ++i) {
    std::string surface = node_surface(bg.nodes[i]);
    node_tokens[i] = vocab.encode_segment(surface);
    std::size_t consumed = 0;
    for (int id : node_tokens[i]) {
      const std::string& t = vocab.token(id);
      if (id == SubwordVocab::kUnk) {
        node_token_text[i].push_back(surface.substr(consumed, 1));
        consumed += 1;
      } else {
        node_token_text[i].push_back(t);
        consumed += t.size();
      }
    }
  }

  // breadth-first order from the root over the undirected bipartite graph
  std::vector<std::vector<int>> adj(bg.nodes.size());
  for (const auto& [u, v] : bg.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<int> order;
  std::vector<bool> seen(bg.nodes.size(), false);
  auto bfs_from = [&](int start) {
    std::queue<int> q;
    q.push(start);
    seen[start] = true;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      order.push_back(v);
      for (int u : adj[v])
        if (!seen[u]) {
          seen[u] = true;
          q.push(u);
        }
    }
  };
  if (bg.root >= 0) bfs_from(bg.root);
  for (std::size_t i = 0; i < bg.nodes.size(); ++i)
    if (!seen[i]) bfs_from(static_cast<int>(i));

  TokenGraph tg;
  std::vector<bool> kept(bg.nodes.size(), false);
  std::vector<int> first_token(bg.nodes.size(), -1);
  std::size_t budget = static_cast<std::size_t>(max_nodes);
  for (int b : order) {
    if (tg.nodes.size() + node_tokens[b].size() > budget) {
      tg.truncated = true;
      break;  // keep a breadth-first prefix
    }
    kept[b] = true;
    first_token[b] = static_cast<int>(tg.nodes.size());
    for (std::size_t j = 0; j < node_tokens[b].size(); ++j)
      tg.nodes.push_back({node_tokens[b][j], node_token_text[b][j], b});
  }

  for (const auto& [u, v] : bg.edges) {
    if (!kept[u] || !kept[v]) continue;
    for (std::size_t a = 0; a < node_tokens[u].size(); ++a)
      for (std::size_t b = 0; b < node_tokens[v].size(); ++b) {
        int s = first_token[u] + static_cast<int>(a);
        int t = first_token[v] + static_cast<int>(b);
        tg.edges.emplace_back(s, t, EdgeType::Forward);
        tg.edges.emplace_back(t, s, EdgeType::Reverse);
      }
  }
  for (std::size_t i = 0; i < tg.nodes.size(); ++i)
    tg.edges.emplace_back(static_cast<int>(i), static_cast<int>(i),
                          EdgeType::Self);
  return tg;
}

}  // namespace factgraph
