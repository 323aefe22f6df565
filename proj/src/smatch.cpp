#include "factgraph/smatch.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <tuple>

#include "factgraph/rng.hpp"

namespace factgraph {

namespace {

bool is_inverse(const std::string& r) {
  return r.size() > 3 && r.ends_with("-of");
}

}  // namespace

TripleSet to_triples(const AmrGraph& graph) {
  TripleSet t;
  for (const auto& [var, concept_label] : graph.instances())
    t.instances.push_back({var, concept_label});
  if (graph.has_variable(graph.root()))
    t.attributes.push_back(
        {graph.root(), "top", graph.concept_of(graph.root())});
  for (const AmrEdge& e : graph.edges()) {
    if (e.target_is_constant) {
      t.attributes.push_back({e.source, e.relation, e.target});
    } else if (is_inverse(e.relation)) {
      t.relations.push_back(
          {e.target, e.relation.substr(0, e.relation.size() - 3), e.source});
    } else {
      t.relations.push_back({e.source, e.relation, e.target});
    }
  }
  return t;
}

namespace {

// Triples of one graph re-indexed over a dense variable numbering, with the
// second graph's triples organized for O(1)-ish matched-count evaluation.
struct Indexed {
  std::vector<std::string> vars;                 // index -> name
  std::vector<std::string> concepts;             // index -> concept
  std::vector<std::pair<int, std::string>> attrs;  // (var, rel+"\x1f"+value)
  std::vector<std::tuple<int, std::string, int>> rels;
  std::size_t triple_count;

  explicit Indexed(const AmrGraph& g) {
    TripleSet t = to_triples(g);
    std::map<std::string, int> idx;
    for (const auto& inst : t.instances) {
      idx[inst.var] = static_cast<int>(vars.size());
      vars.push_back(inst.var);
      concepts.push_back(inst.concept_label);
    }
    for (const auto& a : t.attributes)
      attrs.emplace_back(idx.at(a.var), a.relation + '\x1f' + a.value);
    for (const auto& r : t.relations)
      rels.emplace_back(idx.at(r.source), r.relation, idx.at(r.target));
    triple_count = t.size();
  }
};

struct Matcher {
  const Indexed& a;
  const Indexed& b;
  // lookup tables on graph b
  std::map<std::pair<int, std::string>, int> b_attr_counts;
  std::map<std::tuple<int, std::string, int>, int> b_rel_counts;

  Matcher(const Indexed& a_, const Indexed& b_) : a(a_), b(b_) {
    for (const auto& [v, kv] : b.attrs) ++b_attr_counts[{v, kv}];
    for (const auto& r : b.rels) ++b_rel_counts[r];
  }

  // mapping: var index of a -> var index of b, -1 for unmapped
  int matched(const std::vector<int>& mapping) const {
    int m = 0;
    for (std::size_t i = 0; i < a.vars.size(); ++i) {
      int j = mapping[i];
      if (j >= 0 && a.concepts[i] == b.concepts[j]) ++m;
    }
    std::map<std::pair<int, std::string>, int> attr_used;
    for (const auto& [v, kv] : a.attrs) {
      int j = mapping[v];
      if (j < 0) continue;
      auto key = std::make_pair(j, kv);
      auto it = b_attr_counts.find(key);
      if (it != b_attr_counts.end() && attr_used[key] < it->second) {
        ++attr_used[key];
        ++m;
      }
    }
    std::map<std::tuple<int, std::string, int>, int> rel_used;
    for (const auto& [s, r, t] : a.rels) {
      int js = mapping[s], jt = mapping[t];
      if (js < 0 || jt < 0) continue;
      auto key = std::make_tuple(js, r, jt);
      auto it = b_rel_counts.find(key);
      if (it != b_rel_counts.end() && rel_used[key] < it->second) {
        ++rel_used[key];
        ++m;
      }
    }
    return m;
  }
};

SmatchResult finish(const Indexed& a, const Indexed& b,
                    const std::vector<int>& mapping, int matched) {
  SmatchResult r;
  r.matched = matched;
  r.precision = a.triple_count ? static_cast<double>(matched) / a.triple_count : 0.0;
  r.recall = b.triple_count ? static_cast<double>(matched) / b.triple_count : 0.0;
  r.f1 = (r.precision + r.recall > 0.0)
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  for (std::size_t i = 0; i < mapping.size(); ++i)
    if (mapping[i] >= 0) r.alignment.emplace_back(a.vars[i], b.vars[mapping[i]]);
  return r;
}

std::vector<int> greedy_init(const Indexed& a, const Indexed& b) {
  std::vector<int> mapping(a.vars.size(), -1);
  std::vector<bool> used(b.vars.size(), false);
  for (std::size_t i = 0; i < a.vars.size(); ++i)
    for (std::size_t j = 0; j < b.vars.size(); ++j)
      if (!used[j] && a.concepts[i] == b.concepts[j]) {
        mapping[i] = static_cast<int>(j);
        used[j] = true;
        break;
      }
  for (std::size_t i = 0; i < a.vars.size(); ++i) {
    if (mapping[i] >= 0) continue;
    for (std::size_t j = 0; j < b.vars.size(); ++j)
      if (!used[j]) {
        mapping[i] = static_cast<int>(j);
        used[j] = true;
        break;
      }
  }
  return mapping;
}

std::vector<int> random_init(const Indexed& a, const Indexed& b, Rng& rng) {
  std::vector<int> perm(b.vars.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<int> mapping(a.vars.size(), -1);
  for (std::size_t i = 0; i < a.vars.size() && i < perm.size(); ++i)
    mapping[i] = perm[i];
  return mapping;
}

// one-variable move / pairwise swap neighborhood, strict improvement only
int hill_climb(const Matcher& matcher, std::vector<int>& mapping) {
  const std::size_t n1 = matcher.a.vars.size();
  const std::size_t n2 = matcher.b.vars.size();
  int best = matcher.matched(mapping);
  bool improved = true;
  while (improved) {
    improved = false;
    std::vector<bool> used(n2, false);
    for (int j : mapping)
      if (j >= 0) used[j] = true;
    for (std::size_t i = 0; i < n1 && !improved; ++i) {
      int old = mapping[i];
      for (std::size_t j = 0; j < n2 && !improved; ++j) {
        if (used[j] || old == static_cast<int>(j)) continue;
        mapping[i] = static_cast<int>(j);
        int m = matcher.matched(mapping);
        if (m > best) {
          best = m;
          improved = true;
        } else {
          mapping[i] = old;
        }
      }
    }
    for (std::size_t i = 0; i < n1 && !improved; ++i)
      for (std::size_t j = i + 1; j < n1 && !improved; ++j) {
        std::swap(mapping[i], mapping[j]);
        int m = matcher.matched(mapping);
        if (m > best) {
          best = m;
          improved = true;
        } else {
          std::swap(mapping[i], mapping[j]);
        }
      }
  }
  return best;
}

}  // namespace

SmatchResult smatch(const AmrGraph& g1, const AmrGraph& g2, int restarts,
                    uint64_t seed) {
  if (restarts < 1) throw std::invalid_argument("smatch: restarts must be >= 1");
  Indexed a(g1), b(g2);
  Matcher matcher(a, b);
  std::vector<int> best_mapping;
  int best = -1;
  for (int r = 0; r < restarts; ++r) {
    std::vector<int> mapping;
    if (r == 0) {
      mapping = greedy_init(a, b);
    } else {
      Rng rng(derive_seed(seed, static_cast<uint64_t>(r)));
      mapping = random_init(a, b, rng);
    }
    int m = hill_climb(matcher, mapping);
    if (m > best) {
      best = m;
      best_mapping = mapping;
    }
  }
  return finish(a, b, best_mapping, best);
}

SmatchResult smatch_bruteforce(const AmrGraph& g1, const AmrGraph& g2) {
  Indexed a(g1), b(g2);
  const std::size_t n1 = a.vars.size(), n2 = b.vars.size();
  if (std::min(n1, n2) > 6)
    throw TooLargeError("smatch_bruteforce: graphs exceed the 6-variable bound");
  Matcher matcher(a, b);

  // enumerate injective images for the smaller side to bound the search
  bool a_smaller = n1 <= n2;
  const std::size_t ns = a_smaller ? n1 : n2;
  const std::size_t nl = a_smaller ? n2 : n1;
  std::vector<int> image(ns, -1);
  std::vector<bool> used(nl, false);
  std::vector<int> best_mapping(n1, -1);
  int best = -1;

  auto eval = [&] {
    std::vector<int> mapping(n1, -1);
    if (a_smaller) {
      for (std::size_t i = 0; i < ns; ++i) mapping[i] = image[i];
    } else {
      for (std::size_t j = 0; j < ns; ++j)
        if (image[j] >= 0) mapping[image[j]] = static_cast<int>(j);
    }
    int m = matcher.matched(mapping);
    if (m > best) {
      best = m;
      best_mapping = mapping;
    }
  };

  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == ns) {
      eval();
      return;
    }
    for (std::size_t j = 0; j < nl; ++j) {
      if (used[j]) continue;
      used[j] = true;
      image[i] = static_cast<int>(j);
      rec(i + 1);
      used[j] = false;
    }
    image[i] = -1;
  };
  rec(0);
  return finish(a, b, best_mapping, best);
}

double smatch_amr_k(const std::vector<AmrGraph>& summary_graphs,
                    const std::vector<AmrGraph>& doc_sentence_graphs, int k,
                    int restarts, uint64_t seed) {
  if (summary_graphs.empty() || doc_sentence_graphs.empty())
    throw EmptyInputError("smatch_amr_k: empty summary or document graphs");
  if (k < 1) throw std::invalid_argument("smatch_amr_k: k must be >= 1");
  const std::size_t top =
      std::min<std::size_t>(k, doc_sentence_graphs.size());
  double total = 0.0;
  for (std::size_t s = 0; s < summary_graphs.size(); ++s) {
    double best = 0.0;
    for (std::size_t d = 0; d < top; ++d) {
      uint64_t pair_seed =
          derive_seed(seed, s * doc_sentence_graphs.size() + d);
      best = std::max(best, smatch(summary_graphs[s], doc_sentence_graphs[d],
                                   restarts, pair_seed)
                                .f1);
    }
    total += best;
  }
  return total / static_cast<double>(summary_graphs.size());
}

}  // namespace factgraph
