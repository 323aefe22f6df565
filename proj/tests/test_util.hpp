#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "factgraph/penman.hpp"
#include "factgraph/rng.hpp"

namespace factgraph::testutil {

inline const std::vector<std::string>& concept_pool() {
  static const std::vector<std::string> pool = {
      "want-01", "go-02",   "boy",     "girl",    "dog",      "city",
      "see-01",  "give-01", "book",    "person",  "say-01",   "house",
      "run-02",  "find-01", "name",    "country", "believe-01"};
  return pool;
}

inline const std::vector<std::string>& relation_pool() {
  static const std::vector<std::string> pool = {
      "ARG0", "ARG1", "ARG2", "mod", "location", "time", "ARG0-of", "poss"};
  return pool;
}

inline const std::vector<std::string>& constant_pool() {
  static const std::vector<std::string> pool = {"6",     "-",      "\"Rome\"",
                                                "2024",  "3.5",    "\"Ann\""};
  return pool;
}

// Connected rooted graph with reentrancies, constants, and inverse
// relations; edges are unique triples by construction.
inline AmrGraph random_amr_graph(Rng& rng, int max_vars = 6,
                                 double constant_rate = 0.25,
                                 double reentrancy_rate = 0.3) {
  int n = 1 + rng.uniform_int(max_vars);
  AmrGraph g;
  std::vector<std::string> vars;
  for (int i = 0; i < n; ++i) {
    std::string v = std::string(1, static_cast<char>('a' + (i % 26))) +
                    (i >= 26 ? std::to_string(i / 26) : "");
    vars.push_back(v);
    g.add_instance(v, concept_pool()[rng.uniform_int(
                          static_cast<int>(concept_pool().size()))]);
  }
  g.set_root(vars[0]);
  auto pick_rel = [&] {
    return relation_pool()[rng.uniform_int(
        static_cast<int>(relation_pool().size()))];
  };
  std::vector<std::array<std::string, 3>> used;
  auto add_unique = [&](const std::string& s, const std::string& r,
                        const std::string& t, bool constant) {
    std::array<std::string, 3> key{s, r, t};
    for (const auto& u : used)
      if (u == key) return false;
    used.push_back(key);
    g.add_edge({s, r, t, constant});
    return true;
  };
  // spanning structure: each non-root hangs off an earlier variable
  for (int i = 1; i < n; ++i) {
    for (int attempt = 0; attempt < 16; ++attempt)
      if (add_unique(vars[rng.uniform_int(i)], pick_rel(), vars[i], false))
        break;
  }
  // extra reentrant edges
  int extra = static_cast<int>(reentrancy_rate * n + rng.uniform() * 2);
  for (int e = 0; e < extra && n > 1; ++e) {
    int s = rng.uniform_int(n), t = rng.uniform_int(n);
    if (s == t) continue;
    add_unique(vars[s], pick_rel(), vars[t], false);
  }
  // constant attributes
  for (int i = 0; i < n; ++i)
    if (rng.uniform() < constant_rate)
      add_unique(vars[i], rng.uniform() < 0.5 ? "quant" : "value",
                 constant_pool()[rng.uniform_int(
                     static_cast<int>(constant_pool().size()))],
                 true);
  return g;
}

inline std::vector<std::array<std::string, 3>> sorted_triples(
    const AmrGraph& g) {
  auto t = triples(g);
  std::sort(t.begin(), t.end());
  return t;
}

}  // namespace factgraph::testutil
