#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factgraph/errors.hpp"
#include "factgraph/penman.hpp"

namespace factgraph {

// Smatch triples. Inverse relations ("X-of") between two variables are
// normalized to their direct form with endpoints swapped before matching;
// a designated (root, "top", concept) attribute triple is included.
struct TripleSet {
  struct Instance {
    std::string var, concept_label;
  };
  struct Attribute {
    std::string var, relation, value;
  };
  struct Relation {
    std::string source, relation, target;
  };

  std::vector<Instance> instances;
  std::vector<Attribute> attributes;
  std::vector<Relation> relations;

  std::size_t size() const {
    return instances.size() + attributes.size() + relations.size();
  }
};

TripleSet to_triples(const AmrGraph& graph);

struct SmatchResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int matched = 0;
  // variable of g1 -> variable of g2, matched pairs only
  std::vector<std::pair<std::string, std::string>> alignment;
};

// Hill-climbing Smatch. Restart 0 starts from a greedy concept-match
// initialization, later restarts from seeded random ones; the best
// alignment over all restarts wins, earliest found on ties.
SmatchResult smatch(const AmrGraph& g1, const AmrGraph& g2, int restarts = 4,
                    uint64_t seed = 0);

struct TooLargeError : std::runtime_error {
  explicit TooLargeError(const std::string& m) : std::runtime_error(m) {}
};

// Exact optimum by enumerating injective variable mappings; requires
// min(|vars1|, |vars2|) <= 6.
SmatchResult smatch_bruteforce(const AmrGraph& g1, const AmrGraph& g2);

// Per summary graph: max Smatch f1 against the first min(k, n) document
// graphs (assumed pre-ranked); returns the mean over summary graphs.
double smatch_amr_k(const std::vector<AmrGraph>& summary_graphs,
                    const std::vector<AmrGraph>& doc_sentence_graphs, int k,
                    int restarts = 4, uint64_t seed = 0);

}  // namespace factgraph
