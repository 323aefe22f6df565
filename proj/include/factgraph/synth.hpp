#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "factgraph/example.hpp"
#include "factgraph/penman.hpp"

namespace factgraph {

enum class CorruptionRule {
  EntitySwap,
  NumberSwap,
  NegationToggle,
  PronounSwap,
};

const char* rule_name(CorruptionRule r);

struct RuleNotApplicableError : std::runtime_error {
  explicit RuleNotApplicableError(const std::string& m)
      : std::runtime_error(m) {}
};

struct Corruption {
  std::string sentence;
  std::pair<int, int> span;  // [begin,end) chars over the corrupted sentence
};

// Applies one rule to the source sentence. The entity inventory for
// EntitySwap comes from capitalized tokens of the document sentences.
// Deterministic given seed.
Corruption synth_corrupt(const std::vector<std::string>& document_sentences,
                         const std::string& source_sentence,
                         CorruptionRule rule, uint64_t seed);

// Semantic analysis of a template-world sentence: its AMR graph plus
// node-to-word alignments (variable -> word indices).
struct Analysis {
  AmrGraph graph;
  std::map<std::string, std::vector<int>> alignments;
};

Analysis analyze_template_sentence(const std::string& sentence);

struct SynthConfig {
  int num_examples = 2000;
  uint64_t seed = 1;
  int min_doc_sentences = 3;
  int max_doc_sentences = 5;
  double pronoun_paraphrase_rate = 0.1;
  double corruption_rate = 0.5;
  // Relative frequency of each corruption rule when a summary is
  // corrupted, ordered {entity_swap, number_swap, negation_toggle,
  // pronoun_swap}; rules that do not apply to the drawn sentence fall
  // back to the next applicable one.
  std::array<double, 4> rule_weights = {1.0, 1.0, 1.0, 1.0};
};

// Documents of related template sentences; summaries copy one sentence
// (sometimes as a pronoun paraphrase) and are corrupted ~50% of the time.
std::vector<FactualityExample> generate_corpus(const SynthConfig& config);

// Every surface form the generator can emit, for vocabulary building.
std::vector<std::string> template_vocabulary_lines();

}  // namespace factgraph
