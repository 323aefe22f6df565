#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "factgraph/smatch.hpp"
#include "factgraph/synth.hpp"
#include "test_util.hpp"

using namespace factgraph;

TEST_CASE("template analysis: name subject, quantified object, location") {
  Analysis a = analyze_template_sentence("Maria bought two books in Paris.");
  const AmrGraph& g = a.graph;
  CHECK(g.concept_of(g.root()) == "buy-01");
  CHECK(g.concept_of("p") == "person");
  CHECK(g.concept_of("o") == "book");
  bool quant = false, loc = false, op1 = false;
  for (const AmrEdge& e : g.edges()) {
    if (e.relation == "quant") {
      quant = true;
      CHECK(e.target == "2");
    }
    if (e.relation == "location") loc = true;
    if (e.relation == "op1" && e.target == "\"Maria\"") op1 = true;
  }
  CHECK(quant);
  CHECK(loc);
  CHECK(op1);
  // the number word counts toward the noun's alignment
  CHECK(a.alignments.at("o") == std::vector<int>{2, 3});
  CHECK(a.alignments.at("v") == std::vector<int>{1});
  CHECK(a.alignments.at("p") == std::vector<int>{0});
}

TEST_CASE("template analysis: negation and pronoun subject") {
  Analysis a = analyze_template_sentence("She did not sell a guitar.");
  const AmrGraph& g = a.graph;
  CHECK(g.concept_of("p") == "she");
  bool polarity = false;
  for (const AmrEdge& e : g.edges())
    if (e.relation == "polarity" && e.target == "-") polarity = true;
  CHECK(polarity);
  CHECK(a.alignments.at("v") == std::vector<int>{1, 2, 3});
}

TEST_CASE("template analysis: person object") {
  Analysis a = analyze_template_sentence("Carlos met Elena in Oslo.");
  const AmrGraph& g = a.graph;
  CHECK(g.concept_of(g.root()) == "meet-02");
  CHECK(g.concept_of("p2") == "person");
  CHECK(validate(g).empty());
}

TEST_CASE("analysis output round-trips through the serializer") {
  for (const char* s :
       {"Anna repaired four cameras in Geneva.", "He found a map.",
        "Nora did not call Pedro.", "Victor wrote three letters."}) {
    Analysis a = analyze_template_sentence(s);
    AmrGraph back = parse_penman(serialize_penman(a.graph));
    CHECK(testutil::sorted_triples(back) == testutil::sorted_triples(a.graph));
    CHECK(validate(a.graph).empty());
  }
}

TEST_CASE("corruption rules produce the advertised edit") {
  std::vector<std::string> doc = {"Maria bought two books in Paris.",
                                  "Carlos sold a guitar in Berlin."};

  SUBCASE("entity swap replaces with a document entity") {
    Corruption c = synth_corrupt(doc, doc[0], CorruptionRule::EntitySwap, 5);
    CHECK(c.sentence != doc[0]);
    std::string repl =
        c.sentence.substr(c.span.first, c.span.second - c.span.first);
    CHECK((repl == "Carlos" || repl == "Berlin"));
  }

  SUBCASE("number swap changes the count word") {
    Corruption c = synth_corrupt(doc, doc[0], CorruptionRule::NumberSwap, 5);
    CHECK(c.sentence.find("two") == std::string::npos);
    std::string repl =
        c.sentence.substr(c.span.first, c.span.second - c.span.first);
    CHECK(repl != "two");
  }

  SUBCASE("negation toggle flips polarity both ways") {
    Corruption c = synth_corrupt(doc, doc[0], CorruptionRule::NegationToggle, 5);
    CHECK(c.sentence.find("did not buy") != std::string::npos);
    Corruption back =
        synth_corrupt(doc, c.sentence, CorruptionRule::NegationToggle, 5);
    CHECK(back.sentence == doc[0]);
  }

  SUBCASE("pronoun swap uses the wrong gender") {
    Corruption c = synth_corrupt(doc, doc[0], CorruptionRule::PronounSwap, 5);
    CHECK(c.sentence.rfind("He ", 0) == 0);
    Corruption flip = synth_corrupt(doc, "She bought two books.",
                                    CorruptionRule::PronounSwap, 5);
    CHECK(flip.sentence.rfind("He ", 0) == 0);
  }
}

TEST_CASE("corruption spans index the corrupted sentence") {
  std::vector<std::string> doc = {"Maria bought two books in Paris.",
                                  "Carlos sold a guitar in Berlin."};
  for (CorruptionRule r :
       {CorruptionRule::EntitySwap, CorruptionRule::NumberSwap,
        CorruptionRule::NegationToggle, CorruptionRule::PronounSwap}) {
    Corruption c = synth_corrupt(doc, doc[0], r, 9);
    CHECK(c.span.first >= 0);
    CHECK(c.span.second <= static_cast<int>(c.sentence.size()));
    CHECK(c.span.first < c.span.second);
  }
}

TEST_CASE("inapplicable rules throw") {
  std::vector<std::string> doc = {"Maria helped Anna."};
  CHECK_THROWS_AS(
      synth_corrupt(doc, "Maria helped Anna.", CorruptionRule::NumberSwap, 1),
      RuleNotApplicableError);
  std::vector<std::string> lone = {"Maria helped Anna."};
  // only one city/name inventory entry per category -> no swap target
  CHECK_THROWS_AS(synth_corrupt({"He found a map."}, "He found a map.",
                                CorruptionRule::EntitySwap, 1),
                  RuleNotApplicableError);
}

TEST_CASE("corruption is deterministic per seed") {
  std::vector<std::string> doc = {"Maria bought two books in Paris.",
                                  "Carlos sold a guitar in Berlin.",
                                  "Elena painted five houses in Oslo."};
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    Corruption a = synth_corrupt(doc, doc[0], CorruptionRule::EntitySwap, seed);
    Corruption b = synth_corrupt(doc, doc[0], CorruptionRule::EntitySwap, seed);
    CHECK(a.sentence == b.sentence);
    CHECK(a.span == b.span);
  }
}

TEST_CASE("generated corpus has consistent records and near-even labels") {
  SynthConfig cfg;
  cfg.num_examples = 300;
  cfg.seed = 42;
  auto corpus = generate_corpus(cfg);
  REQUIRE(corpus.size() == 300);

  int factual = 0;
  std::set<std::string> ids;
  for (const auto& ex : corpus) {
    CHECK(ids.insert(ex.id).second);
    CHECK(ex.origin == "synthetic");
    REQUIRE(!ex.document.empty());
    CHECK(ex.document.size() == ex.doc_amrs.size());
    CHECK(ex.document.size() >= 3);
    CHECK(ex.document.size() <= 5);
    REQUIRE(ex.label.has_value());
    if (*ex.label == Label::Factual) {
      ++factual;
      CHECK(ex.nonfactual_spans.empty());
    } else {
      REQUIRE(ex.nonfactual_spans.size() == 1);
      auto [b, e] = ex.nonfactual_spans[0];
      CHECK(b >= 0);
      CHECK(e <= static_cast<int>(ex.summary_sentence.size()));
    }
    // every graph string parses and validates
    for (const std::string& amr : ex.doc_amrs)
      CHECK(validate(parse_penman(amr)).empty());
    AmrGraph sg = parse_penman(ex.summary_amr);
    CHECK(validate(sg).empty());
    // alignments reference real variables and words
    auto words = word_tokens(ex.summary_sentence);
    for (const auto& [var, idx] : ex.alignments) {
      CHECK(sg.has_variable(var));
      for (int w : idx) {
        CHECK(w >= 0);
        CHECK(w < static_cast<int>(words.size()));
      }
    }
  }
  double ratio = static_cast<double>(factual) / corpus.size();
  CHECK(ratio > 0.35);
  CHECK(ratio < 0.65);
}

TEST_CASE("generation is deterministic per seed") {
  SynthConfig cfg;
  cfg.num_examples = 20;
  cfg.seed = 7;
  auto a = generate_corpus(cfg);
  auto b = generate_corpus(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].summary_sentence == b[i].summary_sentence);
    CHECK(a[i].document == b[i].document);
    CHECK(a[i].label == b[i].label);
  }
  cfg.seed = 8;
  auto c = generate_corpus(cfg);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].summary_sentence != c[i].summary_sentence) differs = true;
  CHECK(differs);
}

TEST_CASE("corrupted summaries disagree with the source graph on smatch") {
  SynthConfig cfg;
  cfg.num_examples = 60;
  cfg.seed = 3;
  auto corpus = generate_corpus(cfg);
  for (const auto& ex : corpus) {
    if (*ex.label == Label::Factual) continue;
    AmrGraph sg = parse_penman(ex.summary_amr);
    double best = 0.0;
    for (const std::string& amr : ex.doc_amrs)
      best = std::max(best, smatch(parse_penman(amr), sg, 2, 1).f1);
    CHECK(best < 1.0);
  }
}

TEST_CASE("rule names") {
  CHECK(std::string(rule_name(CorruptionRule::EntitySwap)) == "entity_swap");
  CHECK(std::string(rule_name(CorruptionRule::PronounSwap)) == "pronoun_swap");
}

TEST_CASE("vocabulary lines cover every emitted surface form") {
  auto lines = template_vocabulary_lines();
  REQUIRE(!lines.empty());
  std::string all;
  for (const auto& l : lines) all += l + " ";
  for (const char* w : {"Maria", "bought", "Paris", "guitar", "seven", "did",
                        "not", "buy-01", "person", "name"})
    CHECK(all.find(w) != std::string::npos);
}
