#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factgraph/example.hpp"
#include "factgraph/rng.hpp"

using namespace factgraph;

TEST_CASE("word tokens and character spans") {
  std::string s = "Maria bought, two books.";
  CHECK(word_tokens(s) ==
        std::vector<std::string>{"maria", "bought", "two", "books"});
  auto spans = word_char_spans(s);
  REQUIRE(spans.size() == 4);
  CHECK(s.substr(spans[0].first, spans[0].second - spans[0].first) == "Maria");
  CHECK(s.substr(spans[3].first, spans[3].second - spans[3].first) ==
        "books.");
}

TEST_CASE("hyphenated tokens keep the hyphen") {
  CHECK(word_tokens("a well-known fact") ==
        std::vector<std::string>{"a", "well-known", "fact"});
}

TEST_CASE("tf-idf selection ranks the lexically closest sentences") {
  std::vector<std::string> doc = {
      "Maria bought two books in Paris.",
      "Carlos sold a guitar.",
      "Elena painted three houses in Berlin.",
      "Maria visited Carlos.",
  };
  auto top = select_doc_graphs(doc, "Maria bought two books.", 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0] == 0);

  // k larger than the document: all sentences, ranked
  auto all = select_doc_graphs(doc, "Maria bought two books.", 10);
  CHECK(all.size() == doc.size());

  CHECK_THROWS_AS(select_doc_graphs({}, "x", 2), EmptyDocumentError);
  CHECK_THROWS_AS(select_doc_graphs(doc, "x", 0), std::invalid_argument);
}

TEST_CASE("selection tie-break is document order") {
  std::vector<std::string> doc = {"alpha beta", "gamma delta", "alpha beta"};
  auto top = select_doc_graphs(doc, "alpha beta", 2);
  CHECK(top == std::vector<int>{0, 2});
}

TEST_CASE("sense suffix stripping") {
  CHECK(strip_sense_suffix("look-01") == "look");
  CHECK(strip_sense_suffix("make-up-03") == "make-up");
  CHECK(strip_sense_suffix("date-entity") == "date-entity");
  CHECK(strip_sense_suffix("-") == "-");
  CHECK(strip_sense_suffix("book") == "book");
}

TEST_CASE("lexical alignments match concepts to words") {
  AmrGraph g = parse_penman(
      "(b / buy-01 :ARG0 (p / person) :ARG1 (o / book :quant 2))");
  auto a = lexical_match_alignments(g, "The person did buy the book twice.");
  CHECK(a.at("b") == std::vector<int>{3});
  CHECK(a.at("p") == std::vector<int>{1});
  CHECK(a.at("o") == std::vector<int>{5});
}

TEST_CASE("edge labels flag edges incident to span-aligned variables") {
  AmrGraph g = parse_penman(
      "(b / buy-01 :ARG0 (p / person) :ARG1 (o / book :quant 2))");
  std::string sent = "person buy book two";
  std::map<std::string, std::vector<int>> align = {
      {"b", {1}}, {"p", {0}}, {"o", {2}}};
  // span covering "book" only
  auto spans = word_char_spans(sent);
  std::vector<std::pair<int, int>> bad = {spans[2]};
  auto labels = edge_label_from_spans(g, sent, align, bad);
  REQUIRE(labels.size() == g.num_edges());
  // edges: b-ARG0-p, b-ARG1-o, o-quant-2
  CHECK(labels[0] == Label::Factual);
  CHECK(labels[1] == Label::NonFactual);
  CHECK(labels[2] == Label::NonFactual);
}

TEST_CASE("no spans means all edges factual") {
  AmrGraph g = parse_penman("(a / eat-01 :ARG0 (d / dog))");
  auto labels = edge_label_from_spans(g, "dog eat", {{"a", {1}}, {"d", {0}}}, {});
  for (Label l : labels) CHECK(l == Label::Factual);
}

TEST_CASE("edge label validation") {
  AmrGraph g = parse_penman("(a / eat-01 :ARG0 (d / dog))");
  CHECK_THROWS_AS(
      edge_label_from_spans(g, "dog eat", {{"zz", {0}}}, {}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      edge_label_from_spans(g, "dog eat", {}, {{0, 100}}),
      SpanOutOfBoundsError);
  CHECK_THROWS_AS(
      edge_label_from_spans(g, "dog eat", {}, {{5, 3}}),
      SpanOutOfBoundsError);
}

TEST_CASE("aggregate_edges is logical OR, exhaustively") {
  for (int n = 1; n <= 10; ++n) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      std::vector<Label> edges;
      bool any_bad = false;
      for (int i = 0; i < n; ++i) {
        bool bad = (mask >> i) & 1;
        any_bad |= bad;
        edges.push_back(bad ? Label::NonFactual : Label::Factual);
      }
      CHECK(aggregate_edges(edges) ==
            (any_bad ? Label::NonFactual : Label::Factual));
    }
  }
  CHECK_THROWS_AS(aggregate_edges({}), NoEdgesError);
}

TEST_CASE("summary score is the mean of sentence labels") {
  CHECK(summary_score({Label::Factual}) == 1.0);
  CHECK(summary_score({Label::NonFactual}) == 0.0);
  CHECK(summary_score({Label::Factual, Label::NonFactual, Label::Factual,
                       Label::Factual}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(summary_score({}), EmptyInputError);
}
