#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factgraph/canon.hpp"
#include "test_util.hpp"

using namespace factgraph;

static SubwordVocab tiny_vocab() {
  return build_vocab({"want-01 boy go-02 look-01 aa bb city name rome ann",
                      "give-01 see-01 dog girl house 6 2024 3.5 - quant"},
                     300);
}

TEST_CASE("to_bipartite: one labeled edge becomes relation node plus two edges") {
  AmrGraph g = parse_penman("(u / want-01 :ARG0 (v / boy))");
  BipartiteGraph bg = to_bipartite(g);
  REQUIRE(bg.nodes.size() == 3);
  CHECK(bg.nodes[0].kind == NodeKind::Concept);
  CHECK(bg.nodes[2].kind == NodeKind::Relation);
  CHECK(bg.nodes[2].label == "ARG0");
  REQUIRE(bg.edges.size() == 2);
  CHECK(bg.edges[0] == std::make_pair(0, 2));
  CHECK(bg.edges[1] == std::make_pair(2, 1));
}

TEST_CASE("to_bipartite: counting identities") {
  AmrGraph g = parse_penman(
      "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b) :quant 6)");
  BipartiteGraph bg = to_bipartite(g);
  CHECK(bg.nodes.size() == amr_node_count(g) + g.num_edges());
  CHECK(bg.edges.size() == 2 * g.num_edges());

  AmrGraph single = parse_penman("(a / dog)");
  BipartiteGraph sbg = to_bipartite(single);
  CHECK(sbg.nodes.size() == 1);
  CHECK(sbg.edges.empty());
}

TEST_CASE("bipartite counting property on random graphs") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    AmrGraph g = testutil::random_amr_graph(rng);
    BipartiteGraph bg = to_bipartite(g);
    CHECK(bg.nodes.size() == amr_node_count(g) + g.num_edges());
    CHECK(bg.edges.size() == 2 * g.num_edges());
    // bipartite by construction: every edge touches exactly one relation node
    for (const auto& [u, v] : bg.edges)
      CHECK(((bg.nodes[u].kind == NodeKind::Relation) !=
             (bg.nodes[v].kind == NodeKind::Relation)));
  }
}

TEST_CASE("build_vocab: merges, determinism, degenerate size") {
  SubwordVocab v = build_vocab({"aa", "aa"}, 300);
  CHECK(v.id_of("a") >= 0);
  CHECK(v.id_of("aa") >= 0);

  SubwordVocab v2 = build_vocab({"aa", "aa"}, 300);
  CHECK(v.size() == v2.size());
  for (int i = 0; i < v.size(); ++i) CHECK(v.token(i) == v2.token(i));

  // max_size below alphabet+reserved: characters still included
  SubwordVocab small = build_vocab({"abcdef"}, 3);
  CHECK(small.id_of("a") >= 0);
  CHECK(small.id_of("ab") < 0);

  CHECK_THROWS_AS(build_vocab({}, 100), EmptyCorpusError);
}

TEST_CASE("tokenize: greedy longest match and round-trip") {
  SubwordVocab v = tiny_vocab();
  CHECK(v.encode("").empty());
  auto one = v.encode_segment("a");
  REQUIRE(one.size() == 1);
  CHECK(v.token(one[0]) == "a");

  auto ids = v.encode_segment("look-01");
  CHECK(v.decode(ids) == "look-01");

  // idempotence on vocab atoms
  for (int id = SubwordVocab::kNumReserved; id < v.size(); ++id) {
    auto again = v.encode_segment(v.token(id));
    REQUIRE(again.size() == 1);
    CHECK(again[0] == id);
  }

  // unknown characters map to kUnk
  auto unk = v.encode_segment("\xc3\xa9");
  CHECK(unk[0] == SubwordVocab::kUnk);
}

TEST_CASE("vocab save/load round-trip") {
  SubwordVocab v = tiny_vocab();
  std::string path = "/tmp/factgraph_vocab_test.txt";
  v.save(path, "test");
  SubwordVocab w = SubwordVocab::load(path);
  REQUIRE(w.size() == v.size());
  for (int i = 0; i < v.size(); ++i) CHECK(w.token(i) == v.token(i));
}

TEST_CASE("to_token_graph: cross product edges, reverse and self") {
  SubwordVocab v = tiny_vocab();
  // 1-token node connected to 1-token node through a relation node
  AmrGraph g = parse_penman("(u / boy :mod (v / dog))");
  TokenGraph tg = to_token_graph(to_bipartite(g), v);
  int fwd = 0, rev = 0, self = 0;
  for (const auto& [s, t, ty] : tg.edges) {
    if (ty == EdgeType::Forward) ++fwd;
    if (ty == EdgeType::Reverse) ++rev;
    if (ty == EdgeType::Self) ++self;
  }
  CHECK(fwd == rev);
  CHECK(self == static_cast<int>(tg.nodes.size()));
  for (const auto& node : tg.nodes) CHECK(node.origin >= 0);
}

TEST_CASE("token cross-product counts on random graphs") {
  SubwordVocab v = tiny_vocab();
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    AmrGraph g = testutil::random_amr_graph(rng);
    BipartiteGraph bg = to_bipartite(g);
    TokenGraph tg = to_token_graph(bg, v);

    std::vector<int> tok_count(bg.nodes.size(), 0);
    for (const auto& n : tg.nodes) ++tok_count[n.origin];
    long expected_fwd = 0;
    for (const auto& [a, b] : bg.edges)
      expected_fwd += static_cast<long>(tok_count[a]) * tok_count[b];
    long fwd = 0, rev = 0, self = 0;
    for (const auto& [s, t, ty] : tg.edges) {
      if (ty == EdgeType::Forward) ++fwd;
      if (ty == EdgeType::Reverse) ++rev;
      if (ty == EdgeType::Self) ++self;
    }
    CHECK(fwd == expected_fwd);
    CHECK(rev == fwd);
    CHECK(self == static_cast<long>(tg.nodes.size()));
    // forward edges have matching reverse
    std::set<std::pair<int, int>> fset, rset;
    for (const auto& [s, t, ty] : tg.edges) {
      if (ty == EdgeType::Forward) fset.insert({s, t});
      if (ty == EdgeType::Reverse) rset.insert({t, s});
    }
    CHECK(fset == rset);
  }
}

TEST_CASE("token graph truncation keeps a bounded prefix") {
  SubwordVocab v = tiny_vocab();
  Rng rng(9);
  AmrGraph g = testutil::random_amr_graph(rng, 12, 0.5, 0.5);
  TokenGraph tg = to_token_graph(to_bipartite(g), v, 4);
  CHECK(tg.nodes.size() <= 4);
  CHECK(tg.truncated);
}

TEST_CASE("string constants are tokenized without quotes, lowercased") {
  SubwordVocab v = tiny_vocab();
  AmrGraph g = parse_penman("(n / name :op1 \"Rome\")");
  BipartiteGraph bg = to_bipartite(g);
  TokenGraph tg = to_token_graph(bg, v);
  std::string surface;
  for (const auto& n : tg.nodes)
    if (bg.nodes[n.origin].kind == NodeKind::Constant) surface += n.token;
  CHECK(surface == "rome");
}

TEST_CASE("empty bipartite graph yields empty token graph") {
  BipartiteGraph bg;
  TokenGraph tg = to_token_graph(bg, tiny_vocab());
  CHECK(tg.nodes.empty());
  CHECK(tg.edges.empty());
}
