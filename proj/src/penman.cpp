#include "factgraph/penman.hpp"

#include <cctype>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace factgraph {

const std::string& AmrGraph::concept_of(const std::string& var) const {
  auto it = index_.find(var);
  if (it == index_.end())
    throw std::out_of_range("no such variable: " + var);
  return instances_[it->second].second;
}

void AmrGraph::add_instance(const std::string& var,
                            const std::string& concept_label) {
  if (index_.count(var))
    throw PenmanError(PenmanErrorKind::DuplicateVariableConcept,
                      "variable '" + var + "' declared twice");
  index_[var] = instances_.size();
  instances_.emplace_back(var, concept_label);
}

namespace {

struct Token {
  enum Kind { LParen, RParen, Slash, Role, Atom, Str } kind;
  std::string text;
};

bool is_atom_char(char c) {
  return !std::isspace(static_cast<unsigned char>(c)) && c != '(' &&
         c != ')' && c != '/' && c != '"';
}

std::vector<Token> lex(const std::string& text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Token::LParen, "("});
      ++i;
    } else if (c == ')') {
      out.push_back({Token::RParen, ")"});
      ++i;
    } else if (c == '/') {
      out.push_back({Token::Slash, "/"});
      ++i;
    } else if (c == '"') {
      std::size_t j = i + 1;
      std::string s;
      while (j < text.size() && text[j] != '"') {
        if (text[j] == '\\' && j + 1 < text.size()) ++j;
        s += text[j++];
      }
      if (j >= text.size())
        throw PenmanError(PenmanErrorKind::BadSyntax,
                          "unterminated string literal");
      out.push_back({Token::Str, s});
      i = j + 1;
    } else if (c == ':') {
      std::size_t j = i + 1;
      while (j < text.size() && is_atom_char(text[j])) ++j;
      if (j == i + 1)
        throw PenmanError(PenmanErrorKind::BadSyntax, "empty role label");
      out.push_back({Token::Role, text.substr(i + 1, j - i - 1)});
      i = j;
    } else {
      std::size_t j = i;
      while (j < text.size() && is_atom_char(text[j])) ++j;
      out.push_back({Token::Atom, text.substr(i, j - i)});
      i = j;
    }
  }
  return out;
}

// AMR variables look like a single letter plus optional digits.
bool looks_like_variable(const std::string& s) {
  if (s.empty()) return false;
  if (!std::islower(static_cast<unsigned char>(s[0]))) return false;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

struct Parser {
  const std::vector<Token>& toks;
  std::size_t pos = 0;
  AmrGraph graph;
  // Bare-atom edge targets resolved after the whole expression is read,
  // so forward reentrancies work.
  struct Pending {
    std::size_t edge_index;
    bool quoted;
  };
  std::vector<Pending> pending;

  explicit Parser(const std::vector<Token>& t) : toks(t) {}

  const Token& peek() const {
    if (pos >= toks.size())
      throw PenmanError(PenmanErrorKind::UnbalancedParens,
                        "unexpected end of input");
    return toks[pos];
  }
  Token next() {
    Token t = peek();
    ++pos;
    return t;
  }
  void expect(Token::Kind k, const char* what) {
    if (peek().kind != k)
      throw PenmanError(k == Token::RParen || k == Token::LParen
                            ? PenmanErrorKind::UnbalancedParens
                            : PenmanErrorKind::BadSyntax,
                        std::string("expected ") + what + " near '" +
                            peek().text + "'");
    ++pos;
  }

  // node := '(' var '/' concept_label (role target)* ')'
  std::string parse_node() {
    expect(Token::LParen, "'('");
    if (peek().kind != Token::Atom)
      throw PenmanError(PenmanErrorKind::BadSyntax, "expected variable");
    std::string var = next().text;
    expect(Token::Slash, "'/'");
    if (peek().kind != Token::Atom && peek().kind != Token::Str)
      throw PenmanError(PenmanErrorKind::BadSyntax, "expected concept_label");
    std::string concept_label = next().text;
    graph.add_instance(var, concept_label);
    while (pos < toks.size() && peek().kind == Token::Role) {
      std::string role = next().text;
      parse_target(var, role);
    }
    expect(Token::RParen, "')'");
    return var;
  }

  void parse_target(const std::string& source, const std::string& role) {
    const Token& t = peek();
    if (t.kind == Token::LParen) {
      // reserve the slot first so edges come out in encounter order
      graph.add_edge({source, role, "", false});
      std::size_t slot = graph.edges().size() - 1;
      graph.mutable_edges()[slot].target = parse_node();
    } else if (t.kind == Token::Str) {
      graph.add_edge({source, role, "\"" + next().text + "\"", true});
    } else if (t.kind == Token::Atom) {
      graph.add_edge({source, role, next().text, true});
      pending.push_back({graph.edges().size() - 1, false});
    } else {
      throw PenmanError(PenmanErrorKind::BadSyntax,
                        "bad edge target '" + t.text + "'");
    }
  }
};

}  // namespace

AmrGraph parse_penman(const std::string& text) {
  std::vector<Token> toks = lex(text);
  if (toks.empty())
    throw PenmanError(PenmanErrorKind::EmptyGraph, "empty input");
  Parser p(toks);
  std::string root = p.parse_node();
  if (p.pos != toks.size())
    throw PenmanError(PenmanErrorKind::UnbalancedParens,
                      "trailing tokens after top-level expression");
  p.graph.set_root(root);
  // Resolve bare atoms: declared variable -> reentrant reference;
  // variable-shaped but undeclared -> error; anything else -> constant.
  for (const auto& pend : p.pending) {
    AmrEdge& e = p.graph.mutable_edges()[pend.edge_index];
    if (p.graph.has_variable(e.target)) {
      e.target_is_constant = false;
    } else if (looks_like_variable(e.target)) {
      throw PenmanError(PenmanErrorKind::DanglingReference,
                        "variable '" + e.target + "' used but never declared");
    }
  }
  return p.graph;
}

namespace {

void write_node(const AmrGraph& g, const std::string& var,
                std::set<std::string>& declared,
                std::vector<bool>& edge_done, std::string& out) {
  out += "(" + var + " / " + g.concept_of(var);
  declared.insert(var);
  const auto& edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edge_done[i]) continue;
    const AmrEdge& e = edges[i];
    if (e.source == var) {
      edge_done[i] = true;
      out += " :" + e.relation + " ";
      if (e.target_is_constant) {
        out += e.target;
      } else if (declared.count(e.target)) {
        out += e.target;
      } else {
        write_node(g, e.target, declared, edge_done, out);
      }
    }
  }
  out += ")";
}

std::string invert_relation(const std::string& r) {
  if (r.size() > 3 && r.ends_with("-of")) return r.substr(0, r.size() - 3);
  return r + "-of";
}

}  // namespace

std::string serialize_penman(const AmrGraph& graph) {
  if (graph.root().empty() || !graph.has_variable(graph.root()))
    throw std::invalid_argument("serialize_penman: graph has no valid root");
  std::set<std::string> declared;
  std::vector<bool> edge_done(graph.num_edges(), false);
  std::string out;
  write_node(graph, graph.root(), declared, edge_done, out);
  // Variables unreachable through outgoing edges are attached by inverting
  // an incoming edge. Graphs produced by parse_penman never need this.
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t i = 0; i < graph.num_edges(); ++i) {
      if (edge_done[i]) continue;
      const AmrEdge& e = graph.edges()[i];
      if (e.target_is_constant || !declared.count(e.target) ||
          declared.count(e.source))
        continue;
      // splice ":rel-of (source ...)" just before the final ')'
      edge_done[i] = true;
      std::string sub = " :" + invert_relation(e.relation) + " ";
      std::string node;
      write_node(graph, e.source, declared, edge_done, node);
      out.insert(out.size() - 1, sub + node);
      progress = true;
    }
  }
  return out;
}

std::vector<std::string> validate(const AmrGraph& graph) {
  std::vector<std::string> bad;
  if (graph.num_variables() == 0) {
    bad.push_back("MissingRoot: graph has no variables");
    return bad;
  }
  if (graph.root().empty() || !graph.has_variable(graph.root()))
    bad.push_back("MissingRoot: root '" + graph.root() +
                  "' is not a declared variable");
  for (const auto& [var, concept_label] : graph.instances())
    if (concept_label.empty())
      bad.push_back("NoConcept: variable '" + var + "' has empty concept_label");
  std::set<std::array<std::string, 3>> seen;
  for (const AmrEdge& e : graph.edges()) {
    if (!graph.has_variable(e.source))
      bad.push_back("DanglingReference: edge source '" + e.source +
                    "' not declared");
    if (!e.target_is_constant && !graph.has_variable(e.target))
      bad.push_back("DanglingReference: edge target '" + e.target +
                    "' not declared");
    if (!seen.insert({e.source, e.relation, e.target}).second)
      bad.push_back("DuplicateEdge: (" + e.source + ", " + e.relation +
                    ", " + e.target + ")");
  }
  // connectivity over the undirected variable graph
  std::unordered_map<std::string, std::vector<std::string>> adj;
  for (const AmrEdge& e : graph.edges()) {
    if (e.target_is_constant) continue;
    adj[e.source].push_back(e.target);
    adj[e.target].push_back(e.source);
  }
  std::set<std::string> reached;
  std::queue<std::string> q;
  const std::string& start = graph.has_variable(graph.root())
                                 ? graph.root()
                                 : graph.instances().front().first;
  q.push(start);
  reached.insert(start);
  while (!q.empty()) {
    std::string v = q.front();
    q.pop();
    for (const auto& u : adj[v])
      if (reached.insert(u).second) q.push(u);
  }
  if (reached.size() != graph.num_variables())
    bad.push_back("Disconnected: " +
                  std::to_string(graph.num_variables() - reached.size()) +
                  " variable(s) unreachable from the root");
  return bad;
}

std::vector<std::array<std::string, 3>> triples(const AmrGraph& graph) {
  std::vector<std::array<std::string, 3>> out;
  for (const auto& [var, concept_label] : graph.instances())
    out.push_back({"instance", var, concept_label});
  for (const AmrEdge& e : graph.edges())
    out.push_back({e.relation, e.source, e.target});
  return out;
}

std::vector<AmrGraph> read_penman_blocks(const std::string& text) {
  std::vector<AmrGraph> out;
  std::istringstream in(text);
  std::string line, block;
  auto flush = [&] {
    bool blank = block.find_first_not_of(" \t\r\n") == std::string::npos;
    if (!blank) out.push_back(parse_penman(block));
    block.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush();
    } else {
      block += line;
      block += '\n';
    }
  }
  flush();
  return out;
}

std::vector<AmrGraph> read_penman_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return read_penman_blocks(ss.str());
}

}  // namespace factgraph
