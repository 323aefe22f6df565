#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace factgraph {

// Rooted AMR graph: variables with concept labels, relation-labeled edges,
// and constant targets (numbers, quoted strings, symbols like "-").
// Relation labels are stored with the leading ':' stripped; inverse
// relations ("ARG0-of") are kept verbatim.

struct AmrEdge {
  std::string source;    // always a variable
  std::string relation;  // e.g. "ARG0", "quant", "ARG1-of"
  std::string target;    // variable name or constant text
  bool target_is_constant = false;

  bool operator==(const AmrEdge&) const = default;
};

class AmrGraph {
 public:
  const std::string& root() const { return root_; }
  void set_root(const std::string& var) { root_ = var; }

  // Declaration order is preserved; serialization depends on it.
  const std::vector<std::pair<std::string, std::string>>& instances() const {
    return instances_;
  }
  const std::vector<AmrEdge>& edges() const { return edges_; }

  bool has_variable(const std::string& var) const {
    return index_.count(var) != 0;
  }
  const std::string& concept_of(const std::string& var) const;

  void add_instance(const std::string& var, const std::string& concept_label);
  void add_edge(AmrEdge e) { edges_.push_back(std::move(e)); }
  std::vector<AmrEdge>& mutable_edges() { return edges_; }

  std::size_t num_variables() const { return instances_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

 private:
  std::string root_;
  std::vector<std::pair<std::string, std::string>> instances_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<AmrEdge> edges_;
};

enum class PenmanErrorKind {
  UnbalancedParens,
  DuplicateVariableConcept,
  DanglingReference,
  EmptyGraph,
  BadSyntax,
};

struct PenmanError : std::runtime_error {
  PenmanError(PenmanErrorKind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
  PenmanErrorKind kind;
};

AmrGraph parse_penman(const std::string& text);
std::string serialize_penman(const AmrGraph& graph);

// Empty result iff all invariants hold. Messages start with a stable tag:
// MissingRoot, DanglingReference, Disconnected, DuplicateEdge, NoConcept.
std::vector<std::string> validate(const AmrGraph& graph);

// Verbatim triples: one ("instance", var, concept) per variable plus one
// (relation, source, target) per edge. Used by round-trip tests; Smatch
// builds its own normalized triple set.
std::vector<std::array<std::string, 3>> triples(const AmrGraph& graph);

// Reads blank-line-separated Penman blocks; lines starting with '#' are
// metadata comments and skipped.
std::vector<AmrGraph> read_penman_file(const std::string& path);
std::vector<AmrGraph> read_penman_blocks(const std::string& text);

}  // namespace factgraph
