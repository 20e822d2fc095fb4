#pragma once

// Flat and graph forms of the predicate-argument meaning representation.
//
// A graph is a triple <V, I, R>: variables, an instance span for every
// variable, and labelled argument edges between ordered variable pairs. The
// flat form holds the same content as a bag of unary predications plus binary
// ARG assertions. Both are plain values; build them, validate them, then
// treat them as immutable.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xsem {

inline constexpr std::string_view kArgLabel = "ARG";

enum class VarKind { kEvent, kEntity };

std::string_view ToString(VarKind kind);
std::optional<VarKind> ParseVarKind(std::string_view text);

// Surface tokens of a predicate or argument instance. `head_index` marks the
// syntactic head. `origin_positions`, when present, are 0-based indices into
// the target-language sentence.
struct TokenSpan {
  std::vector<std::string> tokens;
  std::size_t head_index = 0;
  std::optional<std::vector<std::size_t>> origin_positions;

  bool operator==(const TokenSpan&) const = default;
};

struct Variable {
  std::string id;
  VarKind kind = VarKind::kEntity;

  bool operator==(const Variable&) const = default;
};

struct Edge {
  std::string governor;
  std::string label{kArgLabel};
  std::string dependent;

  bool operator==(const Edge&) const = default;
};

struct GraphRepr {
  std::vector<Variable> vars;
  std::map<std::string, TokenSpan> instances;
  std::vector<Edge> edges;

  bool empty() const { return vars.empty(); }
  const Variable* FindVar(std::string_view id) const;
  const TokenSpan& InstanceOf(std::string_view id) const;

  bool operator==(const GraphRepr&) const = default;
};

struct Predication {
  Variable var;
  TokenSpan span;

  bool operator==(const Predication&) const = default;
};

struct ArgAssertion {
  std::string governor;
  std::string dependent;
  std::string label{kArgLabel};

  bool operator==(const ArgAssertion&) const = default;
};

struct FlatRepr {
  std::vector<Predication> preds;
  std::vector<ArgAssertion> args;

  bool operator==(const FlatRepr&) const = default;
};

// One broken invariant. `invariant` is a short stable tag, `element` names
// the offending variable, edge or span.
struct Violation {
  std::string invariant;
  std::string element;
  std::string message;
};

std::string Describe(const Violation& v);

// Invariants of a single span; `owner` is used in the reported element.
std::vector<Violation> ValidateSpan(const TokenSpan& span,
                                    std::string_view owner);

// Empty iff every graph invariant holds.
std::vector<Violation> Validate(const GraphRepr& g);
std::vector<Violation> Validate(const FlatRepr& f);

// Non-fatal observations: two variables sharing an identical instance span.
std::vector<Violation> Warnings(const GraphRepr& g);

// Throw xsem::Error (input) listing the violations, if any.
void CheckValid(const GraphRepr& g);
void CheckValid(const FlatRepr& f);

GraphRepr FlatToGraph(const FlatRepr& f);
FlatRepr GraphToFlat(const GraphRepr& g);

// Variable positions of `g` sorted by (kind, instance tokens, head index,
// out-degree, in-degree, id). Used wherever ties need a reproducible order.
std::vector<std::size_t> CanonicalOrder(const GraphRepr& g);

// Isomorphism under variable renaming. Instances compare by tokens and head
// index; origin positions are ignored.
bool Isomorphic(const GraphRepr& a, const GraphRepr& b);
bool Isomorphic(const FlatRepr& a, const FlatRepr& b);

}  // namespace xsem
