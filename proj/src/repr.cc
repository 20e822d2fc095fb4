#include "xsem/repr.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>
#include <utility>

#include "xsem/error.h"

namespace xsem {

std::string_view ToString(VarKind kind) {
  return kind == VarKind::kEvent ? "event" : "entity";
}

std::optional<VarKind> ParseVarKind(std::string_view text) {
  if (text == "event") return VarKind::kEvent;
  if (text == "entity") return VarKind::kEntity;
  return std::nullopt;
}

const Variable* GraphRepr::FindVar(std::string_view id) const {
  for (const Variable& v : vars) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

const TokenSpan& GraphRepr::InstanceOf(std::string_view id) const {
  auto it = instances.find(std::string(id));
  if (it == instances.end()) {
    throw InputError("variable '" + std::string(id) + "' has no instance");
  }
  return it->second;
}

std::string Describe(const Violation& v) {
  std::string out = v.invariant;
  if (!v.element.empty()) out += " [" + v.element + "]";
  if (!v.message.empty()) out += ": " + v.message;
  return out;
}

std::vector<Violation> ValidateSpan(const TokenSpan& span,
                                    std::string_view owner) {
  std::vector<Violation> out;
  const std::string who(owner);
  if (span.tokens.empty()) {
    out.push_back({"span-nonempty", who, "instance has no tokens"});
    return out;
  }
  if (span.head_index >= span.tokens.size()) {
    out.push_back({"span-head", who,
                   "head_index " + std::to_string(span.head_index) +
                       " out of range for " +
                       std::to_string(span.tokens.size()) + " tokens"});
  }
  for (const std::string& t : span.tokens) {
    if (t.empty()) {
      out.push_back({"span-token", who, "empty token"});
      break;
    }
  }
  if (span.origin_positions) {
    const auto& pos = *span.origin_positions;
    if (pos.size() != span.tokens.size()) {
      out.push_back({"span-origin", who,
                     "origin_positions length does not match tokens"});
    } else {
      for (std::size_t i = 1; i < pos.size(); ++i) {
        if (pos[i] <= pos[i - 1]) {
          out.push_back(
              {"span-origin", who, "origin_positions not strictly increasing"});
          break;
        }
      }
    }
  }
  return out;
}

std::vector<Violation> Validate(const GraphRepr& g) {
  std::vector<Violation> out;
  std::unordered_map<std::string, VarKind> kinds;
  for (const Variable& v : g.vars) {
    if (v.id.empty()) {
      out.push_back({"var-id", "", "empty variable id"});
      continue;
    }
    if (!kinds.emplace(v.id, v.kind).second) {
      out.push_back({"var-unique", v.id, "duplicate variable id"});
    }
  }
  for (const Variable& v : g.vars) {
    auto it = g.instances.find(v.id);
    if (it == g.instances.end()) {
      out.push_back({"instance-total", v.id, "variable has no instance"});
      continue;
    }
    auto span_problems = ValidateSpan(it->second, v.id);
    out.insert(out.end(), span_problems.begin(), span_problems.end());
  }
  for (const auto& [id, span] : g.instances) {
    if (!kinds.count(id)) {
      out.push_back({"instance-domain", id, "instance for unknown variable"});
    }
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const Edge& e : g.edges) {
    const std::string name = e.governor + " -" + e.label + "-> " + e.dependent;
    bool endpoints_ok = true;
    if (!kinds.count(e.governor)) {
      out.push_back({"edge-endpoint", e.governor,
                     "edge " + name + " has unknown governor"});
      endpoints_ok = false;
    }
    if (!kinds.count(e.dependent)) {
      out.push_back({"edge-endpoint", e.dependent,
                     "edge " + name + " has unknown dependent"});
      endpoints_ok = false;
    }
    if (e.label.empty()) {
      out.push_back({"edge-label", name, "empty relation label"});
    }
    if (e.governor == e.dependent) {
      out.push_back({"edge-self", name, "self-edge"});
    }
    if (!seen.emplace(e.governor, e.dependent).second) {
      out.push_back({"edge-unique", name, "more than one edge for this pair"});
    }
    if (endpoints_ok && kinds.at(e.governor) != VarKind::kEvent) {
      out.push_back({"edge-governor-kind", name, "governor is not an event"});
    }
  }
  return out;
}

std::vector<Violation> Validate(const FlatRepr& f) {
  std::vector<Violation> out;
  std::unordered_map<std::string, VarKind> kinds;
  for (const Predication& p : f.preds) {
    if (p.var.id.empty()) {
      out.push_back({"var-id", "", "empty variable id"});
      continue;
    }
    if (!kinds.emplace(p.var.id, p.var.kind).second) {
      out.push_back({"pred-unique", p.var.id,
                     "variable named by more than one predication"});
    }
    auto span_problems = ValidateSpan(p.span, p.var.id);
    out.insert(out.end(), span_problems.begin(), span_problems.end());
  }
  for (const ArgAssertion& a : f.args) {
    const std::string name = a.label + "(" + a.governor + "," + a.dependent + ")";
    if (!kinds.count(a.governor)) {
      out.push_back({"arg-known", a.governor, name + " names unknown variable"});
    }
    if (!kinds.count(a.dependent)) {
      out.push_back({"arg-known", a.dependent, name + " names unknown variable"});
    }
  }
  return out;
}

std::vector<Violation> Warnings(const GraphRepr& g) {
  std::vector<Violation> out;
  std::map<std::vector<std::string>, std::string> first_owner;
  for (const Variable& v : g.vars) {
    auto it = g.instances.find(v.id);
    if (it == g.instances.end()) continue;
    auto [pos, inserted] = first_owner.emplace(it->second.tokens, v.id);
    if (!inserted) {
      out.push_back({"shared-span", v.id,
                     "instance identical to that of " + pos->second});
    }
  }
  return out;
}

namespace {

std::string JoinViolations(const std::vector<Violation>& vs) {
  std::string msg;
  for (const Violation& v : vs) {
    if (!msg.empty()) msg += "; ";
    msg += Describe(v);
  }
  return msg;
}

}  // namespace

void CheckValid(const GraphRepr& g) {
  auto vs = Validate(g);
  if (!vs.empty()) throw InputError("invalid graph: " + JoinViolations(vs));
}

void CheckValid(const FlatRepr& f) {
  auto vs = Validate(f);
  if (!vs.empty()) throw InputError("invalid flat form: " + JoinViolations(vs));
}

GraphRepr FlatToGraph(const FlatRepr& f) {
  CheckValid(f);
  GraphRepr g;
  g.vars.reserve(f.preds.size());
  for (const Predication& p : f.preds) {
    g.vars.push_back(p.var);
    g.instances.emplace(p.var.id, p.span);
  }
  g.edges.reserve(f.args.size());
  for (const ArgAssertion& a : f.args) {
    g.edges.push_back(Edge{a.governor, a.label, a.dependent});
  }
  // Duplicate or self ARG assertions only surface as graph violations.
  CheckValid(g);
  return g;
}

FlatRepr GraphToFlat(const GraphRepr& g) {
  CheckValid(g);
  FlatRepr f;
  f.preds.reserve(g.vars.size());
  for (const Variable& v : g.vars) {
    f.preds.push_back(Predication{v, g.instances.at(v.id)});
  }
  f.args.reserve(g.edges.size());
  for (const Edge& e : g.edges) {
    f.args.push_back(ArgAssertion{e.governor, e.dependent, e.label});
  }
  return f;
}

namespace {

struct Signature {
  VarKind kind;
  const std::vector<std::string>* tokens;
  std::size_t head;
  std::size_t out_degree;
  std::size_t in_degree;

  auto Key() const {
    return std::tie(kind, *tokens, head, out_degree, in_degree);
  }
};

std::vector<Signature> Signatures(const GraphRepr& g) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.vars.size(); ++i) index[g.vars[i].id] = i;
  std::vector<Signature> sigs;
  sigs.reserve(g.vars.size());
  for (const Variable& v : g.vars) {
    const TokenSpan& span = g.instances.at(v.id);
    sigs.push_back(Signature{v.kind, &span.tokens, span.head_index, 0, 0});
  }
  for (const Edge& e : g.edges) {
    ++sigs[index.at(e.governor)].out_degree;
    ++sigs[index.at(e.dependent)].in_degree;
  }
  return sigs;
}

// Dense labelled adjacency: label index per ordered pair, -1 when absent.
struct Adjacency {
  std::size_t n = 0;
  std::vector<int> label;

  int At(std::size_t i, std::size_t j) const { return label[i * n + j]; }
};

Adjacency BuildAdjacency(const GraphRepr& g,
                         std::map<std::string, int>& label_ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.vars.size(); ++i) index[g.vars[i].id] = i;
  Adjacency adj;
  adj.n = g.vars.size();
  adj.label.assign(adj.n * adj.n, -1);
  for (const Edge& e : g.edges) {
    auto [it, unused] =
        label_ids.emplace(e.label, static_cast<int>(label_ids.size()));
    adj.label[index.at(e.governor) * adj.n + index.at(e.dependent)] =
        it->second;
  }
  return adj;
}

class IsoSearch {
 public:
  IsoSearch(const std::vector<Signature>& sa, const std::vector<Signature>& sb,
            const Adjacency& aa, const Adjacency& ab)
      : sa_(sa), sb_(sb), aa_(aa), ab_(ab), map_(sa.size(), -1),
        used_(sb.size(), false) {
    order_.resize(sa.size());
    std::iota(order_.begin(), order_.end(), 0);
    // Most constrained first: variables with the fewest same-signature peers.
    std::vector<std::size_t> peers(sa.size(), 0);
    for (std::size_t i = 0; i < sa.size(); ++i) {
      for (std::size_t j = 0; j < sb.size(); ++j) {
        if (sa[i].Key() == sb[j].Key()) ++peers[i];
      }
    }
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t x, std::size_t y) {
                       return peers[x] < peers[y];
                     });
  }

  bool Run() { return Extend(0); }

 private:
  bool Consistent(std::size_t i, std::size_t j) const {
    if (aa_.At(i, i) != ab_.At(j, j)) return false;
    for (std::size_t k = 0; k < map_.size(); ++k) {
      if (map_[k] < 0) continue;
      const auto mk = static_cast<std::size_t>(map_[k]);
      if (aa_.At(i, k) != ab_.At(j, mk)) return false;
      if (aa_.At(k, i) != ab_.At(mk, j)) return false;
    }
    return true;
  }

  bool Extend(std::size_t depth) {
    if (depth == order_.size()) return true;
    const std::size_t i = order_[depth];
    for (std::size_t j = 0; j < sb_.size(); ++j) {
      if (used_[j] || sa_[i].Key() != sb_[j].Key()) continue;
      if (!Consistent(i, j)) continue;
      map_[i] = static_cast<int>(j);
      used_[j] = true;
      if (Extend(depth + 1)) return true;
      map_[i] = -1;
      used_[j] = false;
    }
    return false;
  }

  const std::vector<Signature>& sa_;
  const std::vector<Signature>& sb_;
  const Adjacency& aa_;
  const Adjacency& ab_;
  std::vector<int> map_;
  std::vector<bool> used_;
  std::vector<std::size_t> order_;
};

}  // namespace

std::vector<std::size_t> CanonicalOrder(const GraphRepr& g) {
  const auto sigs = Signatures(g);
  std::vector<std::size_t> order(g.vars.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     const auto ka = sigs[a].Key();
                     const auto kb = sigs[b].Key();
                     if (ka != kb) return ka < kb;
                     return g.vars[a].id < g.vars[b].id;
                   });
  return order;
}

bool Isomorphic(const GraphRepr& a, const GraphRepr& b) {
  if (a.vars.size() != b.vars.size() || a.edges.size() != b.edges.size()) {
    return false;
  }
  const auto sa = Signatures(a);
  const auto sb = Signatures(b);
  // Signature multisets must agree before any search.
  std::vector<std::size_t> oa(sa.size()), ob(sb.size());
  std::iota(oa.begin(), oa.end(), 0);
  std::iota(ob.begin(), ob.end(), 0);
  auto by_key = [](const std::vector<Signature>& s) {
    return [&s](std::size_t x, std::size_t y) { return s[x].Key() < s[y].Key(); };
  };
  std::sort(oa.begin(), oa.end(), by_key(sa));
  std::sort(ob.begin(), ob.end(), by_key(sb));
  for (std::size_t i = 0; i < oa.size(); ++i) {
    if (sa[oa[i]].Key() != sb[ob[i]].Key()) return false;
  }
  std::map<std::string, int> labels;
  const Adjacency aa = BuildAdjacency(a, labels);
  const Adjacency ab = BuildAdjacency(b, labels);
  return IsoSearch(sa, sb, aa, ab).Run();
}

bool Isomorphic(const FlatRepr& a, const FlatRepr& b) {
  return Isomorphic(FlatToGraph(a), FlatToGraph(b));
}

}  // namespace xsem
