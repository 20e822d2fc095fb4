#include "xsem/linearize.h"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <utility>

#include "xsem/error.h"

namespace xsem {
namespace {

struct Analysis {
  SpanTree tree;
  std::vector<int> var_of_span;  // -1 for lone bullet spans
  std::vector<int> span_of_var;
  std::vector<std::pair<int, int>> edges;  // (governor span, dependent span)
};

std::string At(std::size_t pos) { return "position " + std::to_string(pos); }

int EnclosingPredicate(const SpanTree& t, int s) {
  int p = t.spans[s].parent;
  while (p >= 0 && !t.spans[p].is_pred) p = t.spans[p].parent;
  return p;
}

int ArgumentGovernor(const SpanTree& t, int s) {
  const int parent = t.spans[s].parent;
  const std::vector<int>& siblings =
      parent < 0 ? t.root_children : t.spans[parent].children;
  int found = -1;
  int count = 0;
  for (int sib : siblings) {
    if (t.spans[sib].is_pred) {
      found = sib;
      ++count;
    }
  }
  if (count >= 2) {
    throw InputError(At(t.spans[s].open) +
                     ": ambiguous governor, the argument has " +
                     std::to_string(count) + " predicate siblings");
  }
  if (count == 1) return found;
  const int enclosing = EnclosingPredicate(t, s);
  if (enclosing < 0) {
    throw InputError(At(t.spans[s].open) +
                     ": argument span has no governing predicate");
  }
  return enclosing;
}

Analysis Analyze(const LinearizedRepr& l) {
  CheckValid(l);
  Analysis a;
  a.tree = BuildSpanTree(l.tokens);
  const SpanTree& t = a.tree;
  if (!t.root_words.empty()) {
    throw InputError(At(t.root_words.front()) + ": word outside any span");
  }
  if (!t.root_bullets.empty()) {
    throw InputError(At(t.root_bullets.front()) + ": bullet outside any span");
  }

  a.var_of_span.assign(t.spans.size(), -1);
  for (std::size_t s = 0; s < t.spans.size(); ++s) {
    const SpanInfo& info = t.spans[s];
    const bool lone = !info.is_pred && t.IsLoneBullet(static_cast<int>(s));
    if (!info.bullets.empty() && !lone) {
      throw InputError(At(info.bullets.front()) +
                       ": a bullet must form its own argument span");
    }
    if (!lone) {
      a.var_of_span[s] = static_cast<int>(a.span_of_var.size());
      a.span_of_var.push_back(static_cast<int>(s));
    }
  }

  std::set<std::pair<int, int>> seen;
  auto add_edge = [&](int gov, int dep, std::size_t where) {
    if (gov == dep) throw InputError(At(where) + ": self edge");
    if (!seen.insert({gov, dep}).second) {
      throw InputError(At(where) + ": duplicate argument edge");
    }
    a.edges.push_back({gov, dep});
  };

  for (std::size_t s = 0; s < t.spans.size(); ++s) {
    const int si = static_cast<int>(s);
    const SpanInfo& info = t.spans[s];
    if (info.is_pred) {
      const int gov = EnclosingPredicate(t, si);
      if (gov >= 0) add_edge(gov, si, info.open);
      continue;
    }
    const int gov = ArgumentGovernor(t, si);
    if (a.var_of_span[s] >= 0) {
      add_edge(gov, si, info.open);
    } else {
      const std::size_t antecedent = *l.assignments[info.bullets.front()];
      const int owner = t.innermost[antecedent];
      if (owner < 0) {
        throw InputError(At(info.bullets.front()) +
                         ": bullet antecedent is outside any span");
      }
      add_edge(gov, owner, info.open);
    }
  }
  return a;
}

std::size_t IndexIn(const std::vector<std::size_t>& v, std::size_t x) {
  return static_cast<std::size_t>(
      std::lower_bound(v.begin(), v.end(), x) - v.begin());
}

std::size_t WordsBefore(const SpanTree& t, int parent, std::size_t pos) {
  if (parent < 0) return 0;
  return IndexIn(t.spans[parent].words, pos);
}

}  // namespace

Delinearized DelinearizeWithSkeleton(const LinearizedRepr& l) {
  const Analysis a = Analyze(l);
  const SpanTree& t = a.tree;
  Delinearized out;
  std::vector<std::string> names(a.span_of_var.size());
  int events = 0;
  int entities = 0;
  for (std::size_t v = 0; v < a.span_of_var.size(); ++v) {
    const SpanInfo& info = t.spans[a.span_of_var[v]];
    names[v] = info.is_pred ? "e" + std::to_string(++events)
                            : "x" + std::to_string(++entities);
    out.graph.vars.push_back(
        {names[v], info.is_pred ? VarKind::kEvent : VarKind::kEntity});
    TokenSpan span;
    for (std::size_t pos : info.words) {
      span.tokens.push_back(l.tokens[pos].surface);
      if (l.tokens[pos].is_head) span.head_index = span.tokens.size() - 1;
    }
    out.graph.instances[names[v]] = std::move(span);
  }
  auto name_of = [&](int span) { return names[a.var_of_span[span]]; };
  for (const auto& [gov, dep] : a.edges) {
    out.graph.edges.push_back(
        {name_of(gov), std::string(kArgLabel), name_of(dep)});
  }

  std::vector<int> order_in_parent(t.spans.size(), 0);
  for (std::size_t i = 0; i < t.root_children.size(); ++i) {
    order_in_parent[t.root_children[i]] = static_cast<int>(i);
  }
  for (const SpanInfo& info : t.spans) {
    for (std::size_t i = 0; i < info.children.size(); ++i) {
      order_in_parent[info.children[i]] = static_cast<int>(i);
    }
  }
  for (std::size_t s = 0; s < t.spans.size(); ++s) {
    const SpanInfo& info = t.spans[s];
    SkeletonItem item;
    item.parent = info.parent < 0 ? std::string() : name_of(info.parent);
    item.anchor = WordsBefore(t, info.parent, info.open);
    item.order = order_in_parent[s];
    if (a.var_of_span[s] >= 0) {
      item.var = name_of(static_cast<int>(s));
    } else {
      const std::size_t antecedent = *l.assignments[info.bullets.front()];
      const int owner = t.innermost[antecedent];
      item.bullet = true;
      item.var = name_of(owner);
      item.antecedent_word = IndexIn(t.spans[owner].words, antecedent);
    }
    out.skeleton.items.push_back(std::move(item));
  }
  return out;
}

GraphRepr Delinearize(const LinearizedRepr& l) {
  return DelinearizeWithSkeleton(l).graph;
}

Skeleton DefaultSkeleton(const GraphRepr& g) {
  CheckValid(g);
  const std::size_t n = g.vars.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[g.vars[i].id] = i;
  const auto canonical = CanonicalOrder(g);
  std::vector<std::size_t> canon_rank(n);
  for (std::size_t r = 0; r < n; ++r) canon_rank[canonical[r]] = r;

  auto head_origin = [&](std::size_t v) -> std::optional<std::size_t> {
    const TokenSpan& s = g.instances.at(g.vars[v].id);
    if (!s.origin_positions) return std::nullopt;
    return (*s.origin_positions)[s.head_index];
  };
  constexpr std::int64_t kNoOrigin = std::int64_t{1} << 40;

  // Topological order of events: a dependent event precedes its governor.
  std::vector<std::vector<std::size_t>> governed_by(n);
  std::vector<std::size_t> pending(n, 0);
  for (const Edge& e : g.edges) {
    const std::size_t gov = index.at(e.governor);
    const std::size_t dep = index.at(e.dependent);
    if (g.vars[dep].kind == VarKind::kEvent) {
      governed_by[dep].push_back(gov);
      ++pending[gov];
    }
  }
  auto event_key = [&](std::size_t v) {
    const auto o = head_origin(v);
    return std::make_pair(o ? static_cast<std::int64_t>(*o) : kNoOrigin,
                          canon_rank[v]);
  };
  using Key = std::pair<std::pair<std::int64_t, std::size_t>, std::size_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> ready;
  std::size_t event_count = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (g.vars[v].kind != VarKind::kEvent) continue;
    ++event_count;
    if (pending[v] == 0) ready.push({event_key(v), v});
  }
  std::vector<std::size_t> rank(n, 0);
  std::size_t next_rank = 0;
  while (!ready.empty()) {
    const std::size_t v = ready.top().second;
    ready.pop();
    rank[v] = next_rank++;
    for (std::size_t gov : governed_by[v]) {
      if (--pending[gov] == 0) ready.push({event_key(gov), gov});
    }
  }
  if (next_rank != event_count) {
    throw InputError("cannot linearize: events form an argument cycle");
  }

  Skeleton sk;
  for (std::size_t v = 0; v < n; ++v) {
    if (g.vars[v].kind != VarKind::kEvent) continue;
    SkeletonItem item;
    item.var = g.vars[v].id;
    item.order = static_cast<std::int64_t>(rank[v]);
    sk.items.push_back(std::move(item));
  }

  auto place = [&](SkeletonItem& item, std::size_t gov, std::size_t dep,
                   std::size_t edge_index) {
    const TokenSpan& parent = g.instances.at(g.vars[gov].id);
    const auto o = head_origin(dep);
    item.parent = g.vars[gov].id;
    item.anchor = parent.tokens.size();
    if (o && parent.origin_positions) {
      const auto& po = *parent.origin_positions;
      item.anchor = static_cast<std::size_t>(
          std::lower_bound(po.begin(), po.end(), *o) - po.begin());
    }
    item.order = o ? static_cast<std::int64_t>(*o)
                   : kNoOrigin + static_cast<std::int64_t>(edge_index);
  };

  std::vector<std::vector<std::size_t>> in_edges(n);
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    in_edges[index.at(g.edges[i].dependent)].push_back(i);
  }
  for (std::size_t v = 0; v < n; ++v) {
    auto edges = in_edges[v];
    std::sort(edges.begin(), edges.end(), [&](std::size_t a, std::size_t b) {
      const std::size_t ga = index.at(g.edges[a].governor);
      const std::size_t gb = index.at(g.edges[b].governor);
      return std::tie(rank[ga], a) < std::tie(rank[gb], b);
    });
    const bool entity = g.vars[v].kind == VarKind::kEntity;
    if (entity && edges.empty()) {
      throw InputError("cannot linearize: entity '" + g.vars[v].id +
                       "' is not an argument of any event");
    }
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const std::size_t gov = index.at(g.edges[edges[k]].governor);
      SkeletonItem item;
      place(item, gov, v, edges[k]);
      item.var = g.vars[v].id;
      if (!entity || k > 0) {
        item.bullet = true;
        item.antecedent_word = g.instances.at(g.vars[v].id).head_index;
      }
      sk.items.push_back(std::move(item));
    }
  }
  // A lone event keeps its arguments beside it: [ sleeps_h ] ( John_h ).
  if (event_count == 1) {
    for (SkeletonItem& item : sk.items) {
      if (item.parent.empty()) {
        const auto o = head_origin(index.at(item.var));
        item.order = o ? static_cast<std::int64_t>(*o) : -1;
      } else {
        item.parent.clear();
        item.anchor = 0;
      }
    }
  }
  return sk;
}

LinearizedRepr Linearize(const GraphRepr& g, const Skeleton& skeleton) {
  CheckValid(g);
  for (const Edge& e : g.edges) {
    if (e.label != kArgLabel) {
      throw InputError("cannot linearize relation label '" + e.label + "'");
    }
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.vars.size(); ++i) index[g.vars[i].id] = i;

  // Children of every variable, plus the top level under key "".
  std::map<std::string, std::vector<std::size_t>> children;
  std::vector<int> rendered(g.vars.size(), -1);
  for (std::size_t i = 0; i < skeleton.items.size(); ++i) {
    const SkeletonItem& item = skeleton.items[i];
    const std::string where = "skeleton item " + std::to_string(i);
    auto it = index.find(item.var);
    if (it == index.end()) {
      throw InputError(where + ": unknown variable '" + item.var + "'");
    }
    const TokenSpan& own = g.instances.at(item.var);
    if (item.bullet) {
      if (item.antecedent_word >= own.tokens.size()) {
        throw InputError(where + ": antecedent word out of range");
      }
    } else {
      if (rendered[it->second] >= 0) {
        throw InputError(where + ": variable '" + item.var +
                         "' is placed more than once");
      }
      rendered[it->second] = static_cast<int>(i);
    }
    if (item.parent.empty()) {
      if (item.anchor != 0) throw InputError(where + ": top-level anchor");
    } else {
      auto p = index.find(item.parent);
      if (p == index.end()) {
        throw InputError(where + ": unknown parent '" + item.parent + "'");
      }
      if (item.anchor > g.instances.at(item.parent).tokens.size()) {
        throw InputError(where + ": anchor beyond the parent's words");
      }
    }
    children[item.parent].push_back(i);
  }
  for (std::size_t v = 0; v < g.vars.size(); ++v) {
    if (rendered[v] < 0) {
      throw InputError("skeleton does not place variable '" + g.vars[v].id +
                       "'");
    }
  }
  // Every parent chain must reach the top level.
  for (std::size_t v = 0; v < g.vars.size(); ++v) {
    std::string cur = g.vars[v].id;
    for (std::size_t steps = 0; !cur.empty(); ++steps) {
      if (steps > g.vars.size()) {
        throw InputError("skeleton is not a tree: cycle through '" +
                         g.vars[v].id + "'");
      }
      cur = skeleton.items[rendered[index.at(cur)]].parent;
    }
  }
  for (auto& [parent, kids] : children) {
    std::stable_sort(kids.begin(), kids.end(),
                     [&](std::size_t a, std::size_t b) {
                       const SkeletonItem& x = skeleton.items[a];
                       const SkeletonItem& y = skeleton.items[b];
                       return std::tie(x.anchor, x.order) <
                              std::tie(y.anchor, y.order);
                     });
  }

  LinearizedRepr l;
  std::map<std::string, std::vector<std::size_t>> word_pos;
  std::vector<int> var_of_open;  // per rendered span in opening order
  struct PendingBullet {
    std::size_t pos;
    const SkeletonItem* item;
  };
  std::vector<PendingBullet> bullets;

  auto emit = [&](LinToken tok) {
    l.tokens.push_back(std::move(tok));
    l.assignments.push_back(std::nullopt);
  };
  auto render = [&](auto&& self, std::size_t item_index) -> void {
    const SkeletonItem& item = skeleton.items[item_index];
    if (item.bullet) {
      emit(LinToken::OpenArg());
      bullets.push_back({l.tokens.size(), &item});
      emit(LinToken::Bullet());
      emit(LinToken::CloseArg());
      return;
    }
    const std::size_t v = index.at(item.var);
    const bool pred = g.vars[v].kind == VarKind::kEvent;
    const TokenSpan& span = g.instances.at(item.var);
    var_of_open.push_back(static_cast<int>(v));
    emit(pred ? LinToken::OpenPred() : LinToken::OpenArg());
    const auto& kids = children[item.var];
    std::size_t k = 0;
    for (std::size_t w = 0; w <= span.tokens.size(); ++w) {
      while (k < kids.size() && skeleton.items[kids[k]].anchor == w) {
        self(self, kids[k++]);
      }
      if (w < span.tokens.size()) {
        word_pos[item.var].push_back(l.tokens.size());
        emit(LinToken::Word(span.tokens[w], w == span.head_index));
      }
    }
    emit(pred ? LinToken::ClosePred() : LinToken::CloseArg());
  };
  for (std::size_t i : children[""]) render(render, i);

  for (const PendingBullet& b : bullets) {
    const auto it = word_pos.find(b.item->var);
    const std::size_t target = it->second[b.item->antecedent_word];
    if (target > b.pos) {
      throw InputError("ordering conflict: a bullet for '" + b.item->var +
                       "' would precede its antecedent");
    }
    l.assignments[b.pos] = target;
  }

  // Read the rendering back and compare edge sets.
  const Analysis a = Analyze(l);
  std::set<std::pair<std::string, std::string>> got;
  std::vector<std::string> span_var(a.tree.spans.size());
  std::size_t next = 0;
  for (std::size_t s = 0; s < a.tree.spans.size(); ++s) {
    if (a.var_of_span[s] >= 0) span_var[s] = g.vars[var_of_open[next++]].id;
  }
  for (const auto& [gov, dep] : a.edges) got.insert({span_var[gov], span_var[dep]});
  std::set<std::pair<std::string, std::string>> want;
  for (const Edge& e : g.edges) want.insert({e.governor, e.dependent});
  if (got != want) {
    throw InputError(
        "skeleton does not reproduce the graph's argument edges");
  }
  return l;
}

LinearizedRepr Linearize(const GraphRepr& g) {
  return Linearize(g, DefaultSkeleton(g));
}

}  // namespace xsem
