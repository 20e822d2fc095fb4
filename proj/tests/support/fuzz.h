#pragma once

// Seeded generators of random representations for property tests.

#include <algorithm>
#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "xsem/repr.h"

namespace xsem::testing {

using Rng = std::mt19937_64;

inline std::size_t Uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool Coin(Rng& rng, double p) {
  return std::bernoulli_distribution(p)(rng);
}

// Words that exercise every escape rule of the text form.
inline const std::vector<std::string>& TrickyWords() {
  static const std::vector<std::string> words = {
      "storm", "surge", "hit",  "[",   "]",       "(",     ")",
      "@b",    "\\",    "a\\b", "_h",  "x_h",     "#coref", "#empty",
      "#",     "\xE2\x80\xA2",  "h_",  "people",  "a_h_h", "\\_h"};
  return words;
}

inline const std::vector<std::string>& PlainWords() {
  static const std::vector<std::string> words = {
      "the", "storm", "surge", "hit", "house", "a", "people", "were",
      "reported", "fled"};
  return words;
}

struct GraphShape {
  std::size_t max_events = 3;
  std::size_t max_entities = 4;
  std::size_t max_span = 3;
  double extra_edge = 0.3;
  double event_edge = 0.2;
  const std::vector<std::string>* words = &PlainWords();
  bool origins = false;
  bool shuffle_ids = true;
};

inline TokenSpan RandomSpan(Rng& rng, const GraphShape& shape,
                            std::size_t* next_origin) {
  TokenSpan s;
  const std::size_t n = Uniform(rng, 1, shape.max_span);
  for (std::size_t i = 0; i < n; ++i) {
    s.tokens.push_back((*shape.words)[Uniform(rng, 0, shape.words->size() - 1)]);
  }
  s.head_index = Uniform(rng, 0, n - 1);
  if (shape.origins) {
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) {
      *next_origin += Uniform(rng, 1, 3);
      pos.push_back(*next_origin);
    }
    s.origin_positions = std::move(pos);
  }
  return s;
}

// A valid graph that can always be linearized: at least one event, events
// only take earlier events as arguments, and every entity has a governor.
inline GraphRepr RandomGraph(Rng& rng, const GraphShape& shape = {}) {
  const std::size_t events = Uniform(rng, 1, shape.max_events);
  const std::size_t entities = Uniform(rng, 0, shape.max_entities);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < events + entities; ++i) {
    ids.push_back("v" + std::to_string(i));
  }
  if (shape.shuffle_ids) std::shuffle(ids.begin(), ids.end(), rng);

  GraphRepr g;
  std::size_t origin = 0;
  for (std::size_t i = 0; i < events + entities; ++i) {
    Variable v{ids[i], i < events ? VarKind::kEvent : VarKind::kEntity};
    g.instances[v.id] = RandomSpan(rng, shape, &origin);
    g.vars.push_back(v);
  }
  for (std::size_t x = events; x < events + entities; ++x) {
    const std::size_t first = Uniform(rng, 0, events - 1);
    for (std::size_t e = 0; e < events; ++e) {
      if (e == first || Coin(rng, shape.extra_edge)) {
        g.edges.push_back({ids[e], std::string(kArgLabel), ids[x]});
      }
    }
  }
  for (std::size_t e = 1; e < events; ++e) {
    for (std::size_t d = 0; d < e; ++d) {
      if (Coin(rng, shape.event_edge)) {
        g.edges.push_back({ids[e], std::string(kArgLabel), ids[d]});
      }
    }
  }
  std::shuffle(g.vars.begin(), g.vars.end(), rng);
  std::shuffle(g.edges.begin(), g.edges.end(), rng);
  return g;
}

// A valid graph with unconstrained edges (any event to any other variable),
// possibly without events at all.
inline GraphRepr RandomMetricGraph(Rng& rng, std::size_t max_vars,
                                   const std::vector<std::string>& words =
                                       PlainWords()) {
  GraphShape shape;
  shape.words = &words;
  shape.max_span = 3;
  const std::size_t n = Uniform(rng, 1, max_vars);
  GraphRepr g;
  std::size_t origin = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Variable v{"v" + std::to_string(i),
               Coin(rng, 0.5) ? VarKind::kEvent : VarKind::kEntity};
    g.instances[v.id] = RandomSpan(rng, shape, &origin);
    g.vars.push_back(v);
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (g.vars[a].kind != VarKind::kEvent) continue;
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b && Coin(rng, 0.3)) {
        g.edges.push_back({g.vars[a].id, std::string(kArgLabel), g.vars[b].id});
      }
    }
  }
  return g;
}

// A noisy copy of `g`: some instances rewritten, some edges dropped, some
// variables removed, and the ids renamed and reordered.
inline GraphRepr Perturb(Rng& rng, const GraphRepr& g,
                         const std::vector<std::string>& words = PlainWords()) {
  GraphRepr out;
  std::vector<std::string> keep;
  for (const Variable& v : g.vars) {
    if (g.vars.size() > 1 && Coin(rng, 0.15)) continue;
    keep.push_back(v.id);
    TokenSpan s = g.InstanceOf(v.id);
    if (Coin(rng, 0.3)) {
      s.tokens[Uniform(rng, 0, s.tokens.size() - 1)] =
          words[Uniform(rng, 0, words.size() - 1)];
    }
    if (Coin(rng, 0.2)) {
      s.tokens.push_back(words[Uniform(rng, 0, words.size() - 1)]);
    }
    s.origin_positions.reset();
    out.vars.push_back({"r" + v.id, v.kind});
    out.instances["r" + v.id] = std::move(s);
  }
  auto kept = [&](const std::string& id) {
    return std::find(keep.begin(), keep.end(), id) != keep.end();
  };
  for (const Edge& e : g.edges) {
    if (kept(e.governor) && kept(e.dependent) && !Coin(rng, 0.2)) {
      out.edges.push_back({"r" + e.governor, e.label, "r" + e.dependent});
    }
  }
  std::shuffle(out.vars.begin(), out.vars.end(), rng);
  return out;
}

// `g` with its variables renamed by a random permutation and all lists
// reordered.
inline GraphRepr Rename(Rng& rng, const GraphRepr& g) {
  std::vector<std::string> fresh;
  for (std::size_t i = 0; i < g.vars.size(); ++i) {
    fresh.push_back("n" + std::to_string(i));
  }
  std::shuffle(fresh.begin(), fresh.end(), rng);
  std::vector<std::pair<std::string, std::string>> names;
  for (std::size_t i = 0; i < g.vars.size(); ++i) {
    names.emplace_back(g.vars[i].id, fresh[i]);
  }
  auto name = [&](const std::string& id) {
    for (const auto& [from, to] : names) {
      if (from == id) return to;
    }
    return id;
  };
  GraphRepr out;
  for (const Variable& v : g.vars) {
    out.vars.push_back({name(v.id), v.kind});
    out.instances[name(v.id)] = g.InstanceOf(v.id);
  }
  for (const Edge& e : g.edges) {
    out.edges.push_back({name(e.governor), e.label, name(e.dependent)});
  }
  std::shuffle(out.vars.begin(), out.vars.end(), rng);
  std::shuffle(out.edges.begin(), out.edges.end(), rng);
  return out;
}

}  // namespace xsem::testing
