#pragma once

// Conversion between the graph form and the linearized form.
//
// Reading a linearized sequence:
//   * every predicate span `[ ... ]` is an event variable (e1, e2, ... in
//     opening order) and every argument span `( ... )` that is not a lone
//     bullet `( @b )` is an entity variable (x1, x2, ...);
//   * the instance of a span is its top-level words, nested spans excluded;
//   * an argument item is governed by the unique predicate span among its
//     siblings, or else by the nearest enclosing predicate span; a predicate
//     span is governed only by an enclosing predicate span;
//   * a lone bullet span stands for an argument item whose variable is the
//     owner (innermost span) of the bullet's antecedent word.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xsem/linear.h"
#include "xsem/repr.h"

namespace xsem {

// One rendered span. A non-bullet item renders variable `var`; a bullet item
// renders a lone bullet span linked to word `antecedent_word` of `var`'s
// instance. `anchor` is the number of the parent's instance words that come
// before the item; items sharing an anchor are ordered by (order, index).
struct SkeletonItem {
  bool bullet = false;
  std::string var;
  std::string parent;  // empty for the top level
  std::size_t anchor = 0;
  std::int64_t order = 0;
  std::size_t antecedent_word = 0;

  bool operator==(const SkeletonItem&) const = default;
};

struct Skeleton {
  std::vector<SkeletonItem> items;

  bool operator==(const Skeleton&) const = default;
};

struct Delinearized {
  GraphRepr graph;
  Skeleton skeleton;
};

// Throws xsem::Error (input) on bullets outside lone-bullet spans, words
// outside any span, ambiguous or missing governors, and duplicate edges.
Delinearized DelinearizeWithSkeleton(const LinearizedRepr& l);
GraphRepr Delinearize(const LinearizedRepr& l);

// Events at the top level in dependency order (an event that is an argument
// of another comes first); each entity nested inside its first governor and
// rendered as a bullet under every other governor; event arguments rendered
// as bullets. A graph with a single event puts its arguments beside the
// predicate span at the top level instead. Siblings follow head origin
// positions when present.
Skeleton DefaultSkeleton(const GraphRepr& g);

// Renders `g` along `skeleton` and checks that the result reads back to the
// same edges. Throws xsem::Error (input) when the skeleton is not a tree over
// g's variables or a bullet would precede its antecedent.
LinearizedRepr Linearize(const GraphRepr& g, const Skeleton& skeleton);
LinearizedRepr Linearize(const GraphRepr& g);

}  // namespace xsem
