#pragma once

// Coreference scoring: MUC, B-cubed and CEAF-e over mention chains, plus the
// extraction of chains from linearized representations.

#include <cstddef>
#include <span>
#include <vector>

#include "xsem/linear.h"
#include "xsem/scores.h"

namespace xsem {

using MentionId = std::size_t;

// `mentions` is sorted and unique. `chains` are disjoint, nonempty and cover
// a subset of the mentions; uncovered mentions are singletons.
struct MentionChainSet {
  std::vector<MentionId> mentions;
  std::vector<std::vector<MentionId>> chains;

  // Full partition of `mentions`, singletons included, each entity sorted,
  // entities ordered by their smallest mention.
  std::vector<std::vector<MentionId>> Entities() const;
};

// Throws xsem::Error (input) on overlapping chains or chain members missing
// from `mentions`.
void CheckChains(const MentionChainSet& s);

// Mentions are the opening positions of argument spans, lone bullet spans
// included. A bullet's mention is its enclosing argument span; its antecedent
// word is mapped to the opening position of its innermost span. Chains are
// the connected components of the links; unlinked bullets stay singletons.
MentionChainSet ChainsFromLinearized(const LinearizedRepr& l);

// Raw ratio parts, so corpus scores can be micro-averaged.
struct MetricCounts {
  double p_num = 0.0;
  double p_den = 0.0;
  double r_num = 0.0;
  double r_den = 0.0;

  MetricCounts& operator+=(const MetricCounts& o) {
    p_num += o.p_num;
    p_den += o.p_den;
    r_num += o.r_num;
    r_den += o.r_den;
    return *this;
  }
  PrfScore Score() const { return MakePrf(p_num, p_den, r_num, r_den); }
};

// A mention present on only one side overlaps nothing on the other: it is
// its own part for MUC and contributes no overlap to B-cubed or CEAF-e.
MetricCounts MucCounts(const MentionChainSet& key,
                       const MentionChainSet& response);
MetricCounts BCubedCounts(const MentionChainSet& key,
                          const MentionChainSet& response);
MetricCounts CeafECounts(const MentionChainSet& key,
                         const MentionChainSet& response);

PrfScore Muc(const MentionChainSet& key, const MentionChainSet& response);
PrfScore BCubed(const MentionChainSet& key, const MentionChainSet& response);
PrfScore CeafE(const MentionChainSet& key, const MentionChainSet& response);

double AvgF1(double muc_f1, double b3_f1, double ceafe_f1);

struct CorefReport {
  PrfScore muc;
  PrfScore b3;
  PrfScore ceafe;
  double avg_f1 = 0.0;
};

// Micro-averaged over aligned (key, response) pairs.
CorefReport ScoreCoref(std::span<const MentionChainSet> key,
                       std::span<const MentionChainSet> response);

}  // namespace xsem
