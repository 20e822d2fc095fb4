#pragma once

// Graph similarity S(phi, psi): the best, over injective partial variable
// mappings m from g1 to g2, of
//
//   sum over mapped v of phi(I1(v), I2(m(v)))
//     + sum over edges (a, b) of g1 with a and b mapped of
//           psi(R1(a, b), R2(m(a), m(b)))     (0 when g2 lacks that edge)
//
// Precision divides S by |vars(g1)| + |edges(g1)|, recall by the same counts
// of g2. g1 is the system side; with BLEU as phi, g1's spans are candidates
// and g2's spans references.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "xsem/repr.h"
#include "xsem/scores.h"
#include "xsem/similarity.h"

namespace xsem {

struct MatchConfig {
  SimilaritySpec phi = SimilaritySpec::Bleu();
  SimilaritySpec psi = SimilaritySpec::Delta();
  int restarts = 4;
  std::optional<std::size_t> max_moves;  // default 10 * |V1| * |V2|
  std::uint64_t seed = 0;
  std::size_t oracle_limit = 8;
  // Brute force refuses to enumerate more injections than this.
  std::uint64_t oracle_max_injections = 20'000'000;
};

// mapping[i] is the g2 variable position mapped from g1 variable position i,
// or -1 when unmapped. Positions index GraphRepr::vars.
using VarMapping = std::vector<int>;

struct MatchResult {
  VarMapping mapping;
  double score = 0.0;
  PrfScore prf;
  std::optional<bool> climbs_to_optimum;
};

// Throws xsem::Error (input) on a non-injective or out-of-range mapping.
double EvaluateMapping(const GraphRepr& g1, const GraphRepr& g2,
                       const VarMapping& m, const MatchConfig& config);

// Exact maximum. Throws xsem::Error (input) when the smaller graph exceeds
// oracle_limit variables or the search space exceeds oracle_max_injections.
MatchResult BruteForceMatch(const GraphRepr& g1, const GraphRepr& g2,
                            const MatchConfig& config);

// True when BruteForceMatch accepts the pair under `config`.
bool OracleApplicable(const GraphRepr& g1, const GraphRepr& g2,
                      const MatchConfig& config);

// Two deterministic starts (greedy by phi, and the optimal assignment for phi
// alone) plus `restarts` seeded random restarts. Each start climbs with
// best-improving reassignment and swap moves; at a local optimum it also
// tries displacements, where one variable takes another's target and the
// displaced one moves to a free target or becomes unmapped.
MatchResult HillClimbMatch(const GraphRepr& g1, const GraphRepr& g2,
                           const MatchConfig& config);

// Hill climbing with phi = psi = delta.
MatchResult SmatchMatch(const GraphRepr& g1, const GraphRepr& g2,
                        MatchConfig config);

PrfScore PrecisionRecall(const GraphRepr& g1, const GraphRepr& g2,
                         double score);

// |vars| + |edges|.
std::size_t MatchDenominator(const GraphRepr& g);

struct CorpusScore {
  PrfScore prf;
  double total_score = 0.0;
  double system_total = 0.0;  // summed denominators of the system graphs
  double gold_total = 0.0;
  std::vector<MatchResult> pairs;
  // Filled when oracle checking is requested.
  std::size_t oracle_eligible = 0;
  std::size_t oracle_hits = 0;
};

struct CorpusOptions {
  std::size_t workers = 1;
  bool oracle = false;
};

// Micro-averaged scores over aligned pairs. Pair i is matched with a seed
// derived from (config.seed, i). Throws xsem::Error (alignment) on a length
// mismatch and xsem::Error (input) on an empty corpus.
CorpusScore ScoreCorpus(std::span<const GraphRepr> system,
                        std::span<const GraphRepr> gold,
                        const MatchConfig& config,
                        const CorpusOptions& options = {});

}  // namespace xsem
