#pragma once

// Baseline antecedent resolvers under forced decoding: the gold token
// sequence is kept and only the bullets' antecedents are predicted.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "xsem/coref_eval.h"
#include "xsem/linear.h"

namespace xsem {

enum class ResolverMethod { kHeuristic, kRandom };

std::optional<ResolverMethod> ParseResolverMethod(std::string_view name);
std::string_view ToString(ResolverMethod method);

struct ResolverSpec {
  ResolverMethod method = ResolverMethod::kHeuristic;
  std::uint64_t seed = 0;
};

struct Resolution {
  std::vector<Assignment> assignments;  // parallel to the tokens
  std::size_t bullets = 0;
  std::size_t unresolved = 0;  // bullets left at epsilon: no candidate
};

// Gold sequence with every bullet replaced by a copy of the head word of its
// antecedent's span, marked as a head, with epsilon assignments.
struct HeadReplaced {
  LinearizedRepr repr;
  std::vector<std::size_t> former_bullets;
};

HeadReplaced ReplaceBulletsWithHeads(const LinearizedRepr& gold);

// Head word positions of the argument spans whose head precedes `t`. Lone
// bullet spans have no head word and never qualify.
std::vector<std::size_t> PrecedingArgumentHeads(const LinearizedRepr& l,
                                                const SpanTree& tree,
                                                std::size_t t);

// Each bullet gets a uniformly random preceding argument (by its head word).
Resolution ResolveRandom(const LinearizedRepr& gold, std::uint64_t seed);

// Each former bullet gets a uniformly random preceding argument whose head
// word equals the word that replaced the bullet; other former bullets are
// not candidates.
Resolution ResolveHeuristic(const HeadReplaced& replaced, std::uint64_t seed);

Resolution Resolve(const LinearizedRepr& gold, const ResolverSpec& spec);

// The gold sequence carrying the predicted assignments.
LinearizedRepr ApplyResolution(const LinearizedRepr& gold,
                               const Resolution& resolution);

struct CorpusResolution {
  std::vector<LinearizedRepr> responses;
  std::size_t bullets = 0;
  std::size_t unresolved = 0;
};

// Sentence i uses a generator seeded from (spec.seed, i), so results do not
// depend on the worker count.
CorpusResolution ResolveCorpus(std::span<const LinearizedRepr> gold,
                               const ResolverSpec& spec,
                               std::size_t workers = 1);

// Scores responses against the gold corpus. Throws xsem::Error (alignment)
// when the corpora differ in length or in any token sequence, and
// xsem::Error (input) on an empty corpus.
CorefReport EvaluateForced(std::span<const LinearizedRepr> gold,
                           std::span<const LinearizedRepr> responses);

}  // namespace xsem
