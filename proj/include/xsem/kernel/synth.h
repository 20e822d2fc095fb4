#pragma once

// Seeded synthetic corpus for the copy model. Each sentence has two clauses.
// The first introduces an entity "a n" together with `distractors` other
// arguments of the same noun (different adjectives) and one or two unrelated
// arguments; the second mentions the entity again, realized as a bullet in
// the target. Sources are uppercase symbol strings and the target is a
// deterministic transduction of the source:
//
//   source  V3 A1 N5 A0 N2 A4 N5 V0 A4 N5 A2 N7
//   target  [ v3_h ( a1 n5_h ) ( a0 n2_h ) ( a4 n5_h ) ] [ v0_h ( @b )
//           ( a2 n7_h ) ]                           bullet -> n5_h of "a4 n5"
//
// With no distractors the head noun of the entity is unique among the
// preceding arguments.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xsem/linear.h"

namespace xsem::kernel {

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t size = 0;
  std::size_t vocab = 8;  // verbs, adjectives and nouns each
  std::size_t distractors = 2;
};

struct SynthSentence {
  std::vector<std::string> source;
  LinearizedRepr target;
};

// Throws xsem::Error (input) when the vocabulary is too small for the
// requested distractors (vocab < distractors + 1, or vocab < 2).
std::vector<SynthSentence> SynthDataset(const SynthConfig& config);

struct SynthSplit {
  std::vector<SynthSentence> train;
  std::vector<SynthSentence> validation;
  std::vector<SynthSentence> test;
};

// Generates train + validation + test sentences from one seeded stream and
// cuts them in that order.
SynthSplit SynthSplits(const SynthConfig& config, std::size_t train,
                       std::size_t validation, std::size_t test);

}  // namespace xsem::kernel
