#pragma once

// Instance similarity (phi) and relation similarity (psi). Every score lies
// in [0, 1]. Spans are compared over their surface tokens; head marks never
// take part.

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "xsem/repr.h"

namespace xsem {

enum class SimKind { kKroneckerDelta, kSentenceBleu };

enum class BleuSmoothing {
  kNone,
  // Adds one to numerator and denominator of every precision of order >= 2.
  kAddOneHigherOrders,
};

struct SimilaritySpec {
  SimKind kind = SimKind::kSentenceBleu;
  int max_order = 4;
  BleuSmoothing smoothing = BleuSmoothing::kAddOneHigherOrders;
  bool case_sensitive = true;

  static SimilaritySpec Delta() {
    SimilaritySpec s;
    s.kind = SimKind::kKroneckerDelta;
    return s;
  }
  static SimilaritySpec Bleu(int max_order = 4,
                             BleuSmoothing smoothing =
                                 BleuSmoothing::kAddOneHigherOrders) {
    SimilaritySpec s;
    s.max_order = max_order;
    s.smoothing = smoothing;
    return s;
  }
};

// Throws xsem::Error (input) when max_order < 1.
void CheckSpec(const SimilaritySpec& spec);

// 1 iff the arguments are exactly equal. An absent relation equals only
// another absent relation.
double Delta(std::optional<std::string_view> a,
             std::optional<std::string_view> b);
double Delta(std::span<const std::string> a, std::span<const std::string> b);

// Sentence-level BLEU of `candidate` against a single `reference`: geometric
// mean of modified n-gram precisions for n = 1..min(max_order, |candidate|)
// times the brevity penalty min(1, exp(1 - |reference| / |candidate|)).
// Empty inputs are an error.
double SentenceBleu(std::span<const std::string> candidate,
                    std::span<const std::string> reference,
                    const SimilaritySpec& spec = SimilaritySpec::Bleu());

// phi over two instance spans; `a` plays the candidate role.
double InstanceSimilarity(const SimilaritySpec& spec, const TokenSpan& a,
                          const TokenSpan& b);

// psi over two relation labels. Only the Kronecker delta is defined.
double RelationSimilarity(const SimilaritySpec& spec, std::string_view a,
                          std::string_view b);

// Flag spellings: "bleu", "delta".
std::optional<SimKind> ParseSimKind(std::string_view name);
std::optional<BleuSmoothing> ParseSmoothing(std::string_view name);
std::string_view ToString(SimKind kind);
std::string_view ToString(BleuSmoothing smoothing);

}  // namespace xsem
