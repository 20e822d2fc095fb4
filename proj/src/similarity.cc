#include "xsem/similarity.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <vector>

#include "xsem/error.h"

namespace xsem {

void CheckSpec(const SimilaritySpec& spec) {
  if (spec.kind == SimKind::kSentenceBleu && spec.max_order < 1) {
    throw InputError("BLEU max_order must be >= 1, got " +
                     std::to_string(spec.max_order));
  }
}

double Delta(std::optional<std::string_view> a,
             std::optional<std::string_view> b) {
  if (!a || !b) return (!a && !b) ? 1.0 : 0.0;
  return *a == *b ? 1.0 : 0.0;
}

double Delta(std::span<const std::string> a, std::span<const std::string> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end()) ? 1.0 : 0.0;
}

namespace {

std::vector<std::string> Normalized(std::span<const std::string> tokens,
                                    bool case_sensitive) {
  std::vector<std::string> out(tokens.begin(), tokens.end());
  if (!case_sensitive) {
    for (std::string& t : out) {
      std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
      });
    }
  }
  return out;
}

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts CountNgrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + i,
                                      tokens.begin() + i + n)];
  }
  return counts;
}

}  // namespace

double SentenceBleu(std::span<const std::string> candidate,
                    std::span<const std::string> reference,
                    const SimilaritySpec& spec) {
  CheckSpec(spec);
  if (candidate.empty() || reference.empty()) {
    throw InputError("sentence BLEU needs nonempty candidate and reference");
  }
  const auto cand = Normalized(candidate, spec.case_sensitive);
  const auto ref = Normalized(reference, spec.case_sensitive);
  const std::size_t order =
      std::min(static_cast<std::size_t>(spec.max_order), cand.size());

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= order; ++n) {
    const NgramCounts cand_counts = CountNgrams(cand, n);
    const NgramCounts ref_counts = CountNgrams(ref, n);
    double matched = 0.0;
    for (const auto& [gram, count] : cand_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    double total = static_cast<double>(cand.size() - n + 1);
    if (n >= 2 && spec.smoothing == BleuSmoothing::kAddOneHigherOrders) {
      matched += 1.0;
      total += 1.0;
    }
    if (matched <= 0.0) return 0.0;
    log_sum += std::log(matched / total);
  }
  const double ratio = static_cast<double>(ref.size()) /
                       static_cast<double>(cand.size());
  const double brevity = std::min(1.0, std::exp(1.0 - ratio));
  const double score = brevity * std::exp(log_sum / static_cast<double>(order));
  return std::clamp(score, 0.0, 1.0);
}

double InstanceSimilarity(const SimilaritySpec& spec, const TokenSpan& a,
                          const TokenSpan& b) {
  switch (spec.kind) {
    case SimKind::kKroneckerDelta:
      if (spec.case_sensitive) return Delta(a.tokens, b.tokens);
      return Delta(Normalized(a.tokens, false), Normalized(b.tokens, false));
    case SimKind::kSentenceBleu:
      return SentenceBleu(a.tokens, b.tokens, spec);
  }
  return 0.0;
}

double RelationSimilarity(const SimilaritySpec& spec, std::string_view a,
                          std::string_view b) {
  if (spec.kind != SimKind::kKroneckerDelta) {
    throw InputError("relation similarity supports only the Kronecker delta");
  }
  return Delta(std::optional<std::string_view>(a),
               std::optional<std::string_view>(b));
}

std::optional<SimKind> ParseSimKind(std::string_view name) {
  if (name == "bleu") return SimKind::kSentenceBleu;
  if (name == "delta") return SimKind::kKroneckerDelta;
  return std::nullopt;
}

std::optional<BleuSmoothing> ParseSmoothing(std::string_view name) {
  if (name == "none") return BleuSmoothing::kNone;
  if (name == "add1") return BleuSmoothing::kAddOneHigherOrders;
  return std::nullopt;
}

std::string_view ToString(SimKind kind) {
  return kind == SimKind::kSentenceBleu ? "bleu" : "delta";
}

std::string_view ToString(BleuSmoothing smoothing) {
  return smoothing == BleuSmoothing::kNone ? "none" : "add1";
}

}  // namespace xsem
