#include "xsem/coref_baselines.h"

#include <algorithm>
#include <random>

#include "xsem/error.h"
#include "xsem/parallel.h"
#include "xsem/rng.h"

namespace xsem {
namespace {

std::size_t HeadWordOf(const SpanInfo& s, const LinearizedRepr& l) {
  for (std::size_t pos : s.words) {
    if (l.tokens[pos].is_head) return pos;
  }
  return s.words.front();
}

Assignment Pick(const std::vector<std::size_t>& cands, std::mt19937_64& rng) {
  if (cands.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
  return cands[pick(rng)];
}

}  // namespace

std::optional<ResolverMethod> ParseResolverMethod(std::string_view name) {
  if (name == "heuristic") return ResolverMethod::kHeuristic;
  if (name == "random") return ResolverMethod::kRandom;
  return std::nullopt;
}

std::string_view ToString(ResolverMethod method) {
  return method == ResolverMethod::kHeuristic ? "heuristic" : "random";
}

std::vector<std::size_t> PrecedingArgumentHeads(const LinearizedRepr& l,
                                                const SpanTree& tree,
                                                std::size_t t) {
  std::vector<std::size_t> out;
  for (const SpanInfo& s : tree.spans) {
    if (s.is_pred || s.open >= t || s.words.empty()) continue;
    const std::size_t head = HeadWordOf(s, l);
    if (head < t) out.push_back(head);
  }
  return out;
}

HeadReplaced ReplaceBulletsWithHeads(const LinearizedRepr& gold) {
  CheckValid(gold);
  const SpanTree tree = BuildSpanTree(gold.tokens);
  HeadReplaced out;
  out.repr = gold;
  for (std::size_t pos = 0; pos < gold.tokens.size(); ++pos) {
    if (!gold.tokens[pos].IsBullet()) continue;
    const std::size_t a = *gold.assignments[pos];
    const int owner = tree.innermost[a];
    const std::size_t head =
        owner < 0 ? a : HeadWordOf(tree.spans[owner], gold);
    out.repr.tokens[pos] = LinToken::Word(gold.tokens[head].surface, true);
    out.repr.assignments[pos] = std::nullopt;
    out.former_bullets.push_back(pos);
  }
  return out;
}

Resolution ResolveRandom(const LinearizedRepr& gold, std::uint64_t seed) {
  TextOptions lenient;
  lenient.allow_unlinked_bullets = true;
  CheckValid(gold, lenient);
  const SpanTree tree = BuildSpanTree(gold.tokens);
  std::mt19937_64 rng(seed);
  Resolution r;
  r.assignments.assign(gold.tokens.size(), std::nullopt);
  for (std::size_t t = 0; t < gold.tokens.size(); ++t) {
    if (!gold.tokens[t].IsBullet()) continue;
    ++r.bullets;
    r.assignments[t] = Pick(PrecedingArgumentHeads(gold, tree, t), rng);
    if (!r.assignments[t]) ++r.unresolved;
  }
  return r;
}

Resolution ResolveHeuristic(const HeadReplaced& replaced, std::uint64_t seed) {
  const LinearizedRepr& l = replaced.repr;
  const SpanTree tree = BuildSpanTree(l.tokens);
  const auto& former = replaced.former_bullets;
  auto is_former = [&](std::size_t pos) {
    return std::binary_search(former.begin(), former.end(), pos);
  };
  std::mt19937_64 rng(seed);
  Resolution r;
  r.assignments.assign(l.tokens.size(), std::nullopt);
  for (std::size_t t : former) {
    ++r.bullets;
    std::vector<std::size_t> cands;
    for (std::size_t head : PrecedingArgumentHeads(l, tree, t)) {
      if (!is_former(head) && l.tokens[head].surface == l.tokens[t].surface) {
        cands.push_back(head);
      }
    }
    r.assignments[t] = Pick(cands, rng);
    if (!r.assignments[t]) ++r.unresolved;
  }
  return r;
}

Resolution Resolve(const LinearizedRepr& gold, const ResolverSpec& spec) {
  if (spec.method == ResolverMethod::kRandom) {
    return ResolveRandom(gold, spec.seed);
  }
  return ResolveHeuristic(ReplaceBulletsWithHeads(gold), spec.seed);
}

LinearizedRepr ApplyResolution(const LinearizedRepr& gold,
                               const Resolution& resolution) {
  if (resolution.assignments.size() != gold.tokens.size()) {
    throw AlignmentError("resolution length differs from the sequence");
  }
  LinearizedRepr out = gold;
  out.assignments = resolution.assignments;
  for (std::size_t t = 0; t < out.tokens.size(); ++t) {
    const Assignment& a = out.assignments[t];
    if (a && (!out.tokens[t].IsBullet() || *a >= t)) {
      throw InputError("resolution assigns an antecedent at position " +
                       std::to_string(t) + " outside its candidate set");
    }
  }
  return out;
}

CorpusResolution ResolveCorpus(std::span<const LinearizedRepr> gold,
                               const ResolverSpec& spec, std::size_t workers) {
  CorpusResolution out;
  out.responses.resize(gold.size());
  std::vector<Resolution> res(gold.size());
  ParallelFor(gold.size(), workers, [&](std::size_t i) {
    ResolverSpec s = spec;
    s.seed = MixSeed(spec.seed, i);
    res[i] = Resolve(gold[i], s);
    out.responses[i] = ApplyResolution(gold[i], res[i]);
  });
  for (const Resolution& r : res) {
    out.bullets += r.bullets;
    out.unresolved += r.unresolved;
  }
  return out;
}

CorefReport EvaluateForced(std::span<const LinearizedRepr> gold,
                           std::span<const LinearizedRepr> responses) {
  if (gold.size() != responses.size()) {
    throw AlignmentError("key has " + std::to_string(gold.size()) +
                         " blocks but response has " +
                         std::to_string(responses.size()));
  }
  if (gold.empty()) throw InputError("empty corpus");
  std::vector<MentionChainSet> key(gold.size());
  std::vector<MentionChainSet> resp(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].tokens != responses[i].tokens) {
      throw AlignmentError("block " + std::to_string(i + 1) +
                           ": response tokens differ from the key");
    }
    key[i] = ChainsFromLinearized(gold[i]);
    resp[i] = ChainsFromLinearized(responses[i]);
  }
  return ScoreCoref(key, resp);
}

}  // namespace xsem
