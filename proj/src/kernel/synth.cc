#include "xsem/kernel/synth.h"

#include <algorithm>
#include <random>

#include "xsem/error.h"
#include "xsem/rng.h"

namespace xsem::kernel {
namespace {

struct Arg {
  std::size_t adj = 0;
  std::size_t noun = 0;
  bool bullet = false;
};

std::size_t Pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::size_t OtherNoun(std::mt19937_64& rng, std::size_t vocab,
                      std::size_t avoid) {
  const std::size_t k = Pick(rng, vocab - 1);
  return k >= avoid ? k + 1 : k;
}

SynthSentence Generate(const SynthConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t v1 = Pick(rng, c.vocab);
  const std::size_t noun = Pick(rng, c.vocab);
  std::vector<std::size_t> adjs(c.vocab);
  for (std::size_t i = 0; i < c.vocab; ++i) adjs[i] = i;
  std::shuffle(adjs.begin(), adjs.end(), rng);
  adjs.resize(c.distractors + 1);
  const std::size_t ante_adj = adjs[Pick(rng, adjs.size())];

  std::vector<Arg> first;
  for (std::size_t a : adjs) first.push_back({a, noun, false});
  const std::size_t extra1 = 1 + Pick(rng, 2);
  for (std::size_t i = 0; i < extra1; ++i) {
    first.push_back({Pick(rng, c.vocab), OtherNoun(rng, c.vocab, noun), false});
  }
  std::shuffle(first.begin(), first.end(), rng);

  const std::size_t v2 = Pick(rng, c.vocab);
  std::vector<Arg> second{{ante_adj, noun, true}};
  if (Pick(rng, 2) == 1) {
    second.push_back({Pick(rng, c.vocab), OtherNoun(rng, c.vocab, noun), false});
  }
  std::shuffle(second.begin(), second.end(), rng);

  SynthSentence s;
  auto& toks = s.target.tokens;
  std::size_t ante_pos = 0;
  auto clause = [&](std::size_t verb, const std::vector<Arg>& args) {
    s.source.push_back("V" + std::to_string(verb));
    toks.push_back(LinToken::OpenPred());
    toks.push_back(LinToken::Word("v" + std::to_string(verb), true));
    for (const Arg& a : args) {
      s.source.push_back("A" + std::to_string(a.adj));
      s.source.push_back("N" + std::to_string(a.noun));
      toks.push_back(LinToken::OpenArg());
      if (a.bullet) {
        toks.push_back(LinToken::Bullet());
      } else {
        toks.push_back(LinToken::Word("a" + std::to_string(a.adj)));
        toks.push_back(LinToken::Word("n" + std::to_string(a.noun), true));
        if (a.adj == ante_adj && a.noun == noun) ante_pos = toks.size() - 1;
      }
      toks.push_back(LinToken::CloseArg());
    }
    toks.push_back(LinToken::ClosePred());
  };
  clause(v1, first);
  clause(v2, second);
  s.target.assignments.assign(toks.size(), std::nullopt);
  for (std::size_t t = 0; t < toks.size(); ++t) {
    if (toks[t].IsBullet()) s.target.assignments[t] = ante_pos;
  }
  return s;
}

}  // namespace

std::vector<SynthSentence> SynthDataset(const SynthConfig& config) {
  if (config.vocab < 2 || config.vocab < config.distractors + 1) {
    throw InputError("synthetic vocabulary of " + std::to_string(config.vocab) +
                     " is too small for " +
                     std::to_string(config.distractors) + " distractors");
  }
  std::vector<SynthSentence> out;
  out.reserve(config.size);
  for (std::size_t i = 0; i < config.size; ++i) {
    out.push_back(Generate(config, MixSeed(config.seed, i)));
  }
  return out;
}

SynthSplit SynthSplits(const SynthConfig& config, std::size_t train,
                       std::size_t validation, std::size_t test) {
  SynthConfig c = config;
  c.size = train + validation + test;
  std::vector<SynthSentence> all = SynthDataset(c);
  SynthSplit s;
  auto take = [&](std::size_t from, std::size_t n) {
    return std::vector<SynthSentence>(all.begin() + from,
                                      all.begin() + from + n);
  };
  s.train = take(0, train);
  s.validation = take(train, validation);
  s.test = take(train + validation, test);
  return s;
}

}  // namespace xsem::kernel
