#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "xsem/error.h"
#include "xsem/kernel/checkpoint.h"
#include "xsem/kernel/model.h"
#include "xsem/kernel/synth.h"
#include "xsem/kernel/train.h"
#include "xsem/kernel/vocab.h"

namespace xsem::kernel {
namespace {

struct Toy {
  Vocabs vocabs;
  std::vector<TrainingExample> examples;
  std::vector<SynthSentence> sentences;
};

Toy MakeToy(std::size_t n, std::uint64_t seed, std::size_t distractors = 2,
            std::size_t vocab = 4) {
  SynthConfig sc;
  sc.seed = seed;
  sc.size = n;
  sc.vocab = vocab;
  sc.distractors = distractors;
  Toy toy;
  toy.sentences = SynthDataset(sc);
  std::vector<std::vector<std::string>> src;
  std::vector<LinearizedRepr> tgt;
  for (const auto& s : toy.sentences) {
    src.push_back(s.source);
    tgt.push_back(s.target);
  }
  toy.vocabs = BuildVocabs(src, tgt);
  for (const auto& s : toy.sentences) {
    toy.examples.push_back(EncodeExample(toy.vocabs, s.source, s.target));
  }
  return toy;
}

ModelConfig SmallConfig(const Vocabs& v, std::size_t dim, std::uint64_t seed) {
  ModelConfig c;
  c.source_vocab = v.source.size();
  c.target_vocab = v.target.size();
  c.embed_dim = c.hidden_dim = c.ffnn_dim = dim;
  c.seed = seed;
  return c;
}

double Sum(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

TEST(KernelTest, ConfigChecks) {
  ModelConfig c;
  c.source_vocab = 4;
  c.target_vocab = 5;
  EXPECT_NO_THROW(CheckConfig(c));
  ModelConfig zero = c;
  zero.hidden_dim = 0;
  EXPECT_THROW(CheckConfig(zero), Error);
  ModelConfig small = c;
  small.target_vocab = 2;
  EXPECT_THROW(CheckConfig(small), Error);
  ModelConfig neg = c;
  neg.mu = -1.0;
  EXPECT_THROW(CheckConfig(neg), Error);
}

TEST(KernelTest, EncoderDirectionsAreMirrorImages) {
  const Toy toy = MakeToy(1, 3);
  ModelParams p(SmallConfig(toy.vocabs, 6, 9));
  p.InitRandom();
  // With the backward encoder sharing the forward weights, reading the
  // reversed source swaps the two halves of every state.
  for (std::size_t l = 0; l < p.encoder_fw.size(); ++l) {
    p.encoder_bw[l].w->value = p.encoder_fw[l].w->value;
    p.encoder_bw[l].b->value = p.encoder_fw[l].b->value;
  }
  const std::vector<int> x = toy.examples[0].x;
  const std::vector<int> rx(x.rbegin(), x.rend());
  Tape t1;
  Tape t2;
  Graph g1(p, t1);
  Graph g2(p, t2);
  const auto h = g1.Encode(x);
  const auto rh = g2.Encode(rx);
  const std::size_t n = x.size();
  const std::size_t hd = p.config().hidden_dim;
  ASSERT_EQ(h.size(), n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = t1.Value(h[i]);
    const auto b = t2.Value(rh[n - 1 - i]);
    ASSERT_EQ(a.size(), 2 * hd);
    for (std::size_t k = 0; k < hd; ++k) {
      EXPECT_NEAR(a[k], b[hd + k], 1e-12);
      EXPECT_NEAR(a[hd + k], b[k], 1e-12);
    }
  }
}

TEST(KernelTest, DistributionsAreNormalized) {
  const Toy toy = MakeToy(5, 4);
  ModelParams p(SmallConfig(toy.vocabs, 8, 2));
  p.InitRandom();
  for (const TrainingExample& ex : toy.examples) {
    const auto steps = ForwardSteps(p, ex);
    ASSERT_EQ(steps.size(), ex.y.size());
    for (std::size_t t = 0; t < steps.size(); ++t) {
      const DecoderStep& st = steps[t];
      EXPECT_NEAR(Sum(st.p_gen), 1.0, 1e-6);
      EXPECT_NEAR(Sum(st.alpha), 1.0, 1e-6);
      EXPECT_NEAR(Sum(st.beta), 1.0, 1e-6);
      EXPECT_NEAR(Sum(st.p_copy), 1.0, 1e-6);
      EXPECT_EQ(st.p_gen.size(), toy.vocabs.target.size());
      EXPECT_EQ(st.alpha.size(), ex.x.size());
      EXPECT_EQ(st.p_copy.size(), st.candidates.size() + 1);
      EXPECT_EQ(st.candidates, CopyCandidates(ex.is_head, t));
    }
  }
}

TEST(KernelTest, SingleSourceTokenGetsAllAttention) {
  const Toy toy = MakeToy(1, 5);
  ModelParams p(SmallConfig(toy.vocabs, 5, 3));
  p.InitRandom();
  TrainingExample ex = toy.examples[0];
  ex.x.resize(1);
  for (const DecoderStep& st : ForwardSteps(p, ex)) {
    ASSERT_EQ(st.alpha.size(), 1u);
    EXPECT_DOUBLE_EQ(st.alpha[0], 1.0);
    EXPECT_DOUBLE_EQ(st.beta[0], 1.0);
    // c_t and o_t are both the lone encoder state.
    EXPECT_EQ(st.c, st.o);
  }
}

TEST(KernelTest, LossDecomposesIntoGenerationAndCopyTerms) {
  const Toy toy = MakeToy(6, 6);
  ModelParams p(SmallConfig(toy.vocabs, 7, 4));
  p.InitRandom();
  for (const TrainingExample& ex : toy.examples) {
    const auto steps = ForwardSteps(p, ex);
    double gen = 0.0;
    double copy = 0.0;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      gen -= std::log(steps[t].p_gen[ex.y[t]]);
      if (ex.a[t] && ex.is_head[*ex.a[t]]) {
        const auto& c = steps[t].candidates;
        const std::size_t idx = std::find(c.begin(), c.end(), *ex.a[t]) - c.begin();
        copy -= std::log(steps[t].p_copy[idx + 1]);
      }
    }
    EXPECT_GT(copy, 0.0);
    EXPECT_NEAR(SequenceNll(p, ex, 0.0), gen, 1e-9);
    EXPECT_NEAR(SequenceNll(p, ex, 1.0), gen + copy, 1e-9);
    EXPECT_NEAR(SequenceNll(p, ex, 0.5), gen + 0.5 * copy, 1e-9);
  }
}

TEST(KernelTest, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Toy toy = MakeToy(1, seed, seed % 3);
    ModelConfig c = SmallConfig(toy.vocabs, 2 + seed % 6, seed);
    c.layers = 1 + seed % 2;
    ModelParams p(c);
    p.InitRandom();
    const GradCheckResult r = GradCheck(p, toy.examples[0], 1.0);
    EXPECT_LT(r.max_rel_error, 1e-4)
        << "seed " << seed << " " << r.worst_tensor << "[" << r.worst_index
        << "] analytic " << r.analytic << " numeric " << r.numeric;
    EXPECT_EQ(r.checked, p.ParameterCount());
  }
  const Toy toy = MakeToy(1, 1);
  ModelParams p(SmallConfig(toy.vocabs, 3, 1));
  EXPECT_THROW(GradCheck(p, toy.examples[0], 1.0, 0.0), Error);
}

TEST(KernelTest, OverfitsASmallSet) {
  const Toy toy = MakeToy(8, 7, 2, 8);
  ModelConfig c = SmallConfig(toy.vocabs, 16, 7);
  c.hidden_dim = c.ffnn_dim = 32;
  TrainConfig tc;
  tc.fixed_mu = 1.0;
  tc.learning_rate = 1e-2;
  tc.batch_size = 4;
  tc.max_epochs = 200;
  tc.patience = 200;
  tc.stop_below = 0.05;
  const TrainResult r = Train(c, toy.examples, {}, tc);
  ASSERT_FALSE(r.log.empty());
  EXPECT_LT(r.log.back().train_loss, 0.05);
  EXPECT_LT(r.log.back().train_loss, r.log.front().train_loss);
  EXPECT_LT(MeanLoss(const_cast<ModelParams&>(r.params), toy.examples, 1.0),
            0.05);
}

TEST(KernelTest, TrainingIsDeterministic) {
  const Toy toy = MakeToy(12, 8);
  ModelConfig c = SmallConfig(toy.vocabs, 6, 8);
  TrainConfig tc;
  tc.max_epochs = 3;
  tc.batch_size = 5;
  const std::vector<TrainingExample> valid(toy.examples.begin(),
                                           toy.examples.begin() + 3);
  const TrainResult a = Train(c, toy.examples, valid, tc);
  const TrainResult b = Train(c, toy.examples, valid, tc);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].train_loss, b.log[i].train_loss);
    EXPECT_EQ(a.log[i].validation_loss, b.log[i].validation_loss);
  }
  for (std::size_t i = 0; i < a.params.tensors().size(); ++i) {
    EXPECT_EQ(a.params.tensors()[i].value, b.params.tensors()[i].value);
  }
  // The first phase trains without the copy term.
  EXPECT_EQ(a.log.front().mu, 0.0);
  EXPECT_EQ(a.log.back().mu, 1.0);
}

TEST(KernelTest, TrainRejectsBadInput) {
  const Toy toy = MakeToy(2, 9);
  ModelConfig c = SmallConfig(toy.vocabs, 4, 9);
  EXPECT_THROW(Train(c, {}, {}, TrainConfig{}), Error);
  TrainConfig zero_batch;
  zero_batch.batch_size = 0;
  EXPECT_THROW(Train(c, toy.examples, {}, zero_batch), Error);
  std::vector<TrainingExample> bad = toy.examples;
  bad[0].a[1] = 5;
  EXPECT_THROW(Train(c, bad, {}, TrainConfig{}), Error);
  bad = toy.examples;
  bad[0].x.clear();
  EXPECT_THROW(Train(c, bad, {}, TrainConfig{}), Error);
}

TEST(KernelTest, CheckpointRoundTrip) {
  const Toy toy = MakeToy(3, 10);
  ModelParams p(SmallConfig(toy.vocabs, 5, 10));
  p.InitRandom();
  std::stringstream buf;
  WriteCheckpoint(buf, p, toy.vocabs);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 8), "XSEMCKPT");
  std::istringstream in(bytes);
  const Checkpoint ck = ReadCheckpoint(in);
  EXPECT_EQ(ck.vocabs.source.tokens(), toy.vocabs.source.tokens());
  EXPECT_EQ(ck.vocabs.target.tokens(), toy.vocabs.target.tokens());
  ASSERT_EQ(ck.params.tensors().size(), p.tensors().size());
  for (std::size_t i = 0; i < p.tensors().size(); ++i) {
    EXPECT_EQ(ck.params.tensors()[i].name, p.tensors()[i].name);
    EXPECT_EQ(ck.params.tensors()[i].value, p.tensors()[i].value);
  }
  ModelParams copy = ck.params;
  EXPECT_EQ(SequenceNll(copy, toy.examples[0], 1.0),
            SequenceNll(p, toy.examples[0], 1.0));

  auto read = [](const std::string& b) {
    std::istringstream s(b);
    return ReadCheckpoint(s);
  };
  std::string magic = bytes;
  magic[0] = 'Y';
  EXPECT_THROW(read(magic), Error);
  std::string version = bytes;
  version[8] = 9;
  EXPECT_THROW(read(version), Error);
  EXPECT_THROW(read(bytes.substr(0, bytes.size() - 3)), Error);
  EXPECT_THROW(read(bytes + "x"), Error);
  EXPECT_THROW(read(""), Error);
}

TEST(KernelTest, VocabAndEncoding) {
  const Vocab v = NewTargetVocab();
  EXPECT_EQ(v.Find(kBosToken), kBosId);
  EXPECT_EQ(v.Find(kEosToken), kEosId);
  EXPECT_EQ(v.Find("@b"), kBulletId);
  EXPECT_THROW(v.Require("nope"), Error);

  const LinearizedRepr target =
      ParseText("[ saw_h ] ( John_h ) ( @b )\n#coref 7 4");
  const std::vector<std::string> src = {"SAW", "JOHN"};
  const std::vector<std::vector<std::string>> srcs = {src};
  const std::vector<LinearizedRepr> tgts = {target};
  const Vocabs vs = BuildVocabs(srcs, tgts);
  EXPECT_EQ(vs.source.tokens(), src);
  EXPECT_EQ(vs.target.Token(3), "[");
  EXPECT_EQ(vs.target.Token(4), "saw_h");
  const std::vector<bool> heads = HeadFlags(vs.target);
  EXPECT_TRUE(heads[vs.target.Find("John_h")]);
  EXPECT_FALSE(heads[kBulletId]);

  const TrainingExample ex = EncodeExample(vs, src, target);
  EXPECT_EQ(ex.y.size(), target.size() + 1);
  EXPECT_EQ(ex.y.back(), kEosId);
  EXPECT_EQ(ex.y[7], kBulletId);
  EXPECT_EQ(ex.a[7], 4u);
  EXPECT_TRUE(ex.is_head[4]);
  EXPECT_FALSE(ex.is_head[7]);
  EXPECT_EQ(DecodeTarget(vs.target, ex.y, ex.a), target);
  EXPECT_THROW(EncodeExample(vs, {"MARY"}, target), Error);
  EXPECT_THROW(DecodeTarget(vs.target, ex.y, {}), Error);
}

TEST(KernelTest, SynthData) {
  SynthConfig none;
  EXPECT_TRUE(SynthDataset(none).empty());

  SynthConfig c;
  c.size = 200;
  c.distractors = 0;
  for (const SynthSentence& s : SynthDataset(c)) {
    ASSERT_TRUE(Validate(s.target).empty());
    // The antecedent's head word is unique among preceding heads.
    for (std::size_t t = 0; t < s.target.size(); ++t) {
      if (!s.target.tokens[t].IsBullet()) continue;
      const std::string& w = s.target.tokens[*s.target.assignments[t]].surface;
      int same = 0;
      for (std::size_t k = 0; k < t; ++k) {
        same += s.target.tokens[k].IsHeadWord() && s.target.tokens[k].surface == w;
      }
      EXPECT_EQ(same, 1);
    }
  }
  c.distractors = 3;
  const auto a = SynthDataset(c);
  const auto b = SynthDataset(c);
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].source, b[i].source);
    EXPECT_EQ(a[i].target, b[i].target);
  }
  SynthConfig tiny;
  tiny.size = 1;
  tiny.vocab = 2;
  tiny.distractors = 2;
  EXPECT_THROW(SynthDataset(tiny), Error);

  const SynthSplit split = SynthSplits(c, 120, 30, 50);
  EXPECT_EQ(split.train.size(), 120u);
  EXPECT_EQ(split.validation.size(), 30u);
  EXPECT_EQ(split.test.size(), 50u);
  EXPECT_EQ(split.test.back().target, a.back().target);
}

TEST(KernelTest, Decoding) {
  const Toy toy = MakeToy(2, 11);
  ModelParams p(SmallConfig(toy.vocabs, 5, 11));
  p.InitRandom();
  const std::vector<bool> heads = HeadFlags(toy.vocabs.target);
  const Decoded none = GreedyDecode(p, toy.examples[0].x, 0, heads);
  EXPECT_TRUE(none.y.empty());
  const Decoded d = GreedyDecode(p, toy.examples[0].x, 12, heads, true);
  EXPECT_LE(d.y.size(), 12u);
  EXPECT_EQ(d.a.size(), d.y.size());
  EXPECT_EQ(d.steps.size(), d.y.size());
  for (std::size_t t = 0; t < d.y.size(); ++t) {
    if (d.a[t]) {
      EXPECT_EQ(d.y[t], kBulletId);
      EXPECT_LT(*d.a[t], t);
      EXPECT_TRUE(heads[d.y[*d.a[t]]]);
    }
  }
  // Long decodes grow the tape well past its first allocation.
  const Toy big = MakeToy(4, 200, 2, 8);
  ModelConfig bc = SmallConfig(big.vocabs, 16, 3);
  bc.hidden_dim = bc.ffnn_dim = 32;
  ModelParams bp(bc);
  bp.InitRandom();
  const std::vector<bool> big_heads = HeadFlags(big.vocabs.target);
  for (const TrainingExample& e : big.examples) {
    const Decoded run = GreedyDecode(bp, e.x, 200, big_heads, true);
    for (const DecoderStep& st : run.steps) {
      EXPECT_NEAR(Sum(st.p_gen), 1.0, 1e-6);
      EXPECT_NEAR(Sum(st.p_copy), 1.0, 1e-6);
    }
  }
  const TrainingExample& ex = toy.examples[0];
  const auto a = ForcedCopy(p, ex);
  ASSERT_EQ(a.size(), ex.y.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].has_value(), ex.y[t] == kBulletId);
    if (a[t]) {
      EXPECT_TRUE(ex.is_head[*a[t]]);
    }
  }
}

}  // namespace
}  // namespace xsem::kernel
