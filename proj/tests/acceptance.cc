// End-to-end acceptance checks. Prints one PASS or FAIL line per criterion
// and exits nonzero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "support/fuzz.h"
#include "xsem/assignment.h"
#include "xsem/coref_baselines.h"
#include "xsem/coref_eval.h"
#include "xsem/graph_io.h"
#include "xsem/graph_metric.h"
#include "xsem/kernel/model.h"
#include "xsem/kernel/synth.h"
#include "xsem/kernel/train.h"
#include "xsem/kernel/vocab.h"
#include "xsem/linear.h"
#include "xsem/linearize.h"
#include "xsem/similarity.h"

namespace fs = std::filesystem;
namespace kn = xsem::kernel;
using xsem::testing::Rng;

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// Collects the failures of one criterion.
class Check {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ |= !ok;
  }
  bool ok() const { return !failed_; }
  std::string Failures() const {
    std::string out;
    for (const auto& f : failures_) out += "; " + f;
    return out;
  }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
};

std::string Num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

int failures = 0;

void Report(int id, const std::string& name, const Check& c,
            const std::string& detail) {
  std::cout << (c.ok() ? "PASS" : "FAIL") << " " << id << " " << name << ": "
            << detail << (c.ok() ? "" : c.Failures()) << std::endl;
  failures += !c.ok();
}

void OracleEquivalence() {
  Rng rng(1001);
  xsem::MatchConfig config;
  config.restarts = 4;
  int equal = 0;
  int above = 0;
  double climb_total = 0.0;
  double brute_total = 0.0;
  double climb_seconds = 0.0;
  const auto start = Clock::now();
  const int pairs = 500;
  for (int i = 0; i < pairs; ++i) {
    const xsem::GraphRepr a = xsem::testing::RandomMetricGraph(rng, 6);
    const xsem::GraphRepr b = i % 2 ? xsem::testing::Perturb(rng, a)
                                    : xsem::testing::RandomMetricGraph(rng, 6);
    config.seed = static_cast<std::uint64_t>(i);
    const auto t0 = Clock::now();
    const auto climb = xsem::HillClimbMatch(a, b, config);
    climb_seconds += Seconds(t0);
    const auto brute = xsem::BruteForceMatch(a, b, config);
    above += climb.score > brute.score + 1e-9;
    equal += std::abs(climb.score - brute.score) <= 1e-9;
    climb_total += climb.score;
    brute_total += brute.score;
  }
  const double total = Seconds(start);
  const double ratio = climb_total / brute_total;
  Check c;
  c.Expect(above == 0, "hill climbing exceeded brute force");
  c.Expect(equal * 100 >= pairs * 98, "fewer than 98% exact matches");
  c.Expect(ratio >= 0.999, "summed ratio below 0.999");
  c.Expect(total < 10.0, "runtime over 10 s");
  Report(1, "oracle equivalence", c,
         std::to_string(equal) + "/" + std::to_string(pairs) +
             " pairs equal, ratio " + Num(ratio) + ", hill climbing " +
             Num(climb_seconds, 2) + " s, with brute force " + Num(total, 2) +
             " s");
}

void MetricIdentities() {
  Rng rng(1002);
  Check c;
  int violations = 0;
  auto in_unit = [](const xsem::PrfScore& s) {
    for (double v : {s.precision, s.recall, s.f1}) {
      if (!(v >= 0.0 && v <= 1.0)) return false;
    }
    return true;
  };
  for (int i = 0; i < 1000; ++i) {
    const xsem::GraphRepr g = xsem::testing::RandomMetricGraph(rng, 10);
    violations += static_cast<int>(xsem::Validate(g).size());
    const auto r = xsem::HillClimbMatch(g, xsem::testing::Rename(rng, g),
                                        xsem::MatchConfig{});
    c.Expect(r.prf.precision == 1.0 && r.prf.recall == 1.0 && r.prf.f1 == 1.0,
             "self match not (1,1,1) at graph " + std::to_string(i));
  }
  xsem::MatchConfig delta;
  delta.phi = xsem::SimilaritySpec::Delta();
  for (int i = 0; i < 500; ++i) {
    const xsem::GraphRepr a = xsem::testing::RandomMetricGraph(rng, 6);
    const xsem::GraphRepr b = i % 2 ? xsem::testing::Perturb(rng, a)
                                    : xsem::testing::RandomMetricGraph(rng, 6);
    const auto ab = xsem::BruteForceMatch(a, b, delta);
    const auto ba = xsem::BruteForceMatch(b, a, delta);
    c.Expect(std::abs(ab.prf.precision - ba.prf.recall) <= 1e-12 &&
                 std::abs(ab.prf.recall - ba.prf.precision) <= 1e-12,
             "swap did not exchange P and R at pair " + std::to_string(i));
    const auto bleu = xsem::HillClimbMatch(a, b, xsem::MatchConfig{});
    c.Expect(in_unit(ab.prf) && in_unit(ba.prf) && in_unit(bleu.prf),
             "score outside [0,1] at pair " + std::to_string(i));
  }
  c.Expect(violations == 0, "fuzzed graphs violate invariants");
  Report(2, "metric identities", c,
         "1000 self pairs, 500 swapped pairs, " + std::to_string(violations) +
             " violations");
}

std::vector<std::string> Words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

void BleuFixtures() {
  const auto strict = xsem::SimilaritySpec::Bleu(4, xsem::BleuSmoothing::kNone);
  const auto order2 = xsem::SimilaritySpec::Bleu(2, xsem::BleuSmoothing::kNone);
  const double same =
      xsem::SentenceBleu(Words("a storm surge"), Words("a storm surge"),
                         xsem::SimilaritySpec::Bleu());
  const double same_strict =
      xsem::SentenceBleu(Words("a storm surge"), Words("a storm surge"), strict);
  const double bp =
      xsem::SentenceBleu(Words("storm surge"), Words("a storm surge"), order2);
  const double disjoint =
      xsem::SentenceBleu(Words("storm surge"), Words("big house"), strict);
  Check c;
  c.Expect(same == 1.0 && same_strict == 1.0, "identical spans not 1");
  c.Expect(std::abs(bp - std::exp(-0.5)) <= 1e-9, "brevity fixture off");
  c.Expect(disjoint == 0.0, "disjoint spans not 0");
  Report(3, "BLEU fixtures", c,
         "identical " + Num(same, 1) + ", brevity " + Num(bp, 9) +
             ", disjoint " + Num(disjoint, 1));
}

// Every injection of rows into columns (or columns into rows).
double PermutationBest(const std::vector<std::vector<double>>& w) {
  const std::size_t rows = w.size();
  const std::size_t cols = rows ? w[0].size() : 0;
  const std::size_t n = std::max(rows, cols);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (perm[i] < cols) s += w[i][perm[i]];
    }
    best = std::max(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void CorefFixtures() {
  const xsem::MentionChainSet key{{1, 2, 3}, {{1, 2, 3}}};
  const xsem::MentionChainSet resp{{1, 2, 3}, {{1, 2}}};
  const auto muc = xsem::Muc(key, resp);
  const auto b3 = xsem::BCubed(key, resp);
  const auto ceaf = xsem::CeafE(key, resp);
  auto near = [](const xsem::PrfScore& s, double p, double r, double f) {
    return std::abs(s.precision - p) <= 1e-9 &&
           std::abs(s.recall - r) <= 1e-9 && std::abs(s.f1 - f) <= 1e-9;
  };
  Check c;
  c.Expect(near(muc, 1.0, 0.5, 2.0 / 3.0), "MUC fixture");
  c.Expect(near(b3, 1.0, 5.0 / 9.0, 5.0 / 7.0), "B3 fixture");
  c.Expect(near(ceaf, 0.4, 0.8, 8.0 / 15.0), "CEAF_e fixture");
  for (const auto* s : {&key, &resp}) {
    c.Expect(xsem::Muc(*s, *s).f1 == 1.0 && xsem::BCubed(*s, *s).f1 == 1.0 &&
                 xsem::CeafE(*s, *s).f1 == 1.0,
             "perfect response below 1");
  }
  const xsem::MentionChainSet wide{{1, 2, 3, 4, 5, 6, 7},
                                   {{1, 4}, {2, 5, 7}, {3, 6}}};
  c.Expect(xsem::ScoreCoref(std::vector{wide}, std::vector{wide}).avg_f1 == 1.0,
           "perfect corpus below 1");

  Rng rng(1004);
  int agree = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t rows = xsem::testing::Uniform(rng, 1, 7);
    const std::size_t cols = xsem::testing::Uniform(rng, 1, 7);
    std::vector<std::vector<double>> w(rows, std::vector<double>(cols));
    for (auto& row : w) {
      for (double& v : row) {
        v = i % 2 ? static_cast<double>(xsem::testing::Uniform(rng, 0, 3))
                  : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      }
    }
    const double got = xsem::AssignmentWeight(w, xsem::AssignmentMax(w));
    agree += std::abs(got - PermutationBest(w)) <= 1e-9;
  }
  c.Expect(agree == 200, "assignment differs from brute force");
  const double avg = xsem::AvgF1(muc.f1, b3.f1, ceaf.f1);
  Report(4, "coreference fixtures", c,
         "MUC F1 " + Num(muc.f1) + ", B3 F1 " + Num(b3.f1) + ", CEAF_e F1 " +
             Num(ceaf.f1) + ", average " + Num(avg) + ", assignment " +
             std::to_string(agree) + "/200");
}

void RoundTrips() {
  Rng rng(1005);
  Check c;
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    xsem::testing::GraphShape shape;
    shape.words = &xsem::testing::TrickyWords();
    shape.origins = i % 2 == 0;
    const xsem::GraphRepr g = xsem::testing::RandomGraph(rng, shape);
    violations += static_cast<int>(xsem::Validate(g).size());
    const xsem::LinearizedRepr l = xsem::Linearize(g);
    violations += static_cast<int>(xsem::Validate(l).size());
    const std::string text = xsem::SerializeText(l);
    c.Expect(xsem::ParseText(text) == l, "text round trip at " + text);
    c.Expect(xsem::SerializeText(xsem::ParseText(text)) == text,
             "serialization not stable");
    c.Expect(xsem::Isomorphic(xsem::Delinearize(l), g),
             "delinearize round trip at " + text);
    const xsem::FlatRepr f = xsem::GraphToFlat(g);
    violations += static_cast<int>(xsem::Validate(f).size());
    c.Expect(xsem::Isomorphic(xsem::FlatToGraph(f), g), "flat to graph");
    c.Expect(xsem::Isomorphic(f, xsem::GraphToFlat(xsem::testing::Rename(rng, g))),
             "flat isomorphism under renaming");
    const xsem::GraphRecord rec{std::nullopt, g, std::nullopt};
    c.Expect(xsem::GraphRecordFromJson(xsem::GraphRecordToJson(rec)).graph == g,
             "JSON round trip");
  }
  c.Expect(violations == 0, "violations in the fuzz suite");
  Report(5, "round trips", c,
         "1000 fuzzed representations, " + std::to_string(violations) +
             " violations");
}

struct Toy {
  kn::Vocabs vocabs;
  std::vector<kn::TrainingExample> examples;
};

Toy MakeToy(std::size_t n, std::uint64_t seed, std::size_t distractors) {
  kn::SynthConfig sc;
  sc.seed = seed;
  sc.size = n;
  sc.distractors = distractors;
  const auto data = kn::SynthDataset(sc);
  std::vector<std::vector<std::string>> src;
  std::vector<xsem::LinearizedRepr> tgt;
  for (const auto& s : data) {
    src.push_back(s.source);
    tgt.push_back(s.target);
  }
  Toy toy;
  toy.vocabs = kn::BuildVocabs(src, tgt);
  for (const auto& s : data) {
    toy.examples.push_back(kn::EncodeExample(toy.vocabs, s.source, s.target));
  }
  return toy;
}

kn::ModelConfig ConfigFor(const kn::Vocabs& v, std::size_t e, std::size_t h,
                          std::size_t f, std::uint64_t seed) {
  kn::ModelConfig c;
  c.source_vocab = v.source.size();
  c.target_vocab = v.target.size();
  c.embed_dim = e;
  c.hidden_dim = h;
  c.ffnn_dim = f;
  c.seed = seed;
  return c;
}

double Mass(const std::vector<double>& p) {
  return std::accumulate(p.begin(), p.end(), 0.0);
}

void KernelNumerics() {
  Check c;
  double worst_grad = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Toy toy = MakeToy(1, 100 + seed, seed % 3);
    const std::size_t dim = 4 + seed % 13;  // 4..16
    kn::ModelConfig config = ConfigFor(toy.vocabs, dim, dim, dim, seed);
    config.layers = 1 + seed % 2;
    kn::ModelParams p(config);
    p.InitRandom();
    const auto r = kn::GradCheck(p, toy.examples[0], 1.0);
    worst_grad = std::max(worst_grad, r.max_rel_error);
  }
  c.Expect(worst_grad < 1e-4, "gradient check error " + Num(worst_grad, 9));

  double worst_mass = 0.0;
  {
    const Toy toy = MakeToy(20, 200, 2);
    kn::ModelParams p(ConfigFor(toy.vocabs, 16, 32, 32, 3));
    p.InitRandom();
    const auto heads = kn::HeadFlags(toy.vocabs.target);
    for (const auto& ex : toy.examples) {
      std::vector<kn::DecoderStep> steps = kn::ForwardSteps(p, ex);
      const auto greedy = kn::GreedyDecode(p, ex.x, 40, heads, true);
      steps.insert(steps.end(), greedy.steps.begin(), greedy.steps.end());
      for (const auto& st : steps) {
        worst_mass = std::max(worst_mass, std::abs(Mass(st.p_gen) - 1.0));
        worst_mass = std::max(worst_mass, std::abs(Mass(st.p_copy) - 1.0));
      }
    }
  }
  c.Expect(worst_mass <= 1e-6, "distribution mass off by " + Num(worst_mass, 9));

  const Toy toy = MakeToy(32, 300, 2);
  kn::TrainConfig tc;
  tc.fixed_mu = 1.0;
  tc.learning_rate = 1e-2;
  tc.max_epochs = 500;
  tc.patience = 500;
  tc.stop_below = 0.02;
  const auto start = Clock::now();
  auto result = kn::Train(ConfigFor(toy.vocabs, 16, 32, 32, 5), toy.examples,
                          {}, tc);
  const double loss = kn::MeanLoss(result.params, toy.examples, 1.0);
  const double seconds = Seconds(start);
  c.Expect(loss < 0.05, "overfit loss " + Num(loss));
  c.Expect(seconds < 300.0, "overfit took " + Num(seconds, 1) + " s");
  Report(6, "kernel numerics", c,
         "gradient check max rel error " + Num(worst_grad, 9) +
             ", worst mass error " + Num(worst_mass, 12) +
             ", 32-example overfit loss " + Num(loss, 4) + " after " +
             std::to_string(result.log.size()) + " epochs in " +
             Num(seconds, 1) + " s");
}

// Runs the command line tool; stdout goes to `out`.
int RunCli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(XSEM_CLI_PATH) + " " + args + " > '" +
                          out.string() + "' 2> '" + out.string() + ".err'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void WriteFile(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

fs::path ScratchDir() {
  const fs::path dir = fs::temp_directory_path() /
                       ("xsem_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

void ToyOrdering(const fs::path& dir) {
  const fs::path out = dir / "train_toy.json";
  const auto start = Clock::now();
  const int code = RunCli("--seed 1 --workers 4 --json kernel train-toy "
                          "--distractors 2 --test 2000 --out-dir '" +
                              (dir / "toy").string() + "'",
                          out);
  Check c;
  c.Expect(code == 0, "train-toy exited with " + std::to_string(code));
  double copy = 0.0;
  double heuristic = 0.0;
  double random = 0.0;
  if (code == 0) {
    const auto doc = nlohmann::json::parse(Slurp(out));
    copy = doc["methods"]["copy"]["avg_f1"];
    heuristic = doc["methods"]["heuristic"]["avg_f1"];
    random = doc["methods"]["random"]["avg_f1"];
    const auto gold = xsem::ReadLinearCorpus(Slurp(dir / "toy/test.gold.txt"));
    c.Expect(gold.size() == 2000, "test set is not 2000 sentences");
  }
  c.Expect(copy >= 0.9, "copy below 0.9");
  c.Expect(copy > heuristic, "copy not above heuristic");
  c.Expect(heuristic > random, "heuristic not above random");
  Report(7, "synthetic ordering", c,
         "avg F1 copy " + Num(copy, 4) + " > heuristic " + Num(heuristic, 4) +
             " > random " + Num(random, 4) + " (2 distractors, 2000 test, " +
             Num(Seconds(start), 1) + " s)");
}

void Determinism(const fs::path& dir) {
  Rng rng(1008);
  std::vector<xsem::GraphRecord> gold;
  std::vector<xsem::GraphRecord> system;
  std::vector<xsem::LinearizedRepr> lin;
  for (int i = 0; i < 60; ++i) {
    const xsem::GraphRepr g = xsem::testing::RandomGraph(rng);
    gold.push_back({"s" + std::to_string(i), g, std::nullopt});
    system.push_back({"s" + std::to_string(i), xsem::testing::Perturb(rng, g),
                      std::nullopt});
    lin.push_back(xsem::Linearize(g));
  }
  const auto resp = xsem::ResolveCorpus(lin, {xsem::ResolverMethod::kRandom, 9});
  xsem::TextOptions lenient;
  lenient.allow_unlinked_bullets = true;
  WriteFile(dir / "gold.jsonl", xsem::WriteGraphCorpus(gold));
  WriteFile(dir / "system.jsonl", xsem::WriteGraphCorpus(system));
  WriteFile(dir / "gold.lin", xsem::WriteLinearCorpus(lin));
  WriteFile(dir / "resp.lin", xsem::WriteLinearCorpus(resp.responses, lenient));

  const std::string d = "'" + dir.string() + "/";
  struct Run {
    std::string args;
    std::vector<std::string> files;  // written by the command, relative
  };
  auto toy = [&](const std::string& w) { return "toy" + w; };
  const std::vector<std::function<Run(const std::string&)>> runs = {
      [&](const std::string&) { return Run{"validate " + d + "gold.jsonl'", {}}; },
      [&](const std::string& w) {
        return Run{"convert " + d + "gold.jsonl' --from graph --to linear -o " +
                       d + "conv" + w + ".lin'",
                   {"conv" + w + ".lin"}};
      },
      [&](const std::string& w) {
        return Run{"convert " + d + "gold.jsonl' --from graph --to flat -o " +
                       d + "conv" + w + ".flat'",
                   {"conv" + w + ".flat"}};
      },
      [&](const std::string&) {
        return Run{"--json score " + d + "system.jsonl' " + d +
                       "gold.jsonl' --oracle",
                   {}};
      },
      [&](const std::string&) {
        return Run{"score " + d + "system.jsonl' " + d + "gold.jsonl' --smatch", {}};
      },
      [&](const std::string&) {
        return Run{"--json coref-score " + d + "gold.lin' " + d + "resp.lin'", {}};
      },
      [&](const std::string& w) {
        return Run{"resolve " + d + "gold.lin' --method random -o " + d + "res" +
                       w + ".lin'",
                   {"res" + w + ".lin"}};
      },
      [&](const std::string&) {
        return Run{"resolve " + d + "gold.lin' --method heuristic", {}};
      },
      [&](const std::string&) {
        return Run{"kernel gradcheck --dims 4 --examples 2", {}};
      },
      [&](const std::string& w) {
        return Run{"kernel train-toy --train 120 --validation 20 --test 40 "
                   "--epochs 2 --out-dir " +
                       d + toy(w) + "'",
                   {toy(w) + "/model.ckpt", toy(w) + "/test.copy.txt",
                    toy(w) + "/test.heuristic.txt", toy(w) + "/test.random.txt"}};
      },
      [&](const std::string& w) {
        return Run{"kernel decode --model " + d + "toy1/model.ckpt' --sources " +
                       d + "toy1/test.src.txt' --max-len 30 -o " + d + "greedy" +
                       w + ".lin'",
                   {"greedy" + w + ".lin"}};
      },
      [&](const std::string& w) {
        return Run{"kernel decode --model " + d + "toy1/model.ckpt' --sources " +
                       d + "toy1/test.src.txt' --forced " + d +
                       "toy1/test.gold.txt' -o " + d + "forced" + w + ".lin'",
                   {"forced" + w + ".lin"}};
      },
  };
  Check c;
  std::size_t compared = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::vector<std::string> outputs[3];
    const std::string workers[3] = {"1", "4", "1"};
    for (int k = 0; k < 3; ++k) {
      // The third run repeats the first to rule out run-to-run drift.
      const std::string tag = k == 2 ? "1r" : workers[k];
      const Run r = runs[i](tag);
      const fs::path out = dir / ("stdout_" + std::to_string(i) + "_" + tag);
      const int code =
          RunCli("--seed 3 --workers " + workers[k] + " " + r.args, out);
      c.Expect(code == 0, "command " + std::to_string(i) + " exited with " +
                              std::to_string(code) + ": " +
                              Slurp(out.string() + ".err").substr(0, 200));
      outputs[k].push_back(Slurp(out));
      for (const auto& f : r.files) outputs[k].push_back(Slurp(dir / f));
    }
    c.Expect(outputs[0] == outputs[1], "command " + std::to_string(i) +
                                           " differs across worker counts");
    c.Expect(outputs[0] == outputs[2],
             "command " + std::to_string(i) + " differs between runs");
    bool nonempty = false;
    for (const auto& o : outputs[0]) nonempty |= !o.empty();
    c.Expect(nonempty, "command " + std::to_string(i) + " wrote nothing");
    compared += outputs[0].size();
  }
  Report(8, "determinism", c,
         std::to_string(runs.size()) + " commands, " + std::to_string(compared) +
             " outputs byte-identical for 1 and 4 workers and on re-run");
}

}  // namespace

int main() {
  const fs::path dir = ScratchDir();
  const std::vector<std::function<void()>> criteria = {
      OracleEquivalence, MetricIdentities, BleuFixtures,
      CorefFixtures,     RoundTrips,       KernelNumerics,
      [&] { ToyOrdering(dir); },
      [&] { Determinism(dir); },
  };
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      std::cout << "FAIL " << i + 1 << ": exception: " << e.what() << std::endl;
      ++failures;
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  std::cout << (failures == 0 ? "all criteria passed" : "some criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
