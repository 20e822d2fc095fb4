#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xsem/coref_baselines.h"
#include "xsem/coref_eval.h"
#include "xsem/error.h"
#include "xsem/graph_io.h"
#include "xsem/graph_metric.h"
#include "xsem/kernel/checkpoint.h"
#include "xsem/kernel/model.h"
#include "xsem/kernel/synth.h"
#include "xsem/kernel/train.h"
#include "xsem/kernel/vocab.h"
#include "xsem/linear.h"
#include "xsem/linearize.h"
#include "xsem/parallel.h"
#include "xsem/repr.h"
#include "xsem/rng.h"
#include "xsem/simd/kernels.h"
#include "xsem/similarity.h"

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;
namespace kn = xsem::kernel;

constexpr const char* kVersion = "0.3.0";

constexpr const char* kFormatHelp = R"(File formats

Linearized corpus (--form linear): blocks separated by one blank line.
  [ ( 30 people_h ) were reported_h ] [ ( @b ) fled_h ( the city_h ) ]
  #coref 10 3
Line 1 holds space-separated tokens: `[` `]` delimit a predicate span, `(`
`)` an argument span, `@b` (or U+2022) is the bullet, a trailing `_h` marks a
span head. A backslash escapes reserved spellings (`\[`, `\@b`, `\\`, a final
`\_h`, a leading `\#`). Each `#coref <bullet> <antecedent>` line links a
bullet to an earlier word position (0-based over line 1). An empty
representation is the single line `#empty`.

Graph corpus (--form graph): JSON Lines, one record per sentence.
  {"id": "s1", "vars": [{"id": "e1", "kind": "event"}, ...],
   "instances": {"e1": {"tokens": ["sleeps"], "head_index": 0,
                        "origin_positions": [3]}, ...},
   "edges": [["e1", "ARG", "x1"], ...],
   "skeleton": [{"var": "x1", "parent": "e1", "anchor": 1, "order": 0,
                 "bullet": false, "antecedent_word": 0}, ...]}
"id", "origin_positions" and "skeleton" are optional.

Flat corpus (--form flat): JSON Lines.
  {"id": "s1", "preds": [{"var": "e1", "kind": "event", "tokens": ["sleeps"],
                          "head_index": 0}, ...],
   "args": [["e1", "x1"], ...]}

Source sentences (kernel decode): one sentence per line, tokens separated by
spaces.

Exit codes: 0 success, 2 input error, 3 alignment error, 4 numeric failure.
)";

struct Globals {
  std::size_t workers = 1;
  bool json = false;
  std::string manifest_path;
  std::uint64_t seed = 0;
};

class Manifest {
 public:
  explicit Manifest(std::string subcommand) {
    doc_["tool"] = "xsem";
    doc_["version"] = kVersion;
    doc_["subcommand"] = std::move(subcommand);
    doc_["config"] = ordered_json::object();
    doc_["inputs"] = ordered_json::array();
    doc_["outputs"] = ordered_json::array();
  }
  template <typename T>
  void Set(const std::string& key, const T& value) {
    doc_["config"][key] = value;
  }
  void Input(const std::string& path) { doc_["inputs"].push_back(path); }
  void Output(const std::string& path) { doc_["outputs"].push_back(path); }

  void Emit(const Globals& g, double seconds) {
    doc_["seed"] = g.seed;
    doc_["workers"] = g.workers;
    doc_["simd"] = std::string(xsem::simd::Active().name);
    doc_["wall_time_s"] = seconds;
    const std::string text = doc_.dump() + "\n";
    if (g.manifest_path.empty()) {
      std::cerr << "manifest: " << text;
    } else {
      std::ofstream out(g.manifest_path);
      out << text;
    }
  }

 private:
  ordered_json doc_;
};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw xsem::InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteOutput(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw xsem::InputError("cannot open '" + path + "' for writing");
  out << text;
}

std::string Fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

ordered_json PrfJson(const xsem::PrfScore& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

enum class Form { kFlat, kGraph, kLinear };

const std::map<std::string, Form> kForms = {
    {"flat", Form::kFlat}, {"graph", Form::kGraph}, {"linear", Form::kLinear}};

// Every input form normalized to graph records.
std::vector<xsem::GraphRecord> LoadGraphs(const std::string& path, Form form,
                                          bool strict) {
  const std::string text = ReadFile(path);
  std::vector<xsem::GraphRecord> out;
  switch (form) {
    case Form::kGraph:
      return xsem::ReadGraphCorpus(text, strict);
    case Form::kFlat:
      for (auto& r : xsem::ReadFlatCorpus(text, strict)) {
        out.push_back({r.id, xsem::FlatToGraph(r.flat), std::nullopt});
      }
      return out;
    case Form::kLinear: {
      const auto corpus = xsem::ReadLinearCorpus(text);
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        try {
          auto d = xsem::DelinearizeWithSkeleton(corpus[i]);
          out.push_back({std::nullopt, std::move(d.graph), std::move(d.skeleton)});
        } catch (const xsem::Error& e) {
          throw xsem::Error(e.kind(), "block " + std::to_string(i + 1) + ": " + e.what());
        }
      }
      return out;
    }
  }
  return out;
}

std::string RecordId(const std::optional<std::string>& id, std::size_t i) {
  return id ? *id : "#" + std::to_string(i + 1);
}

int CmdValidate(const Globals& g, Manifest& m, const std::string& path,
                const std::string& form_name, bool lenient) {
  m.Input(path);
  m.Set("form", form_name);
  m.Set("lenient", lenient);
  const Form form = kForms.at(form_name);
  ordered_json report;
  std::size_t records = 0;
  std::vector<std::string> warnings;
  if (form == Form::kLinear) {
    records = xsem::ReadLinearCorpus(ReadFile(path)).size();
  } else {
    const auto graphs = LoadGraphs(path, form, !lenient);
    records = graphs.size();
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      for (const auto& w : xsem::Warnings(graphs[i].graph)) {
        warnings.push_back(RecordId(graphs[i].id, i) + ": " + xsem::Describe(w));
      }
    }
  }
  if (g.json) {
    report["records"] = records;
    report["valid"] = true;
    report["warnings"] = warnings;
    std::cout << report.dump(2) << "\n";
  } else {
    for (const auto& w : warnings) std::cout << "warning " << w << "\n";
    std::cout << "valid " << records << " records\n";
  }
  return 0;
}

int CmdConvert(Manifest& m, const std::string& in, const std::string& out,
               const std::string& from, const std::string& to, bool utf8) {
  m.Input(in);
  m.Output(out.empty() ? "-" : out);
  m.Set("from", from);
  m.Set("to", to);
  m.Set("utf8_bullet", utf8);
  const Form f = kForms.at(from);
  const Form t = kForms.at(to);
  xsem::TextOptions opts;
  opts.utf8_bullet = utf8;
  if (f == Form::kLinear && t == Form::kLinear) {
    WriteOutput(out, xsem::WriteLinearCorpus(xsem::ReadLinearCorpus(ReadFile(in)), opts));
    return 0;
  }
  const auto graphs = LoadGraphs(in, f, true);
  std::string text;
  if (t == Form::kGraph) {
    text = xsem::WriteGraphCorpus(graphs);
  } else if (t == Form::kFlat) {
    std::vector<xsem::FlatRecord> flats;
    for (const auto& r : graphs) flats.push_back({r.id, xsem::GraphToFlat(r.graph)});
    text = xsem::WriteFlatCorpus(flats);
  } else {
    std::vector<xsem::LinearizedRepr> lins;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      try {
        const auto& r = graphs[i];
        lins.push_back(r.skeleton ? xsem::Linearize(r.graph, *r.skeleton)
                                  : xsem::Linearize(r.graph));
      } catch (const xsem::Error& e) {
        throw xsem::Error(e.kind(), "record " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    text = xsem::WriteLinearCorpus(lins, opts);
  }
  WriteOutput(out, text);
  return 0;
}

struct ScoreFlags {
  std::string phi = "bleu";
  std::string psi = "delta";
  int bleu_max_order = 4;
  std::string bleu_smoothing = "add1";
  int restarts = 4;
  bool oracle = false;
  bool smatch = false;
  std::string form = "graph";
};

int CmdScore(const Globals& g, Manifest& m, const std::string& sys_path,
             const std::string& gold_path, const ScoreFlags& f) {
  m.Input(sys_path);
  m.Input(gold_path);
  xsem::MatchConfig config;
  const std::string phi = f.smatch ? "delta" : f.phi;
  const auto phi_kind = xsem::ParseSimKind(phi);
  const auto psi_kind = xsem::ParseSimKind(f.psi);
  const auto smoothing = xsem::ParseSmoothing(f.bleu_smoothing);
  if (!phi_kind || !psi_kind || !smoothing) {
    throw xsem::InputError("unknown similarity option");
  }
  if (*psi_kind != xsem::SimKind::kKroneckerDelta) {
    throw xsem::InputError("--psi supports only delta");
  }
  config.phi = *phi_kind == xsem::SimKind::kKroneckerDelta
                   ? xsem::SimilaritySpec::Delta()
                   : xsem::SimilaritySpec::Bleu(f.bleu_max_order, *smoothing);
  config.psi = xsem::SimilaritySpec::Delta();
  config.restarts = f.restarts;
  config.seed = g.seed;
  xsem::CheckSpec(config.phi);
  m.Set("form", f.form);
  m.Set("phi", phi);
  m.Set("psi", f.psi);
  m.Set("bleu_max_order", f.bleu_max_order);
  m.Set("bleu_smoothing", f.bleu_smoothing);
  m.Set("restarts", f.restarts);
  m.Set("oracle", f.oracle);

  const Form form = kForms.at(f.form);
  const auto sys = LoadGraphs(sys_path, form, true);
  const auto gold = LoadGraphs(gold_path, form, true);
  if (sys.size() != gold.size()) {
    throw xsem::AlignmentError("system has " + std::to_string(sys.size()) +
                               " records, gold has " + std::to_string(gold.size()));
  }
  std::vector<xsem::GraphRepr> sg, gg;
  for (const auto& r : sys) sg.push_back(r.graph);
  for (const auto& r : gold) gg.push_back(r.graph);
  xsem::CorpusOptions opts;
  opts.workers = g.workers;
  opts.oracle = f.oracle;
  const auto score = xsem::ScoreCorpus(sg, gg, config, opts);

  if (g.json) {
    ordered_json doc;
    doc["pairs"] = ordered_json::array();
    for (std::size_t i = 0; i < score.pairs.size(); ++i) {
      const auto& p = score.pairs[i];
      ordered_json row = PrfJson(p.prf);
      row["id"] = RecordId(gold[i].id, i);
      row["score"] = p.score;
      if (p.climbs_to_optimum) row["climbs_to_optimum"] = *p.climbs_to_optimum;
      doc["pairs"].push_back(row);
    }
    doc["corpus"] = PrfJson(score.prf);
    if (f.oracle) {
      doc["oracle"] = {{"eligible", score.oracle_eligible},
                       {"hits", score.oracle_hits}};
    }
    std::cout << doc.dump(2) << "\n";
    return 0;
  }
  for (std::size_t i = 0; i < score.pairs.size(); ++i) {
    const auto& p = score.pairs[i];
    std::cout << RecordId(gold[i].id, i) << " " << Fixed(p.prf.precision) << " "
              << Fixed(p.prf.recall) << " " << Fixed(p.prf.f1) << " "
              << Fixed(p.score) << "\n";
  }
  std::cout << "CORPUS " << Fixed(score.prf.precision) << " "
            << Fixed(score.prf.recall) << " " << Fixed(score.prf.f1) << "\n";
  if (f.oracle) {
    const double rate = score.oracle_eligible == 0
                            ? 1.0
                            : static_cast<double>(score.oracle_hits) /
                                  static_cast<double>(score.oracle_eligible);
    std::cout << "ORACLE " << score.oracle_hits << "/" << score.oracle_eligible
              << " " << Fixed(rate) << "\n";
  }
  return 0;
}

void PrintCorefTable(const xsem::CorefReport& r, const std::string& metric,
                     bool json) {
  const std::vector<std::pair<std::string, const xsem::PrfScore*>> rows = {
      {"muc", &r.muc}, {"b3", &r.b3}, {"ceafe", &r.ceafe}};
  const std::map<std::string, std::string> labels = {
      {"muc", "MUC"}, {"b3", "B3"}, {"ceafe", "CEAF_e"}};
  if (json) {
    ordered_json doc;
    for (const auto& [name, s] : rows) {
      if (metric == "all" || metric == name) doc[name] = PrfJson(*s);
    }
    if (metric == "all") doc["avg_f1"] = r.avg_f1;
    std::cout << doc.dump(2) << "\n";
    return;
  }
  std::printf("%-8s %8s %8s %8s\n", "Metric", "P", "R", "F1");
  for (const auto& [name, s] : rows) {
    if (metric != "all" && metric != name) continue;
    std::printf("%-8s %8s %8s %8s\n", labels.at(name).c_str(),
                Fixed(100.0 * s->precision, 2).c_str(),
                Fixed(100.0 * s->recall, 2).c_str(),
                Fixed(100.0 * s->f1, 2).c_str());
  }
  if (metric == "all") {
    std::printf("%-8s %8s %8s %8s\n", "Avg. F1", "", "",
                Fixed(100.0 * r.avg_f1, 2).c_str());
  }
}

std::vector<xsem::MentionChainSet> ChainsOf(
    const std::vector<xsem::LinearizedRepr>& corpus, std::size_t workers) {
  std::vector<xsem::MentionChainSet> out(corpus.size());
  xsem::ParallelFor(corpus.size(), workers, [&](std::size_t i) {
    out[i] = xsem::ChainsFromLinearized(corpus[i]);
  });
  return out;
}

int CmdCorefScore(const Globals& g, Manifest& m, const std::string& key_path,
                  const std::string& resp_path, const std::string& metric) {
  m.Input(key_path);
  m.Input(resp_path);
  m.Set("metric", metric);
  xsem::TextOptions lenient;
  lenient.allow_unlinked_bullets = true;
  const auto key = xsem::ReadLinearCorpus(ReadFile(key_path), lenient);
  const auto resp = xsem::ReadLinearCorpus(ReadFile(resp_path), lenient);
  if (key.size() != resp.size()) {
    throw xsem::AlignmentError("key has " + std::to_string(key.size()) +
                               " blocks, response has " +
                               std::to_string(resp.size()));
  }
  const auto report =
      xsem::ScoreCoref(ChainsOf(key, g.workers), ChainsOf(resp, g.workers));
  PrintCorefTable(report, metric, g.json);
  return 0;
}

int CmdResolve(const Globals& g, Manifest& m, const std::string& in,
               const std::string& out, const std::string& method) {
  m.Input(in);
  m.Output(out.empty() ? "-" : out);
  m.Set("method", method);
  const auto parsed = xsem::ParseResolverMethod(method);
  if (!parsed) throw xsem::InputError("unknown method '" + method + "'");
  const auto gold = xsem::ReadLinearCorpus(ReadFile(in));
  const auto res = xsem::ResolveCorpus(gold, {*parsed, g.seed}, g.workers);
  xsem::TextOptions opts;
  opts.allow_unlinked_bullets = true;
  WriteOutput(out, xsem::WriteLinearCorpus(res.responses, opts));
  std::cerr << "resolved " << res.bullets - res.unresolved << "/" << res.bullets
            << " bullets\n";
  return 0;
}

// "16" sets every width; "E,H,F" sets embedding, hidden and feed-forward
// widths separately.
void ApplyDims(const std::string& dims, kn::ModelConfig& c) {
  std::vector<std::size_t> v;
  std::stringstream ss(dims);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      const long long n = std::stoll(part, &used);
      if (used != part.size() || n < 1) throw std::invalid_argument(part);
      v.push_back(static_cast<std::size_t>(n));
    } catch (const std::exception&) {
      throw xsem::InputError("bad --dims value '" + dims + "'");
    }
  }
  if (v.size() == 1) {
    c.embed_dim = c.hidden_dim = c.ffnn_dim = v[0];
  } else if (v.size() == 3) {
    c.embed_dim = v[0];
    c.hidden_dim = v[1];
    c.ffnn_dim = v[2];
  } else {
    throw xsem::InputError("bad --dims value '" + dims + "'");
  }
}

struct KernelFlags {
  std::string dims = "16,32,32";
  std::size_t layers = 1;
  std::size_t distractors = 2;
  std::size_t vocab = 8;
  double mu = 1.0;
  // gradcheck
  double eps = 1e-4;
  std::size_t examples = 1;
  double tolerance = 1e-4;
  // train-toy
  std::size_t train = 3000;
  std::size_t validation = 200;
  std::size_t test = 2000;
  std::size_t epochs = 25;
  std::size_t pretrain_epochs = 1;
  double lr = 2e-3;
  std::size_t batch = 16;
  std::size_t patience = 3;
  std::optional<double> fixed_mu;
  std::string out_dir;
  // decode
  std::string model;
  std::string sources;
  std::string forced;
  std::string out;
  std::size_t max_len = 200;
};

void SetKernelManifest(Manifest& m, const KernelFlags& f,
                       const kn::ModelConfig& c) {
  m.Set("embed_dim", c.embed_dim);
  m.Set("hidden_dim", c.hidden_dim);
  m.Set("ffnn_dim", c.ffnn_dim);
  m.Set("layers", c.layers);
  m.Set("mu", c.mu);
  m.Set("distractors", f.distractors);
  m.Set("vocab", f.vocab);
}

std::vector<kn::TrainingExample> Encode(const kn::Vocabs& v,
                                        const std::vector<kn::SynthSentence>& s) {
  std::vector<kn::TrainingExample> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(kn::EncodeExample(v, x.source, x.target));
  return out;
}

int CmdGradcheck(const Globals& g, Manifest& m, const KernelFlags& f) {
  kn::ModelConfig c;
  ApplyDims(f.dims, c);
  c.layers = f.layers;
  c.mu = f.mu;
  kn::SynthConfig sc;
  sc.seed = g.seed;
  sc.size = f.examples;
  sc.vocab = f.vocab;
  sc.distractors = f.distractors;
  SetKernelManifest(m, f, c);
  m.Set("eps", f.eps);
  m.Set("examples", f.examples);
  m.Set("tolerance", f.tolerance);
  const auto data = kn::SynthDataset(sc);
  if (data.empty()) throw xsem::InputError("--examples must be at least 1");
  std::vector<std::vector<std::string>> sources;
  std::vector<xsem::LinearizedRepr> targets;
  for (const auto& s : data) {
    sources.push_back(s.source);
    targets.push_back(s.target);
  }
  const auto vocabs = kn::BuildVocabs(sources, targets);
  c.source_vocab = vocabs.source.size();
  c.target_vocab = vocabs.target.size();
  c.seed = xsem::MixSeed(g.seed, 0x6b65726e);
  kn::ModelParams params(c);
  params.InitRandom();
  kn::GradCheckResult worst;
  for (const auto& ex : Encode(vocabs, data)) {
    const auto r = kn::GradCheck(params, ex, c.mu, f.eps);
    if (r.max_rel_error > worst.max_rel_error || worst.worst_tensor.empty()) {
      const std::size_t checked = worst.checked;
      worst = r;
      worst.checked += checked;
    } else {
      worst.checked += r.checked;
    }
  }
  const bool ok = worst.max_rel_error < f.tolerance;
  if (g.json) {
    ordered_json doc;
    doc["max_rel_error"] = worst.max_rel_error;
    doc["tensor"] = worst.worst_tensor;
    doc["index"] = worst.worst_index;
    doc["analytic"] = worst.analytic;
    doc["numeric"] = worst.numeric;
    doc["checked"] = worst.checked;
    doc["pass"] = ok;
    std::cout << doc.dump(2) << "\n";
  } else {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "max relative error %.3e at %s[%zu] (analytic %.6e, "
                  "numeric %.6e) over %zu parameters: %s\n",
                  worst.max_rel_error, worst.worst_tensor.c_str(),
                  worst.worst_index, worst.analytic, worst.numeric,
                  worst.checked, ok ? "pass" : "FAIL");
    std::cout << buf;
  }
  return ok ? 0 : static_cast<int>(xsem::ErrorKind::kNumeric);
}

// Copy-model responses by forced decoding: the gold tokens with the model's
// assignment at every bullet.
std::vector<xsem::LinearizedRepr> ForcedResponses(
    kn::ModelParams& params, const kn::Vocabs& v,
    const std::vector<std::vector<std::string>>& sources,
    const std::vector<xsem::LinearizedRepr>& gold, std::size_t workers) {
  std::vector<xsem::LinearizedRepr> out(gold.size());
  xsem::ParallelFor(gold.size(), workers, [&](std::size_t i) {
    const auto ex = kn::EncodeExample(v, sources[i], gold[i]);
    const auto a = kn::ForcedCopy(params, ex);
    xsem::LinearizedRepr r = gold[i];
    for (std::size_t t = 0; t < r.size(); ++t) {
      r.assignments[t] = r.tokens[t].IsBullet() ? a[t] : std::nullopt;
    }
    out[i] = std::move(r);
  });
  return out;
}

std::string SourcesText(const std::vector<std::vector<std::string>>& sources) {
  std::string out;
  for (const auto& s : sources) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i > 0) out += ' ';
      out += s[i];
    }
    out += '\n';
  }
  return out;
}

int CmdTrainToy(const Globals& g, Manifest& m, const KernelFlags& f) {
  kn::ModelConfig c;
  ApplyDims(f.dims, c);
  c.layers = f.layers;
  c.mu = f.mu;
  c.seed = xsem::MixSeed(g.seed, 0x6b65726e);
  kn::TrainConfig tc;
  tc.max_epochs = f.epochs;
  tc.max_pretrain_epochs = f.pretrain_epochs;
  tc.learning_rate = f.lr;
  tc.batch_size = f.batch;
  tc.patience = f.patience;
  tc.fixed_mu = f.fixed_mu;
  tc.seed = g.seed;
  SetKernelManifest(m, f, c);
  m.Set("train", f.train);
  m.Set("validation", f.validation);
  m.Set("test", f.test);
  m.Set("epochs", f.epochs);
  m.Set("pretrain_epochs", f.pretrain_epochs);
  m.Set("lr", f.lr);
  m.Set("batch", f.batch);
  m.Set("patience", f.patience);
  if (f.fixed_mu) m.Set("fixed_mu", *f.fixed_mu);
  if (f.out_dir.empty()) throw xsem::InputError("--out-dir is required");

  kn::SynthConfig sc;
  sc.seed = g.seed;
  sc.vocab = f.vocab;
  sc.distractors = f.distractors;
  const auto split = kn::SynthSplits(sc, f.train, f.validation, f.test);
  std::vector<std::vector<std::string>> sources;
  std::vector<xsem::LinearizedRepr> targets;
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (const auto& s : *part) {
      sources.push_back(s.source);
      targets.push_back(s.target);
    }
  }
  const auto vocabs = kn::BuildVocabs(sources, targets);
  c.source_vocab = vocabs.source.size();
  c.target_vocab = vocabs.target.size();
  const auto train = Encode(vocabs, split.train);
  const auto valid = Encode(vocabs, split.validation);

  auto result = kn::Train(c, train, valid, tc,
                          [&](const kn::EpochLog& log, kn::ModelParams&) {
                            std::cerr << "epoch " << log.epoch << " mu " << log.mu
                                      << " train " << Fixed(log.train_loss, 4)
                                      << " validation "
                                      << Fixed(log.validation_loss, 4) << "\n";
                          });

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  const std::string ckpt = (dir / "model.ckpt").string();
  kn::SaveCheckpoint(ckpt, result.params, vocabs);
  m.Output(ckpt);

  std::vector<std::vector<std::string>> test_src;
  std::vector<xsem::LinearizedRepr> test_gold;
  for (const auto& s : split.test) {
    test_src.push_back(s.source);
    test_gold.push_back(s.target);
  }
  auto write = [&](const std::string& name, const std::string& text) {
    const std::string path = (dir / name).string();
    WriteOutput(path, text);
    m.Output(path);
  };
  xsem::TextOptions lenient;
  lenient.allow_unlinked_bullets = true;
  write("test.src.txt", SourcesText(test_src));
  write("test.gold.txt", xsem::WriteLinearCorpus(test_gold));
  const auto copy = ForcedResponses(result.params, vocabs, test_src, test_gold, g.workers);
  write("test.copy.txt", xsem::WriteLinearCorpus(copy, lenient));
  const auto heuristic = xsem::ResolveCorpus(
      test_gold, {xsem::ResolverMethod::kHeuristic, g.seed}, g.workers);
  write("test.heuristic.txt", xsem::WriteLinearCorpus(heuristic.responses, lenient));
  const auto random = xsem::ResolveCorpus(
      test_gold, {xsem::ResolverMethod::kRandom, g.seed}, g.workers);
  write("test.random.txt", xsem::WriteLinearCorpus(random.responses, lenient));

  const std::vector<std::pair<std::string, xsem::CorefReport>> rows = {
      {"copy", xsem::EvaluateForced(test_gold, copy)},
      {"heuristic", xsem::EvaluateForced(test_gold, heuristic.responses)},
      {"random", xsem::EvaluateForced(test_gold, random.responses)}};
  if (g.json) {
    ordered_json doc;
    doc["best_epoch"] = result.best_epoch;
    doc["epochs"] = ordered_json::array();
    for (const auto& l : result.log) {
      doc["epochs"].push_back({{"epoch", l.epoch},
                               {"mu", l.mu},
                               {"train_loss", l.train_loss},
                               {"validation_loss", l.validation_loss}});
    }
    for (const auto& [name, r] : rows) {
      doc["methods"][name] = {{"muc", PrfJson(r.muc)},
                              {"b3", PrfJson(r.b3)},
                              {"ceafe", PrfJson(r.ceafe)},
                              {"avg_f1", r.avg_f1}};
    }
    std::cout << doc.dump(2) << "\n";
  } else {
    std::printf("best epoch %zu of %zu\n", result.best_epoch, result.log.size());
    std::printf("%-10s %8s %8s %8s %8s\n", "Method", "MUC", "B3", "CEAF_e",
                "Avg. F1");
    for (const auto& [name, r] : rows) {
      std::printf("%-10s %8s %8s %8s %8s\n", name.c_str(),
                  Fixed(100.0 * r.muc.f1, 2).c_str(),
                  Fixed(100.0 * r.b3.f1, 2).c_str(),
                  Fixed(100.0 * r.ceafe.f1, 2).c_str(),
                  Fixed(100.0 * r.avg_f1, 2).c_str());
    }
  }
  return 0;
}

std::vector<std::vector<std::string>> ReadSources(const std::string& path) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(ReadFile(path));
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::vector<std::string> s;
    std::string w;
    while (words >> w) s.push_back(w);
    out.push_back(std::move(s));
  }
  return out;
}

int CmdDecode(const Globals& g, Manifest& m, const KernelFlags& f) {
  if (f.model.empty() || f.sources.empty()) {
    throw xsem::InputError("--model and --sources are required");
  }
  m.Input(f.model);
  m.Input(f.sources);
  m.Output(f.out.empty() ? "-" : f.out);
  m.Set("max_len", f.max_len);
  auto ckpt = kn::LoadCheckpoint(f.model);
  const auto sources = ReadSources(f.sources);
  xsem::TextOptions lenient;
  lenient.allow_unlinked_bullets = true;
  std::vector<xsem::LinearizedRepr> out;
  if (!f.forced.empty()) {
    m.Input(f.forced);
    m.Set("forced", true);
    const auto gold = xsem::ReadLinearCorpus(ReadFile(f.forced));
    if (gold.size() != sources.size()) {
      throw xsem::AlignmentError("forced targets have " +
                                 std::to_string(gold.size()) +
                                 " blocks, sources have " +
                                 std::to_string(sources.size()) + " lines");
    }
    out = ForcedResponses(ckpt.params, ckpt.vocabs, sources, gold, g.workers);
  } else {
    const auto heads = kn::HeadFlags(ckpt.vocabs.target);
    out.resize(sources.size());
    xsem::ParallelFor(sources.size(), g.workers, [&](std::size_t i) {
      const auto x = kn::EncodeSource(ckpt.vocabs.source, sources[i]);
      const auto d = kn::GreedyDecode(ckpt.params, x, f.max_len, heads);
      out[i] = kn::DecodeTarget(ckpt.vocabs.target, d.y, d.a);
    });
  }
  // Greedy output need not be well formed; write it without re-validation.
  std::string text;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i > 0) text += "\n";
    try {
      text += xsem::SerializeText(out[i], lenient);
    } catch (const xsem::Error&) {
      text += "#malformed";
      for (const auto& t : out[i].tokens) text += " " + xsem::EncodeToken(t);
      text += "\n";
    }
  }
  WriteOutput(f.out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xsem: cross-lingual semantic representation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.footer(kFormatHelp);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  if (const char* env = std::getenv("XSEM_SEED")) {
    try {
      g.seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "error: XSEM_SEED is not an unsigned integer\n";
      return 2;
    }
  }
  app.add_option("--workers", g.workers, "Worker threads (never changes results)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_option("--manifest", g.manifest_path,
                 "Write the run manifest here instead of stderr");
  app.add_option("--seed", g.seed, "Seed (default: $XSEM_SEED or 0)");

  std::string path, path2, out, form = "graph", from, to, metric = "all",
                                method = "heuristic";
  bool lenient = false, utf8 = false;
  const auto form_check = CLI::IsMember({"flat", "graph", "linear"});

  auto* validate = app.add_subcommand("validate", "Check a corpus against every invariant");
  validate->add_option("input", path, "Corpus file")->required();
  validate->add_option("--form", form, "flat, graph or linear")->check(form_check);
  validate->add_flag("--lenient", lenient, "Ignore unknown JSON fields");

  auto* convert = app.add_subcommand("convert", "Convert between flat, graph and linear forms");
  convert->add_option("input", path, "Input corpus")->required();
  convert->add_option("--from", from, "Input form")->required()->check(form_check);
  convert->add_option("--to", to, "Output form")->required()->check(form_check);
  convert->add_option("-o,--output", out, "Output file (default stdout)");
  convert->add_flag("--utf8-bullet", utf8, "Write U+2022 for bullets");

  ScoreFlags sf;
  auto* score = app.add_subcommand("score", "Graph matching P/R/F1 of system against gold");
  score->add_option("system", path, "System corpus")->required();
  score->add_option("gold", path2, "Gold corpus")->required();
  score->add_option("--form", sf.form, "Corpus form")->check(form_check);
  score->add_option("--phi", sf.phi, "Instance similarity")
      ->check(CLI::IsMember({"bleu", "delta"}));
  score->add_option("--psi", sf.psi, "Relation similarity")
      ->check(CLI::IsMember({"delta"}));
  score->add_option("--bleu-max-order", sf.bleu_max_order, "BLEU n-gram order")
      ->check(CLI::PositiveNumber);
  score->add_option("--bleu-smoothing", sf.bleu_smoothing, "none or add1")
      ->check(CLI::IsMember({"none", "add1"}));
  score->add_option("--restarts", sf.restarts, "Random restarts")
      ->check(CLI::NonNegativeNumber);
  score->add_flag("--oracle", sf.oracle, "Cross-check small pairs by brute force");
  score->add_flag("--smatch", sf.smatch, "Exact matching (phi = delta)");

  auto* coref = app.add_subcommand("coref-score", "MUC, B3 and CEAF_e of a response");
  coref->add_option("key", path, "Key linearized corpus")->required();
  coref->add_option("response", path2, "Response linearized corpus")->required();
  coref->add_option("--metric", metric, "muc, b3, ceafe or all")
      ->check(CLI::IsMember({"muc", "b3", "ceafe", "all"}));

  auto* resolve = app.add_subcommand("resolve", "Baseline coreference resolution");
  resolve->add_option("input", path, "Gold linearized corpus")->required();
  resolve->add_option("--method", method, "heuristic or random")
      ->check(CLI::IsMember({"heuristic", "random"}));
  resolve->add_option("-o,--output", out, "Output file (default stdout)");

  KernelFlags kf;
  auto* kernel = app.add_subcommand("kernel", "Copy-model experiments");
  kernel->require_subcommand(1);
  auto add_model_flags = [&](CLI::App* c) {
    c->add_option("--dims", kf.dims, "Widths: N or E,H,F");
    c->add_option("--layers", kf.layers, "Stacked LSTM layers")->check(CLI::PositiveNumber);
    c->add_option("--distractors", kf.distractors, "Same-noun competitors per bullet");
    c->add_option("--vocab", kf.vocab, "Synthetic symbols per class")->check(CLI::PositiveNumber);
    c->add_option("--mu", kf.mu, "Copy-loss weight")->check(CLI::NonNegativeNumber);
  };
  auto* gradcheck = kernel->add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  add_model_flags(gradcheck);
  gradcheck->add_option("--eps", kf.eps, "Finite-difference step");
  gradcheck->add_option("--examples", kf.examples, "Synthetic examples to check");
  gradcheck->add_option("--tolerance", kf.tolerance, "Pass threshold");
  auto* train_toy = kernel->add_subcommand("train-toy", "Train on synthetic data and compare resolvers");
  add_model_flags(train_toy);
  train_toy->add_option("--train", kf.train, "Training sentences");
  train_toy->add_option("--validation", kf.validation, "Validation sentences");
  train_toy->add_option("--test", kf.test, "Test sentences");
  train_toy->add_option("--epochs", kf.epochs, "Maximum epochs");
  train_toy->add_option("--pretrain-epochs", kf.pretrain_epochs, "Maximum mu = 0 epochs");
  train_toy->add_option("--lr", kf.lr, "Learning rate");
  train_toy->add_option("--batch", kf.batch, "Batch size")->check(CLI::PositiveNumber);
  train_toy->add_option("--patience", kf.patience, "Early-stopping patience");
  train_toy->add_option("--fixed-mu", kf.fixed_mu, "Single phase at this mu");
  train_toy->add_option("--out-dir", kf.out_dir, "Directory for the checkpoint and test files")
      ->required();
  auto* decode = kernel->add_subcommand("decode", "Greedy or forced decoding with a checkpoint");
  decode->add_option("--model", kf.model, "Checkpoint file")->required();
  decode->add_option("--sources", kf.sources, "Source sentences, one per line")->required();
  decode->add_option("--forced", kf.forced, "Gold linearized targets for forced decoding");
  decode->add_option("--max-len", kf.max_len, "Greedy length limit");
  decode->add_option("-o,--output", out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto start = std::chrono::steady_clock::now();
  std::string name;
  for (auto* sub : app.get_subcommands()) {
    name = sub->get_name();
    for (auto* inner : sub->get_subcommands()) name += " " + inner->get_name();
  }
  Manifest manifest(name);
  int code = 0;
  try {
    if (*validate) {
      code = CmdValidate(g, manifest, path, form, lenient);
    } else if (*convert) {
      code = CmdConvert(manifest, path, out, from, to, utf8);
    } else if (*score) {
      code = CmdScore(g, manifest, path, path2, sf);
    } else if (*coref) {
      code = CmdCorefScore(g, manifest, path, path2, metric);
    } else if (*resolve) {
      code = CmdResolve(g, manifest, path, out, method);
    } else if (*gradcheck) {
      code = CmdGradcheck(g, manifest, kf);
    } else if (*train_toy) {
      code = CmdTrainToy(g, manifest, kf);
    } else if (*decode) {
      kf.out = out;
      code = CmdDecode(g, manifest, kf);
    }
  } catch (const xsem::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = 2;
  }
  std::cout.flush();
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest.Emit(g, seconds);
  return code;
}
