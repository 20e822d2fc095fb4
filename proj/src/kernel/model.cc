#include "xsem/kernel/model.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "xsem/error.h"

namespace xsem::kernel {
namespace {

std::vector<double> Softmax(std::span<const double> x) {
  std::vector<double> p(x.begin(), x.end());
  if (p.empty()) return p;
  const double top = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - top);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

std::size_t ArgMax(std::span<const double> x, std::size_t from = 0) {
  std::size_t best = from;
  for (std::size_t i = from + 1; i < x.size(); ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

std::vector<double> ToVector(std::span<const double> s) {
  return {s.begin(), s.end()};
}

}  // namespace

void CheckConfig(const ModelConfig& c) {
  if (c.source_vocab == 0 || c.target_vocab == 0 || c.embed_dim == 0 ||
      c.hidden_dim == 0 || c.layers == 0 || c.ffnn_dim == 0) {
    throw InputError("model dimensions must all be at least 1");
  }
  if (c.target_vocab <= static_cast<std::size_t>(kBulletId)) {
    throw InputError("target vocabulary lacks the reserved symbols");
  }
  if (!std::isfinite(c.mu) || c.mu < 0.0) {
    throw InputError("mu must be finite and nonnegative");
  }
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  CheckConfig(config_);
  Build();
  Bind();
}

ModelParams::ModelParams(const ModelParams& other)
    : config_(other.config_), tensors_(other.tensors_) {
  Bind();
}

ModelParams& ModelParams::operator=(const ModelParams& other) {
  if (this != &other) {
    config_ = other.config_;
    tensors_ = other.tensors_;
    Bind();
  }
  return *this;
}

void ModelParams::Build() {
  const std::size_t e = config_.embed_dim;
  const std::size_t h = config_.hidden_dim;
  const std::size_t f = config_.ffnn_dim;
  const std::size_t vt = config_.target_vocab;
  const std::size_t g = e + 2 * h;
  auto add = [&](std::string name, std::size_t r, std::size_t c) {
    tensors_.emplace_back(std::move(name), r, c);
  };
  add("source_embed", config_.source_vocab, e);
  add("target_embed", vt, e);
  for (const char* stack : {"encoder_fw", "encoder_bw", "decoder"}) {
    for (std::size_t l = 0; l < config_.layers; ++l) {
      const std::size_t in = l == 0 ? e : h;
      const std::string base = std::string(stack) + "." + std::to_string(l);
      add(base + ".w", 4 * h, in + h);
      add(base + ".b", 4 * h, 1);
    }
  }
  add("w_alpha", h, 2 * h);
  add("b_alpha", h, 1);
  add("w_beta", h, 2 * h);
  add("ffnn_g.w1", f, 3 * h);
  add("ffnn_g.b1", f, 1);
  add("ffnn_g.w2", vt, f);
  add("ffnn_g.b2", vt, 1);
  for (const auto& [name, in] : {std::pair<const char*, std::size_t>{"ffnn_c", g},
                                 {"ffnn_p", g},
                                 {"ffnn_a", 3 * g}}) {
    add(std::string(name) + ".w1", f, in);
    add(std::string(name) + ".b1", f, 1);
    add(std::string(name) + ".w2", f, f);
    add(std::string(name) + ".b2", f, 1);
  }
  add("w_c", f, 1);
  add("w_p", f, 1);
  add("w_a", f, 1);
}

void ModelParams::Bind() {
  std::size_t i = 0;
  auto next = [&] { return &tensors_[i++]; };
  source_embed = next();
  target_embed = next();
  for (auto* stack : {&encoder_fw, &encoder_bw, &decoder}) {
    stack->assign(config_.layers, {});
    for (LstmParams& p : *stack) {
      p.w = next();
      p.b = next();
    }
  }
  w_alpha = next();
  b_alpha = next();
  w_beta = next();
  g_w1 = next();
  g_b1 = next();
  g_w2 = next();
  g_b2 = next();
  for (FfnnParams* f : {&ffnn_c, &ffnn_p, &ffnn_a}) {
    f->w1 = next();
    f->b1 = next();
    f->w2 = next();
    f->b2 = next();
  }
  w_c = next();
  w_p = next();
  w_a = next();
}

void ModelParams::InitRandom() {
  std::mt19937_64 rng(config_.seed);
  const std::size_t h = config_.hidden_dim;
  for (Tensor& t : tensors_) {
    const bool embed = &t == source_embed || &t == target_embed;
    const bool bias = t.cols == 1 && t.name != "w_c" && t.name != "w_p" &&
                      t.name != "w_a";
    // Embeddings get unit variance; matrices and projection vectors are
    // uniform in +-1/sqrt(fan_in).
    const double fan_in = static_cast<double>(t.cols == 1 ? t.rows : t.cols);
    const double r = embed ? std::sqrt(3.0) : 1.0 / std::sqrt(fan_in);
    for (double& v : t.value) {
      // 53 random bits mapped to [-r, r).
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v = bias ? 0.0 : r * (2.0 * u - 1.0);
    }
  }
  for (auto* stack : {&encoder_fw, &encoder_bw, &decoder}) {
    for (LstmParams& p : *stack) {
      std::fill_n(p.b->value.begin() + h, h, 1.0);
    }
  }
  ZeroGrad();
}

void ModelParams::ZeroGrad() {
  for (Tensor& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

std::size_t ModelParams::ParameterCount() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors_) n += t.size();
  return n;
}

void CheckExample(const TrainingExample& ex, const ModelConfig& config) {
  if (ex.x.empty()) throw InputError("example has an empty source");
  if (ex.a.size() != ex.y.size() || ex.is_head.size() != ex.y.size()) {
    throw InputError("example target, assignments and head flags differ in length");
  }
  for (int id : ex.x) {
    if (id < 0 || static_cast<std::size_t>(id) >= config.source_vocab) {
      throw InputError("source id " + std::to_string(id) + " out of range");
    }
  }
  for (int id : ex.y) {
    if (id < 0 || static_cast<std::size_t>(id) >= config.target_vocab) {
      throw InputError("target id " + std::to_string(id) + " out of range");
    }
  }
  for (std::size_t t = 0; t < ex.a.size(); ++t) {
    if (ex.a[t] && *ex.a[t] >= t) {
      throw InputError("assignment at step " + std::to_string(t) +
                       " is not a preceding position");
    }
  }
}

std::vector<std::size_t> CopyCandidates(const std::vector<bool>& is_head,
                                        std::size_t t) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < t && k < is_head.size(); ++k) {
    if (is_head[k]) out.push_back(k);
  }
  return out;
}

Graph::Graph(ModelParams& params, Tape& tape) : p_(params), tape_(tape) {}

NodeId Graph::LstmStep(const LstmParams& p, NodeId x, NodeId& h, NodeId& c) {
  const NodeId parts[] = {x, h};
  const NodeId z = tape_.Affine(p.w, p.b, tape_.Concat(parts));
  c = tape_.LstmCell(z, c);
  h = tape_.LstmHidden(z, c);
  return h;
}

const std::vector<NodeId>& Graph::Encode(const std::vector<int>& x) {
  const std::size_t n = x.size();
  const std::size_t hd = p_.config().hidden_dim;
  const std::size_t layers = p_.config().layers;
  std::vector<NodeId> inputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    inputs[i] = tape_.Lookup(p_.source_embed, static_cast<std::size_t>(x[i]));
  }
  std::vector<NodeId> fw = inputs;
  std::vector<NodeId> bw = inputs;
  dec_h_.assign(layers, -1);
  dec_c_.assign(layers, -1);
  for (std::size_t l = 0; l < layers; ++l) {
    NodeId h = tape_.Zeros(hd);
    NodeId c = tape_.Zeros(hd);
    for (std::size_t i = 0; i < n; ++i) {
      fw[i] = LstmStep(p_.encoder_fw[l], fw[i], h, c);
    }
    dec_h_[l] = h;
    dec_c_[l] = c;
    h = tape_.Zeros(hd);
    c = tape_.Zeros(hd);
    for (std::size_t i = n; i-- > 0;) {
      bw[i] = LstmStep(p_.encoder_bw[l], bw[i], h, c);
    }
  }
  enc_.resize(n);
  keys_alpha_.resize(n);
  keys_beta_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const NodeId parts[] = {fw[i], bw[i]};
    enc_[i] = tape_.Concat(parts);
    keys_alpha_[i] = tape_.Affine(p_.w_alpha, p_.b_alpha, enc_[i]);
    keys_beta_[i] = tape_.Affine(p_.w_beta, nullptr, enc_[i]);
  }
  gammas_.clear();
  fp_cache_.clear();
  return enc_;
}

NodeId Graph::Step(int prev) {
  NodeId in = tape_.Lookup(p_.target_embed, static_cast<std::size_t>(prev));
  for (std::size_t l = 0; l < p_.decoder.size(); ++l) {
    in = LstmStep(p_.decoder[l], in, dec_h_[l], dec_c_[l]);
  }
  return in;
}

NodeId Graph::GenerationContext(NodeId s) {
  last_alpha_ = tape_.Attention(s, keys_alpha_, enc_);
  return last_alpha_;
}

NodeId Graph::GenerationLogits(NodeId s, NodeId c) {
  const NodeId parts[] = {s, c};
  const NodeId hidden = tape_.Tanh(tape_.Affine(p_.g_w1, p_.g_b1, tape_.Concat(parts)));
  return tape_.Affine(p_.g_w2, p_.g_b2, hidden);
}

NodeId Graph::CopyContext(NodeId s) {
  last_beta_ = tape_.Attention(s, keys_beta_, enc_);
  return last_beta_;
}

NodeId Graph::Gamma(int token, NodeId o) {
  const NodeId parts[] = {
      tape_.Lookup(p_.target_embed, static_cast<std::size_t>(token)), o};
  return tape_.Concat(parts);
}

NodeId Graph::Ffnn(const FfnnParams& f, NodeId x) {
  const NodeId h1 = tape_.Tanh(tape_.Affine(f.w1, f.b1, x));
  return tape_.Tanh(tape_.Affine(f.w2, f.b2, h1));
}

NodeId Graph::CopyScores(NodeId gamma_t,
                         const std::vector<std::size_t>& candidates) {
  std::vector<NodeId> scores;
  scores.reserve(candidates.size() + 1);
  const double zero = 0.0;
  scores.push_back(tape_.Constant({&zero, 1}));
  if (!candidates.empty()) {
    const NodeId sc = tape_.DotParam(p_.w_c, Ffnn(p_.ffnn_c, gamma_t));
    fp_cache_.resize(gammas_.size(), -1);
    for (std::size_t k : candidates) {
      if (k >= gammas_.size()) {
        throw InputError("copy candidate has no representation yet");
      }
      if (fp_cache_[k] < 0) {
        fp_cache_[k] = tape_.DotParam(p_.w_p, Ffnn(p_.ffnn_p, gammas_[k]));
      }
      const NodeId gk = gammas_[k];
      const NodeId pair[] = {gamma_t, gk, tape_.Mul(gamma_t, gk)};
      const NodeId sa =
          tape_.DotParam(p_.w_a, Ffnn(p_.ffnn_a, tape_.Concat(pair)));
      const NodeId terms[] = {sc, fp_cache_[k], sa};
      scores.push_back(tape_.Sum(terms));
    }
  }
  return tape_.Stack(scores);
}

NodeId BuildLoss(ModelParams& params, Tape& tape, const TrainingExample& ex,
                 double mu) {
  CheckExample(ex, params.config());
  tape.Clear();
  Graph g(params, tape);
  g.Encode(ex.x);
  std::vector<NodeId> terms;
  int prev = kBosId;
  for (std::size_t t = 0; t < ex.y.size(); ++t) {
    const NodeId s = g.Step(prev);
    const NodeId logits = g.GenerationLogits(s, g.GenerationContext(s));
    terms.push_back(tape.NegLogSoftmaxPick(logits, ex.y[t]));
    if (mu != 0.0) {
      const NodeId gamma = g.Gamma(ex.y[t], g.CopyContext(s));
      const auto& a = ex.a[t];
      if (a && ex.is_head[*a]) {
        const auto cands = CopyCandidates(ex.is_head, t);
        const std::size_t idx =
            std::find(cands.begin(), cands.end(), *a) - cands.begin();
        const NodeId scores = g.CopyScores(gamma, cands);
        terms.push_back(tape.Scale(tape.NegLogSoftmaxPick(scores, idx + 1), mu));
      }
      g.RememberGamma(gamma);
    }
    prev = ex.y[t];
  }
  if (terms.empty()) {
    const double zero = 0.0;
    return tape.Constant({&zero, 1});
  }
  return tape.Sum(terms);
}

double SequenceNll(ModelParams& params, const TrainingExample& ex, double mu) {
  Tape tape;
  const NodeId root = BuildLoss(params, tape, ex, mu);
  const double v = tape.Value(root)[0];
  if (!std::isfinite(v)) throw NumericError("non-finite loss");
  return v;
}

std::vector<DecoderStep> ForwardSteps(ModelParams& params,
                                      const TrainingExample& ex) {
  CheckExample(ex, params.config());
  Tape tape;
  Graph g(params, tape);
  g.Encode(ex.x);
  std::vector<DecoderStep> steps;
  int prev = kBosId;
  for (std::size_t t = 0; t < ex.y.size(); ++t) {
    DecoderStep st;
    const NodeId s = g.Step(prev);
    const NodeId c = g.GenerationContext(s);
    const NodeId logits = g.GenerationLogits(s, c);
    const NodeId o = g.CopyContext(s);
    const NodeId gamma = g.Gamma(ex.y[t], o);
    st.s = ToVector(tape.Value(s));
    st.c = ToVector(tape.Value(c));
    st.o = ToVector(tape.Value(o));
    st.gamma = ToVector(tape.Value(gamma));
    st.p_gen = Softmax(tape.Value(logits));
    st.alpha = ToVector(tape.AttentionWeights(g.last_alpha_node()));
    st.beta = ToVector(tape.AttentionWeights(g.last_beta_node()));
    st.candidates = CopyCandidates(ex.is_head, t);
    st.p_copy = Softmax(tape.Value(g.CopyScores(gamma, st.candidates)));
    g.RememberGamma(gamma);
    steps.push_back(std::move(st));
    prev = ex.y[t];
  }
  return steps;
}

std::vector<Assignment> ForcedCopy(ModelParams& params,
                                   const TrainingExample& ex) {
  CheckExample(ex, params.config());
  Tape tape;
  Graph g(params, tape);
  g.Encode(ex.x);
  std::vector<Assignment> out(ex.y.size());
  int prev = kBosId;
  for (std::size_t t = 0; t < ex.y.size(); ++t) {
    const NodeId s = g.Step(prev);
    const NodeId gamma = g.Gamma(ex.y[t], g.CopyContext(s));
    if (ex.y[t] == kBulletId) {
      const auto cands = CopyCandidates(ex.is_head, t);
      if (!cands.empty()) {
        const auto scores = tape.Value(g.CopyScores(gamma, cands));
        out[t] = cands[ArgMax(scores, 1) - 1];
      }
    }
    g.RememberGamma(gamma);
    prev = ex.y[t];
  }
  return out;
}

Decoded GreedyDecode(ModelParams& params, const std::vector<int>& x,
                     std::size_t max_len, const std::vector<bool>& head_ids,
                     bool keep_steps) {
  Decoded out;
  if (max_len == 0) return out;
  TrainingExample probe;
  probe.x = x;
  CheckExample(probe, params.config());
  if (head_ids.size() != params.config().target_vocab) {
    throw InputError("head flags do not cover the target vocabulary");
  }
  Tape tape;
  Graph g(params, tape);
  g.Encode(x);
  std::vector<bool> is_head;
  int prev = kBosId;
  for (std::size_t t = 0; t < max_len; ++t) {
    const NodeId s = g.Step(prev);
    const NodeId c = g.GenerationContext(s);
    const NodeId logits = g.GenerationLogits(s, c);
    // Copied: later nodes may move the tape's storage.
    const std::vector<double> lv = ToVector(tape.Value(logits));
    const int y = static_cast<int>(ArgMax(lv));
    const NodeId o = g.CopyContext(s);
    const NodeId gamma = g.Gamma(y, o);
    Assignment a;
    DecoderStep st;
    if (y == kBulletId || keep_steps) {
      const auto cands = CopyCandidates(is_head, t);
      const auto scores = tape.Value(g.CopyScores(gamma, cands));
      if (y == kBulletId && !cands.empty()) {
        a = cands[ArgMax(scores, 1) - 1];
      }
      if (keep_steps) {
        st.candidates = cands;
        st.p_copy = Softmax(scores);
      }
    }
    if (keep_steps) {
      st.s = ToVector(tape.Value(s));
      st.c = ToVector(tape.Value(c));
      st.o = ToVector(tape.Value(o));
      st.gamma = ToVector(tape.Value(gamma));
      st.p_gen = Softmax(lv);
      st.alpha = ToVector(tape.AttentionWeights(g.last_alpha_node()));
      st.beta = ToVector(tape.AttentionWeights(g.last_beta_node()));
      out.steps.push_back(std::move(st));
    }
    g.RememberGamma(gamma);
    out.y.push_back(y);
    out.a.push_back(a);
    is_head.push_back(head_ids[y]);
    prev = y;
    if (y == kEosId) break;
  }
  return out;
}

}  // namespace xsem::kernel
