#pragma once

// Copy-enabled encoder-decoder.
//
//   encoder   h_i = [forward_i ; backward_i], two stacked LSTMs read the
//             source in opposite directions from zero states
//   decoder   stacked LSTM over e(y_{t-1}); every layer starts from the final
//             state of the matching forward encoder layer; s_t is the top
//             hidden state
//   generate  alpha_ti = softmax_i(s_t . (W_alpha h_i + b_alpha)),
//             c_t = sum alpha_ti h_i, P_g = softmax(FFNN_g([s_t ; c_t]))
//   copy      beta_ti = softmax_i(s_t . W_beta h_i), o_t = sum beta_ti h_i,
//             gamma_t = [e(y_t) ; o_t],
//             score(t, k) = w_c . FFNN_c(gamma_t) + w_p . FFNN_p(gamma_k)
//                           + w_a . FFNN_a([gamma_t ; gamma_k ;
//                                           gamma_t * gamma_k]),
//             P_c = softmax over {epsilon} + candidates, epsilon scoring 0
//
// FFNN_g has one tanh layer followed by a linear map to the target
// vocabulary; FFNN_c, FFNN_p and FFNN_a have two tanh layers.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "xsem/kernel/tape.h"
#include "xsem/linear.h"

namespace xsem::kernel {

struct ModelConfig {
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t layers = 1;
  std::size_t ffnn_dim = 32;  // width of every feed-forward hidden layer
  double mu = 1.0;
  std::uint64_t seed = 1;
};

// Throws xsem::Error (input) when a dimension is zero.
void CheckConfig(const ModelConfig& c);

struct LstmParams {
  Tensor* w = nullptr;  // 4H x (input + H), gates ordered i, f, g, o
  Tensor* b = nullptr;  // 4H
};

struct FfnnParams {
  Tensor* w1 = nullptr;
  Tensor* b1 = nullptr;
  Tensor* w2 = nullptr;
  Tensor* b2 = nullptr;
};

class ModelParams {
 public:
  // Allocates every tensor for `config`, all zero.
  explicit ModelParams(const ModelConfig& config);
  ModelParams(const ModelParams& other);
  ModelParams& operator=(const ModelParams& other);

  // Seeded from config.seed: embeddings uniform with unit variance, other
  // weights uniform in +-1/sqrt(fan_in), biases zero except the LSTM forget
  // gates, which start at 1.
  void InitRandom();
  void ZeroGrad();

  const ModelConfig& config() const { return config_; }
  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::size_t ParameterCount() const;

  Tensor* source_embed = nullptr;
  Tensor* target_embed = nullptr;
  std::vector<LstmParams> encoder_fw;
  std::vector<LstmParams> encoder_bw;
  std::vector<LstmParams> decoder;
  Tensor* w_alpha = nullptr;
  Tensor* b_alpha = nullptr;
  Tensor* w_beta = nullptr;
  Tensor* g_w1 = nullptr;  // FFNN_g hidden layer
  Tensor* g_b1 = nullptr;
  Tensor* g_w2 = nullptr;  // FFNN_g output layer
  Tensor* g_b2 = nullptr;
  FfnnParams ffnn_c;
  FfnnParams ffnn_p;
  FfnnParams ffnn_a;
  Tensor* w_c = nullptr;
  Tensor* w_p = nullptr;
  Tensor* w_a = nullptr;

 private:
  void Build();
  void Bind();

  ModelConfig config_;
  std::vector<Tensor> tensors_;
};

// Token ids of one example. `y` ends with the end symbol; `a` is parallel to
// `y`; `is_head[k]` tells whether y_k is a head word (a copy candidate).
struct TrainingExample {
  std::vector<int> x;
  std::vector<int> y;
  std::vector<Assignment> a;
  std::vector<bool> is_head;
};

// Special target ids shared by every vocabulary built by this module.
inline constexpr int kBosId = 0;
inline constexpr int kEosId = 1;
inline constexpr int kBulletId = 2;

// Throws xsem::Error (input) when an assignment lies outside {epsilon} and
// the preceding positions, or ids are out of range.
void CheckExample(const TrainingExample& ex, const ModelConfig& config);

// Decoder state of one step, exposed for inspection.
struct DecoderStep {
  std::vector<double> s;      // top decoder hidden state
  std::vector<double> c;      // generation context
  std::vector<double> o;      // copy context
  std::vector<double> gamma;  // [e(y_t) ; o_t]
  std::vector<double> p_gen;  // distribution over the target vocabulary
  std::vector<double> alpha;
  std::vector<double> beta;
  // P_c over [epsilon, candidates...] and the candidate positions.
  std::vector<double> p_copy;
  std::vector<std::size_t> candidates;
};

// Builds the computation for one example on `tape`.
class Graph {
 public:
  Graph(ModelParams& params, Tape& tape);

  // Encoder states h_1..h_N (node ids on the tape).
  const std::vector<NodeId>& Encode(const std::vector<int>& x);

  // Advances the decoder with input token `prev` and returns s_t.
  NodeId Step(int prev);
  NodeId GenerationContext(NodeId s);  // c_t
  NodeId GenerationLogits(NodeId s, NodeId c);
  NodeId CopyContext(NodeId s);  // o_t
  NodeId Gamma(int token, NodeId o);
  // Scores of [epsilon, candidates...] for the current gamma.
  NodeId CopyScores(NodeId gamma_t, const std::vector<std::size_t>& candidates);
  void RememberGamma(NodeId gamma) { gammas_.push_back(gamma); }

  NodeId last_alpha_node() const { return last_alpha_; }
  NodeId last_beta_node() const { return last_beta_; }

 private:
  NodeId Ffnn(const FfnnParams& f, NodeId x);
  NodeId LstmStep(const LstmParams& p, NodeId x, NodeId& h, NodeId& c);

  ModelParams& p_;
  Tape& tape_;
  std::vector<NodeId> enc_;
  std::vector<NodeId> keys_alpha_;
  std::vector<NodeId> keys_beta_;
  std::vector<NodeId> dec_h_;
  std::vector<NodeId> dec_c_;
  std::vector<NodeId> gammas_;
  std::vector<NodeId> fp_cache_;
  NodeId last_alpha_ = -1;
  NodeId last_beta_ = -1;
};

// Copy candidates at step t: earlier positions holding head words.
std::vector<std::size_t> CopyCandidates(const std::vector<bool>& is_head,
                                        std::size_t t);

// Negative log-likelihood of one example on a fresh tape:
//   sum_t -log P_g(y_t)  +  mu * sum over bullet steps whose antecedent is a
//   head word of -log P_c(a_t).
// Returns the root node; the loss value is tape.Value(root)[0].
NodeId BuildLoss(ModelParams& params, Tape& tape, const TrainingExample& ex,
                 double mu);

double SequenceNll(ModelParams& params, const TrainingExample& ex, double mu);

// Teacher-forced pass that reports every step.
std::vector<DecoderStep> ForwardSteps(ModelParams& params,
                                      const TrainingExample& ex);

// Forced decoding: the target is fixed to ex.y and every bullet step gets
// the most probable non-epsilon candidate (epsilon if there is none).
std::vector<Assignment> ForcedCopy(ModelParams& params,
                                   const TrainingExample& ex);

struct Decoded {
  std::vector<int> y;
  std::vector<Assignment> a;
  std::vector<DecoderStep> steps;
};

// Greedy decoding up to max_len tokens; stops after the end symbol.
// `head_ids[id]` tells whether target id `id` is a head word.
Decoded GreedyDecode(ModelParams& params, const std::vector<int>& x,
                     std::size_t max_len, const std::vector<bool>& head_ids,
                     bool keep_steps = false);

}  // namespace xsem::kernel
