#pragma once

// Training and gradient verification for the copy model.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xsem/kernel/model.h"

namespace xsem::kernel {

struct TrainConfig {
  std::size_t batch_size = 16;
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;  // global gradient norm; 0 disables clipping
  std::size_t patience = 3;
  std::size_t max_pretrain_epochs = 1;  // cap on the mu = 0 phase
  std::size_t max_epochs = 25;          // cap on all epochs together
  // Train a single phase at this mu instead of the mu = 0 then mu = 1
  // schedule.
  std::optional<double> fixed_mu;
  // Stop once the mean training loss of an epoch falls below this value.
  std::optional<double> stop_below;
  std::uint64_t seed = 1;  // shuffling; initialization uses ModelConfig::seed
};

struct EpochLog {
  std::size_t epoch = 0;
  double mu = 0.0;
  double train_loss = 0.0;       // mean over the epoch's examples
  double validation_loss = 0.0;  // mean, at the epoch's mu; NaN if no data
};

struct TrainResult {
  ModelParams params;  // best validation loss of the final phase
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

// Throws xsem::Error (input) on an empty training set or an invalid example,
// and (numeric) when a loss becomes non-finite.
TrainResult Train(const ModelConfig& model,
                  std::span<const TrainingExample> train,
                  std::span<const TrainingExample> validation,
                  const TrainConfig& config,
                  const std::function<void(const EpochLog&, ModelParams&)>& on_epoch = {});

double MeanLoss(ModelParams& params, std::span<const TrainingExample> data,
                double mu);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// Compares the analytic gradient of the example loss with central
// differences (L(theta + eps) - L(theta - eps)) / 2 eps for every parameter.
// The relative error is |a - n| / max(|a|, |n|, 1e-5); the floor keeps
// rounding noise on near-zero gradients from counting. Throws xsem::Error
// (input) unless eps_fd > 0, and (numeric) on a non-finite loss.
GradCheckResult GradCheck(ModelParams& params, const TrainingExample& ex,
                          double mu, double eps_fd = 1e-4);

}  // namespace xsem::kernel
