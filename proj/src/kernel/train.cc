#include "xsem/kernel/train.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "xsem/error.h"
#include "xsem/rng.h"

namespace xsem::kernel {
namespace {

class Adam {
 public:
  Adam(const ModelParams& params, const TrainConfig& c) : c_(c) {
    for (const Tensor& t : params.tensors()) {
      m_.emplace_back(t.size(), 0.0);
      v_.emplace_back(t.size(), 0.0);
    }
  }

  void Update(ModelParams& params) {
    ++steps_;
    const double b1t = 1.0 - std::pow(c_.beta1, static_cast<double>(steps_));
    const double b2t = 1.0 - std::pow(c_.beta2, static_cast<double>(steps_));
    auto& tensors = params.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      Tensor& t = tensors[i];
      for (std::size_t k = 0; k < t.size(); ++k) {
        const double g = t.grad[k];
        m_[i][k] = c_.beta1 * m_[i][k] + (1.0 - c_.beta1) * g;
        v_[i][k] = c_.beta2 * v_[i][k] + (1.0 - c_.beta2) * g * g;
        t.value[k] -= c_.learning_rate * (m_[i][k] / b1t) /
                      (std::sqrt(v_[i][k] / b2t) + c_.adam_eps);
      }
    }
  }

 private:
  const TrainConfig& c_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t steps_ = 0;
};

void ScaleAndClip(ModelParams& params, double scale, double clip) {
  double norm2 = 0.0;
  for (Tensor& t : params.tensors()) {
    for (double& g : t.grad) {
      g *= scale;
      norm2 += g * g;
    }
  }
  const double norm = std::sqrt(norm2);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient");
  if (clip > 0.0 && norm > clip) {
    const double f = clip / norm;
    for (Tensor& t : params.tensors()) {
      for (double& g : t.grad) g *= f;
    }
  }
}

void CheckTrainConfig(const TrainConfig& c) {
  if (c.batch_size == 0) throw InputError("batch size must be at least 1");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    throw InputError("learning rate must be positive");
  }
  if (c.fixed_mu && (!std::isfinite(*c.fixed_mu) || *c.fixed_mu < 0.0)) {
    throw InputError("mu must be finite and nonnegative");
  }
}

}  // namespace

double MeanLoss(ModelParams& params, std::span<const TrainingExample> data,
                double mu) {
  if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  Tape tape;
  for (const TrainingExample& ex : data) {
    const double v = tape.Value(BuildLoss(params, tape, ex, mu))[0];
    if (!std::isfinite(v)) throw NumericError("non-finite loss");
    total += v;
  }
  return total / static_cast<double>(data.size());
}

TrainResult Train(const ModelConfig& model,
                  std::span<const TrainingExample> train,
                  std::span<const TrainingExample> validation,
                  const TrainConfig& config,
                  const std::function<void(const EpochLog&, ModelParams&)>& on_epoch) {
  CheckTrainConfig(config);
  if (train.empty()) throw InputError("empty training set");
  ModelParams params(model);
  for (const auto& ex : train) CheckExample(ex, model);
  for (const auto& ex : validation) CheckExample(ex, model);
  params.InitRandom();

  struct Phase {
    double mu;
    std::size_t cap;
  };
  std::vector<Phase> phases;
  if (config.fixed_mu) {
    phases.push_back({*config.fixed_mu, config.max_epochs});
  } else {
    phases.push_back({0.0, std::min(config.max_pretrain_epochs, config.max_epochs)});
    phases.push_back({model.mu, config.max_epochs});
  }

  TrainResult result{params, {}, 0};
  Adam adam(params, config);
  Tape tape;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t epoch = 0;
  for (std::size_t ph = 0; ph < phases.size(); ++ph) {
    const double mu = phases[ph].mu;
    const bool last = ph + 1 == phases.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    bool stop = false;
    while (epoch < phases[ph].cap && !stop) {
      ++epoch;
      std::mt19937_64 rng(MixSeed(config.seed, epoch));
      std::shuffle(order.begin(), order.end(), rng);
      double total = 0.0;
      for (std::size_t start = 0; start < order.size();
           start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        params.ZeroGrad();
        for (std::size_t i = start; i < end; ++i) {
          const NodeId root = BuildLoss(params, tape, train[order[i]], mu);
          const double v = tape.Value(root)[0];
          if (!std::isfinite(v)) throw NumericError("non-finite loss");
          total += v;
          tape.Backward(root);
        }
        ScaleAndClip(params, 1.0 / static_cast<double>(end - start),
                     config.clip_norm);
        adam.Update(params);
      }
      EpochLog log;
      log.epoch = epoch;
      log.mu = mu;
      log.train_loss = total / static_cast<double>(train.size());
      log.validation_loss = MeanLoss(params, validation, mu);
      result.log.push_back(log);
      if (on_epoch) on_epoch(log, params);

      const double score =
          validation.empty() ? log.train_loss : log.validation_loss;
      if (score < best) {
        best = score;
        stale = 0;
        if (last) {
          result.params = params;
          result.best_epoch = epoch;
        }
      } else if (++stale >= config.patience) {
        stop = true;
      }
      if (config.stop_below && log.train_loss < *config.stop_below) {
        if (last) {
          result.params = params;
          result.best_epoch = epoch;
        }
        stop = true;
      }
    }
  }
  if (result.best_epoch == 0) {
    result.params = params;
    result.best_epoch = epoch;
  }
  result.params.ZeroGrad();
  return result;
}

GradCheckResult GradCheck(ModelParams& params, const TrainingExample& ex,
                          double mu, double eps_fd) {
  if (!(eps_fd > 0.0) || !std::isfinite(eps_fd)) {
    throw InputError("finite-difference step must be positive");
  }
  Tape tape;
  params.ZeroGrad();
  const NodeId root = BuildLoss(params, tape, ex, mu);
  if (!std::isfinite(tape.Value(root)[0])) throw NumericError("non-finite loss");
  tape.Backward(root);
  std::vector<std::vector<double>> analytic;
  for (const Tensor& t : params.tensors()) analytic.push_back(t.grad);
  params.ZeroGrad();

  auto loss = [&] {
    const double v = tape.Value(BuildLoss(params, tape, ex, mu))[0];
    if (!std::isfinite(v)) throw NumericError("non-finite loss");
    return v;
  };
  GradCheckResult r;
  auto& tensors = params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Tensor& t = tensors[i];
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double saved = t.value[k];
      t.value[k] = saved + eps_fd;
      const double up = loss();
      t.value[k] = saved - eps_fd;
      const double down = loss();
      t.value[k] = saved;
      const double n = (up - down) / (2.0 * eps_fd);
      const double a = analytic[i][k];
      const double rel =
          std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-5});
      ++r.checked;
      if (rel > r.max_rel_error || r.worst_tensor.empty()) {
        r.max_rel_error = std::max(r.max_rel_error, rel);
        r.worst_tensor = t.name;
        r.worst_index = k;
        r.analytic = a;
        r.numeric = n;
      }
    }
  }
  return r;
}

}  // namespace xsem::kernel
