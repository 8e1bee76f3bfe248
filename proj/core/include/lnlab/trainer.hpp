// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LNLAB_TRAINER_HPP_
#define LNLAB_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lnlab/classifier.hpp"
#include "lnlab/data.hpp"
#include "lnlab/noise_model.hpp"
#include "lnlab/risk.hpp"

namespace lnlab {

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int epoch) : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

struct OptimizerConfig {
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 128;
  int epochs = 80;
  std::vector<int> lr_drops{30, 60};
  double drop_factor = 10.0;
  std::uint64_t seed = 1;

  void validate() const;
  /// Learning rate in effect during `epoch` (0-based).
  double learning_rate_at(int epoch) const;
};

struct SgdHyper {
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double weight_decay = 0.0;
};

/// Classical momentum: v <- m v + (g + wd p); p <- p - lr v.
/// Throws NumericError if any updated parameter is non-finite.
void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              const SgdHyper& hyper);

struct SgdState {
  GradientBuffer velocity;
};
void sgd_step(MlpParams& params, const GradientBuffer& grads, SgdState& state, const SgdHyper& hyper);

/// Loss summary split by whether the observed label is the clean one.
struct LossSplit {
  std::optional<double> mean_correct;
  std::optional<double> mean_incorrect;
  double variance = 0.0;  // population variance over all examples
  double mean = 0.0;
};

LossSplit split_losses(std::span<const double> losses, const std::vector<bool>& correct);

/// Per-example losses of `head` on `data` (times `scale` when given), split by
/// label correctness. Read-only with respect to `params`.
LossSplit diagnostics_pass(const MlpParams& params, const LabeledDataset& data, const LossHead& head,
                           std::span<const double> scale = {});

double accuracy(const MlpParams& params, const LabeledDataset& data);

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  std::optional<double> loss_correct;
  std::optional<double> loss_incorrect;
  double loss_var = 0.0;
  size_t clamp_count = 0;
  std::optional<double> ce_loss_correct;
  std::optional<double> ce_loss_incorrect;
  std::optional<double> eps_t;
};

struct TrainReport {
  std::vector<EpochRow> rows;
  int best_epoch = -1;
  double best_val_acc = 0.0;
  double best_test_acc = 0.0;
};

/// CSV columns: epoch,train_loss,val_acc,test_acc,loss_correct,loss_incorrect,
/// loss_var,clamp_count,ce_loss_correct,ce_loss_incorrect,eps_t.
/// Absent values are left empty.
void write_report_csv(std::ostream& os, const TrainReport& report);

struct TrainingData {
  const LabeledDataset& train;
  const LabeledDataset& val;
  const LabeledDataset& test;
};

struct MethodInputs {
  std::optional<TransitionMatrix> transition;        // Forward and Reweight
  std::vector<double> betas;                         // Reweight, one per training example
  std::optional<TransitionMatrix> true_transition;   // enables the eps_t column
  std::optional<TrainableTransition> initial_volmin; // VolMin; near-identity when empty
};

struct TrainResult {
  TrainReport report;
  MlpParams best_params;
  MlpParams final_params;
  std::optional<TransitionMatrix> learned_transition;  // VolMin, at the best epoch
};

using EpochCallback = std::function<void(int epoch, const MlpParams& params)>;

/// Runs the full schedule. Per-epoch diagnostics use the training split and
/// never update parameters; the best checkpoint maximizes noisy validation accuracy.
TrainResult train(const RiskSpec& risk, const TrainingData& data, MlpParams init, const OptimizerConfig& cfg,
                  const MethodInputs& inputs = {}, const EpochCallback& on_epoch = {});

}  // namespace lnlab

#endif  // LNLAB_TRAINER_HPP_
