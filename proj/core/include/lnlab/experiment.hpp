// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LNLAB_EXPERIMENT_HPP_
#define LNLAB_EXPERIMENT_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lnlab/classifier.hpp"
#include "lnlab/config.hpp"
#include "lnlab/data.hpp"
#include "lnlab/noise_model.hpp"
#include "lnlab/risk.hpp"
#include "lnlab/trainer.hpp"

namespace lnlab {

struct MethodChoice {
  Method method = Method::kCrossEntropy;
  bool vrnl = false;
  std::string name;  // ce, forward, forward-vrnl, reweight, reweight-vrnl, volmin, volmin-vrnl
};

MethodChoice parse_method(std::string_view name);

/// Typed view of a Config with every "auto" value resolved.
struct ExperimentConfig {
  std::string dataset = "synthetic";  // synthetic | mnist
  int classes = 3;
  int dim = 2;
  int n = 3000;
  int n_test = 3000;
  double radius = 2.0;
  double sigma = 1.0;
  int anchors_per_class = 1;
  std::string mnist_dir = "data/mnist";
  int mnist_subsample = 10000;
  double val_fraction = 0.1;

  NoiseKind noise = NoiseKind::kSymmetric;
  double noise_rate = 0.2;

  MethodChoice method;
  RiskSpec risk;
  std::optional<double> alpha_explicit;  // empty when alpha = auto
  std::string transition = "estimate";  // estimate | true
  std::string transition_file;
  double percentile = 97.0;
  int warmup_epochs = 20;
  std::vector<int> hidden;

  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  bool deterministic = true;
  int save_every = 0;

  std::vector<double> gammas;
  std::vector<std::string> sweep_methods;
  std::vector<std::uint64_t> seeds;
  std::string checkpoint;

  static ExperimentConfig from(const Config& config);
  /// Config holding the resolved values; feeding it back reproduces the run.
  Config resolved() const;
  /// Copy with a different seed (optimizer seed follows).
  ExperimentConfig with_seed(std::uint64_t s) const;
  ExperimentConfig with_method(std::string_view name) const;
};

/// Defaults: 0.1 for Forward/Reweight (0.01 on pair noise), 0.05 for
/// VolMin (0.005 on MNIST pair noise); 0 for methods without the regularizer.
double default_alpha(const MethodChoice& method, NoiseKind noise, std::string_view dataset);

struct PreparedData {
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;
  TransitionMatrix true_transition = TransitionMatrix::identity(2);
};

/// Builds (or loads), corrupts, splits and normalizes the data for one seed.
PreparedData prepare_data(const ExperimentConfig& cfg);
/// The corrupted pool before splitting.
LabeledDataset corrupted_pool(const ExperimentConfig& cfg, TransitionMatrix* t = nullptr);

/// Plain cross-entropy model trained for warmup_epochs; its softmax output is
/// used for anchor estimation and importance ratios.
class WarmupCache {
 public:
  const MlpParams& get(const ExperimentConfig& cfg, const PreparedData& data);

 private:
  std::optional<MlpParams> params_;
};

std::vector<int> network_widths(const ExperimentConfig& cfg, int input_dim);

struct RunOutcome {
  TrainResult result;
  std::optional<TransitionMatrix> transition;  // matrix handed to the method
  std::optional<double> eps_t;                 // its error against the true matrix
  double wall_seconds = 0.0;
};

/// Runs the configured method end to end. `transition_override` replaces the
/// estimated or true matrix for Forward and Reweight.
RunOutcome run_method(const ExperimentConfig& cfg, const PreparedData& data, WarmupCache& warmup,
                      const std::optional<TransitionMatrix>& transition_override = std::nullopt,
                      const EpochCallback& on_epoch = {});

struct SweepRow {
  std::string method;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  double eps_t = 0.0;
  double test_acc = 0.0;
};

/// For each seed, gamma and method: perturb the true matrix with one fixed
/// |Delta| draw per seed, train, record best-checkpoint test accuracy.
/// Rows are sorted by (method, gamma, seed).
std::vector<SweepRow> bias_sweep(const ExperimentConfig& cfg);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

// Commands write their artifacts into out_dir (created when missing).
void cmd_corrupt(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_bias_sweep(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_diagnose(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace lnlab

#endif  // LNLAB_EXPERIMENT_HPP_
