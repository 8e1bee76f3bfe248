// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LNLAB_RISK_HPP_
#define LNLAB_RISK_HPP_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lnlab/classifier.hpp"
#include "lnlab/noise_model.hpp"
#include "lnlab/numerics.hpp"

namespace lnlab {

enum class Method { kCrossEntropy, kForward, kReweight, kVolMin };
enum class MeanMode { kBatch, kRunningEpoch };

std::string to_string(Method method);
std::string to_string(MeanMode mode);
MeanMode parse_mean_mode(std::string_view name);

struct RiskSpec {
  Method method = Method::kCrossEntropy;
  double alpha = 0.0;         // strength of the variance-increasing term
  double lambda = 1e-4;       // log-det weight, VolMin only
  MeanMode mean_mode = MeanMode::kBatch;
  double weight_floor = 0.0;  // gradient weights below this are clamped and counted

  void validate() const;
};

/// mean(l) - alpha * (mean(l^2) - mean(l)^2), biased variance.
double vrnl_empirical_risk(std::span<const double> losses, double alpha);

struct GradientWeights {
  std::vector<double> weights;
  size_t clamped = 0;
};

/// w_i = 1 + 2 alpha (reference_mean - l_i), clamped below at `floor`.
GradientWeights eq2_weights(std::span<const double> losses, double alpha, double reference_mean,
                            double floor = 0.0);
/// Same with the batch mean as reference.
GradientWeights eq2_weights_batch_mean(std::span<const double> losses, double alpha, double floor = 0.0);

/// Supplies the reference mean used by eq2_weights.
///
/// kBatch returns the batch mean. kRunningEpoch returns an exponential moving
/// average of batch means (decay 0.9), seeded by the first batch after reset().
class LossMeanTracker {
 public:
  explicit LossMeanTracker(MeanMode mode, double decay = 0.9) : mode_(mode), decay_(decay) {}

  double update(std::span<const double> losses);
  void reset() { average_.reset(); }

 private:
  MeanMode mode_;
  double decay_;
  std::optional<double> average_;
};

/// Cross-entropy on T p.
LossHead forward_loss_head(const TransitionMatrix& t);

/// Frozen model whose softmax output g(x) is used for importance ratios.
class PosteriorSnapshot {
 public:
  explicit PosteriorSnapshot(std::function<Matrix(const Matrix&)> predict) : predict_(std::move(predict)) {}
  static PosteriorSnapshot from_model(MlpParams params);

  Matrix predict(const Matrix& features) const { return predict_(features); }

 private:
  std::function<Matrix(const Matrix&)> predict_;
};

struct ReweightFactors {
  std::vector<double> betas;
  size_t clamped = 0;  // denominators raised to the 1e-12 floor
};

/// beta_i = g_y(x_i) / (T g(x_i))_y.
ReweightFactors reweight_factors(const Matrix& posteriors, const TransitionMatrix& t,
                                 std::span<const int> labels);
ReweightFactors reweight_factors(const PosteriorSnapshot& g, const TransitionMatrix& t,
                                 const Matrix& features, std::span<const int> labels);

struct ReweightRisk {
  double risk = 0.0;
  std::vector<double> weights;  // applied to the gradient of beta_i * l_i
  size_t clamped = 0;
};

/// Variance-increasing risk on the products beta_i l_i.
ReweightRisk reweight_vrnl_risk(std::span<const double> losses, std::span<const double> betas,
                                double alpha, std::optional<double> reference_mean = std::nullopt,
                                double floor = 0.0);

/// Diagonally dominant column-stochastic matrix with free off-diagonal logits.
///
/// Off-diagonal entries are sigmoid(u_ij) / C, so each lies in (0, 1/C) and the
/// diagonal 1 - sum of the column's off-diagonals stays above 1/C.
class TrainableTransition {
 public:
  explicit TrainableTransition(Matrix logits);
  static TrainableTransition near_identity(int classes, double init = -4.0);

  int classes() const { return static_cast<int>(logits_.rows()); }
  /// C x C logits; diagonal entries are ignored and kept at zero.
  const Matrix& logits() const { return logits_; }
  Matrix& logits() { return logits_; }

  Matrix realize() const;
  /// Maps dL/dT to dL/du through the parameterization. Diagonal of the result is zero.
  Matrix chain_gradient(const Matrix& dtransition) const;

 private:
  Matrix logits_;
};

struct WeightingOptions {
  double alpha = 0.0;
  std::optional<double> reference_mean;  // takes precedence over `tracker`
  LossMeanTracker* tracker = nullptr;    // batch mean when both are empty
  double floor = 0.0;
};

struct ObjectiveResult {
  double value = 0.0;
  std::vector<double> losses;  // per-example losses the variance term sees
  GradientBuffer theta_grad;
  Matrix transition_grad;      // d/du for VolMin, empty otherwise
  size_t clamped = 0;
  double reference_mean = 0.0;
};

/// mean CE(p) - alpha Var(CE).
ObjectiveResult ce_vrnl_objective(const MlpParams& params, const Matrix& features,
                                  std::span<const int> labels, const WeightingOptions& w);
/// mean CE(T p) - alpha Var(CE(T p)) with T fixed.
ObjectiveResult forward_vrnl_objective(const MlpParams& params, const Matrix& features,
                                       std::span<const int> labels, const TransitionMatrix& t,
                                       const WeightingOptions& w);
/// mean(beta CE(p)) - alpha Var(beta CE(p)); beta is constant.
ObjectiveResult reweight_vrnl_objective(const MlpParams& params, const Matrix& features,
                                        std::span<const int> labels, std::span<const double> betas,
                                        const WeightingOptions& w);
/// mean CE(T(u) p) + lambda log|det T(u)| - alpha Var(CE).
///
/// The theta gradient carries the variance weights; the u gradient is the
/// plain gradient of mean CE + lambda log det.
ObjectiveResult volmin_vrnl_objective(const MlpParams& params, const TrainableTransition& tt,
                                      const Matrix& features, std::span<const int> labels,
                                      const WeightingOptions& w, double lambda);

}  // namespace lnlab

#endif  // LNLAB_RISK_HPP_
