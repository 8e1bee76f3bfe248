// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "lnlab/risk.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lnlab {

std::string to_string(Method method) {
  switch (method) {
    case Method::kCrossEntropy: return "ce";
    case Method::kForward: return "forward";
    case Method::kReweight: return "reweight";
    case Method::kVolMin: return "volmin";
  }
  return "unknown";
}

std::string to_string(MeanMode mode) {
  return mode == MeanMode::kBatch ? "batch" : "running";
}

MeanMode parse_mean_mode(std::string_view name) {
  if (name == "batch") return MeanMode::kBatch;
  if (name == "running" || name == "running-epoch") return MeanMode::kRunningEpoch;
  throw std::invalid_argument("unknown mean mode '" + std::string(name) + "'");
}

void RiskSpec::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite and >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
  if (!std::isfinite(weight_floor)) throw std::invalid_argument("weight floor must be finite");
}

double vrnl_empirical_risk(std::span<const double> losses, double alpha) {
  if (losses.empty()) throw std::invalid_argument("vrnl_empirical_risk: empty loss vector");
  require_finite(losses, "vrnl_empirical_risk");
  const double n = static_cast<double>(losses.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double l : losses) {
    sum += l;
    sum_sq += l * l;
  }
  const double mean = sum / n;
  return mean - alpha * (sum_sq / n - mean * mean);
}

GradientWeights eq2_weights(std::span<const double> losses, double alpha, double reference_mean,
                            double floor) {
  GradientWeights out;
  out.weights.resize(losses.size());
  for (size_t i = 0; i < losses.size(); ++i) {
    double w = 1.0 + 2.0 * alpha * (reference_mean - losses[i]);
    if (w < floor) {
      w = floor;
      ++out.clamped;
    }
    out.weights[i] = w;
  }
  return out;
}

GradientWeights eq2_weights_batch_mean(std::span<const double> losses, double alpha, double floor) {
  if (losses.empty()) return {};
  double sum = 0.0;
  for (double l : losses) sum += l;
  return eq2_weights(losses, alpha, sum / static_cast<double>(losses.size()), floor);
}

double LossMeanTracker::update(std::span<const double> losses) {
  if (losses.empty()) throw std::invalid_argument("LossMeanTracker: empty batch");
  double sum = 0.0;
  for (double l : losses) sum += l;
  const double batch_mean = sum / static_cast<double>(losses.size());
  if (mode_ == MeanMode::kBatch) return batch_mean;
  average_ = average_ ? decay_ * *average_ + (1.0 - decay_) * batch_mean : batch_mean;
  return *average_;
}

LossHead forward_loss_head(const TransitionMatrix& t) { return LossHead::forward_corrected(t.matrix()); }

PosteriorSnapshot PosteriorSnapshot::from_model(MlpParams params) {
  return PosteriorSnapshot([p = std::move(params)](const Matrix& x) { return predict_probs(p, x); });
}

ReweightFactors reweight_factors(const Matrix& posteriors, const TransitionMatrix& t,
                                 std::span<const int> labels) {
  if (static_cast<size_t>(posteriors.rows()) != labels.size()) {
    throw std::invalid_argument("reweight_factors: label count does not match posteriors");
  }
  if (posteriors.cols() != t.classes()) throw std::invalid_argument("reweight_factors: class mismatch");
  ReweightFactors out;
  out.betas.resize(labels.size());
  const Matrix& m = t.matrix();
  for (size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= t.classes()) throw std::invalid_argument("reweight_factors: label out of range");
    const auto row = posteriors.row(static_cast<Eigen::Index>(i));
    double denom = m.row(y).dot(row);
    if (denom < kProbabilityClamp) {
      denom = kProbabilityClamp;
      ++out.clamped;
    }
    out.betas[i] = row(y) / denom;
  }
  return out;
}

ReweightFactors reweight_factors(const PosteriorSnapshot& g, const TransitionMatrix& t,
                                 const Matrix& features, std::span<const int> labels) {
  return reweight_factors(g.predict(features), t, labels);
}

ReweightRisk reweight_vrnl_risk(std::span<const double> losses, std::span<const double> betas,
                                double alpha, std::optional<double> reference_mean, double floor) {
  if (losses.size() != betas.size()) throw std::invalid_argument("reweight_vrnl_risk: size mismatch");
  std::vector<double> products(losses.size());
  for (size_t i = 0; i < losses.size(); ++i) products[i] = betas[i] * losses[i];
  ReweightRisk out;
  out.risk = vrnl_empirical_risk(products, alpha);
  GradientWeights w = reference_mean ? eq2_weights(products, alpha, *reference_mean, floor)
                                     : eq2_weights_batch_mean(products, alpha, floor);
  out.weights = std::move(w.weights);
  out.clamped = w.clamped;
  return out;
}

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double batch_mean(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

// Shared tail of the objectives: weights from losses, then weighted backprop.
ObjectiveResult weighted_objective(const MlpParams& params, BatchEvaluation& eval,
                                   std::span<const double> scale, const WeightingOptions& w) {
  ObjectiveResult out;
  std::vector<double> effective = eval.losses;
  if (!scale.empty()) {
    for (size_t i = 0; i < effective.size(); ++i) effective[i] *= scale[i];
  }
  out.value = vrnl_empirical_risk(effective, w.alpha);
  if (w.reference_mean) {
    out.reference_mean = *w.reference_mean;
  } else if (w.tracker) {
    out.reference_mean = w.tracker->update(effective);
  } else {
    out.reference_mean = batch_mean(effective);
  }
  GradientWeights gw = eq2_weights(effective, w.alpha, out.reference_mean, w.floor);
  out.clamped = gw.clamped;
  std::vector<double> coeffs = std::move(gw.weights);
  if (!scale.empty()) {
    for (size_t i = 0; i < coeffs.size(); ++i) coeffs[i] *= scale[i];
  }
  out.theta_grad = weighted_backward(params, eval, coeffs);
  out.losses = std::move(effective);
  return out;
}

}  // namespace

TrainableTransition::TrainableTransition(Matrix logits) : logits_(std::move(logits)) {
  if (logits_.rows() != logits_.cols() || logits_.rows() < 2) {
    throw std::invalid_argument("trainable transition needs a square matrix with C >= 2");
  }
  logits_.diagonal().setZero();
}

TrainableTransition TrainableTransition::near_identity(int classes, double init) {
  Matrix u = Matrix::Constant(classes, classes, init);
  return TrainableTransition(std::move(u));
}

Matrix TrainableTransition::realize() const {
  const int c = classes();
  Matrix t(c, c);
  for (int j = 0; j < c; ++j) {
    double off = 0.0;
    for (int i = 0; i < c; ++i) {
      if (i == j) continue;
      t(i, j) = sigmoid(logits_(i, j)) / c;
      off += t(i, j);
    }
    t(j, j) = 1.0 - off;
  }
  return t;
}

Matrix TrainableTransition::chain_gradient(const Matrix& dtransition) const {
  const int c = classes();
  if (dtransition.rows() != c || dtransition.cols() != c) {
    throw std::invalid_argument("chain_gradient: shape mismatch");
  }
  Matrix du = Matrix::Zero(c, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < c; ++i) {
      if (i == j) continue;
      const double s = sigmoid(logits_(i, j));
      du(i, j) = (dtransition(i, j) - dtransition(j, j)) * s * (1.0 - s) / c;
    }
  }
  return du;
}

ObjectiveResult ce_vrnl_objective(const MlpParams& params, const Matrix& features,
                                  std::span<const int> labels, const WeightingOptions& w) {
  BatchEvaluation eval = evaluate_batch(params, features, labels, LossHead::cross_entropy());
  return weighted_objective(params, eval, {}, w);
}

ObjectiveResult forward_vrnl_objective(const MlpParams& params, const Matrix& features,
                                       std::span<const int> labels, const TransitionMatrix& t,
                                       const WeightingOptions& w) {
  BatchEvaluation eval = evaluate_batch(params, features, labels, forward_loss_head(t));
  return weighted_objective(params, eval, {}, w);
}

ObjectiveResult reweight_vrnl_objective(const MlpParams& params, const Matrix& features,
                                        std::span<const int> labels, std::span<const double> betas,
                                        const WeightingOptions& w) {
  if (betas.size() != labels.size()) throw std::invalid_argument("reweight objective: one beta per example");
  require_finite(betas, "reweight factors");
  BatchEvaluation eval = evaluate_batch(params, features, labels, LossHead::cross_entropy());
  return weighted_objective(params, eval, betas, w);
}

ObjectiveResult volmin_vrnl_objective(const MlpParams& params, const TrainableTransition& tt,
                                      const Matrix& features, std::span<const int> labels,
                                      const WeightingOptions& w, double lambda) {
  const Matrix t = tt.realize();
  const LogDet ld = log_det(t);  // throws on singular T
  const LossHead head = LossHead::forward_corrected(t);
  BatchEvaluation eval = evaluate_batch(params, features, labels, head);
  ObjectiveResult out = weighted_objective(params, eval, {}, w);
  out.value += lambda * ld.log_abs;

  const double n = static_cast<double>(labels.size());
  std::vector<double> plain(labels.size(), 1.0 / n);
  Matrix dt = head.transition_gradient(eval.acts.probs, labels, plain);
  dt += lambda * log_det_gradient(t);
  out.transition_grad = tt.chain_gradient(dt);
  return out;
}

}  // namespace lnlab
