// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LNLAB_CLASSIFIER_HPP_
#define LNLAB_CLASSIFIER_HPP_

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lnlab/numerics.hpp"
#include "lnlab/rng.hpp"

namespace lnlab {

/// Lower bound applied to a probability before taking its log.
inline constexpr double kProbabilityClamp = 1e-12;

struct DenseLayer {
  Matrix weight;  // d_out x d_in
  Vector bias;    // d_out
};

/// Multilayer perceptron: rectifier on hidden layers, softmax head.
struct MlpParams {
  std::vector<DenseLayer> layers;

  /// Fan-balanced uniform weights, zero biases. `widths` = {d_in, hidden..., C}.
  static MlpParams init(std::span<const int> widths, RngStream& rng);
  static MlpParams zeros(std::span<const int> widths);
  static MlpParams zeros_like(const MlpParams& shape);

  int input_dim() const;
  int num_classes() const;
  std::vector<int> widths() const;
  size_t parameter_count() const;

  /// Visits every parameter block as a contiguous span, weights before bias per layer.
  template <typename F>
  void for_each_block(F&& f) {
    for (auto& l : layers) {
      f(std::span<double>(l.weight.data(), static_cast<size_t>(l.weight.size())));
      f(std::span<double>(l.bias.data(), static_cast<size_t>(l.bias.size())));
    }
  }
  template <typename F>
  void for_each_block(F&& f) const {
    for (const auto& l : layers) {
      f(std::span<const double>(l.weight.data(), static_cast<size_t>(l.weight.size())));
      f(std::span<const double>(l.bias.data(), static_cast<size_t>(l.bias.size())));
    }
  }

  /// Reference to the k-th scalar parameter in for_each_block order.
  double& flat(size_t k);
  double flat(size_t k) const;
  std::vector<double> flatten() const;

  /// this += scale * other (shapes must match).
  void add_scaled(const MlpParams& other, double scale);
  bool same_shape(const MlpParams& other) const;
  bool finite() const;
};

/// Gradients share the parameter layout.
using GradientBuffer = MlpParams;

/// Cached forward pass over a batch (rows are examples).
struct BatchActivations {
  std::vector<Matrix> layer_inputs;  // input to each layer, post-rectifier for hidden ones
  Matrix logits;
  Matrix probs;
};

BatchActivations forward_batch(const MlpParams& params, const Matrix& features);
/// Probabilities only.
Matrix predict_probs(const MlpParams& params, const Matrix& features);
/// Single-example forward pass; output sums to one.
Vector forward(const MlpParams& params, std::span<const double> x);

/// Backpropagates d(objective)/d(logits) through the network.
GradientBuffer backward(const MlpParams& params, const BatchActivations& acts, const Matrix& dlogits);

/// Maps d(objective)/d(probs) to d(objective)/d(logits) for softmax rows.
Matrix softmax_backward(const Matrix& probs, const Matrix& dprobs);

/// -ln(max(p[label], 1e-12)).
double per_example_ce(std::span<const double> probs, int label);
inline double per_example_ce(const Vector& probs, int label) {
  return per_example_ce(std::span<const double>(probs.data(), static_cast<size_t>(probs.size())), label);
}

/// How model probabilities map to a per-example scalar loss.
class LossHead {
 public:
  static LossHead cross_entropy();
  /// Loss -ln((T p)_label), gradient flows into p and T.
  static LossHead forward_corrected(Matrix transition);

  bool corrected() const { return transition_.has_value(); }
  const Matrix& transition() const { return *transition_; }

  /// Per-example losses for a batch of probabilities.
  std::vector<double> losses(const Matrix& probs, std::span<const int> labels) const;

  /// Losses plus d(loss_i)/d(probs_i) rows.
  std::vector<double> losses_and_gradients(const Matrix& probs, std::span<const int> labels,
                                           Matrix& dprobs) const;

  /// sum_i coeff_i d(loss_i)/dT for a corrected head; zero matrix otherwise.
  Matrix transition_gradient(const Matrix& probs, std::span<const int> labels,
                             std::span<const double> coeffs) const;

 private:
  std::optional<Matrix> transition_;
};

struct WeightedGradient {
  double loss = 0.0;  // (1/n) sum w_i l_i
  GradientBuffer grad;
};

/// (1/n) sum w_i l_i and its gradient with w held constant.
WeightedGradient weighted_batch_gradient(const MlpParams& params, const Matrix& features,
                                         std::span<const int> labels,
                                         std::span<const double> weights, const LossHead& head);

/// Per-example losses, their probabilities, and a closure-free backward for
/// callers that choose weights after seeing the losses.
struct BatchEvaluation {
  BatchActivations acts;
  std::vector<double> losses;
  Matrix dprobs;  // d loss_i / d probs_i
};
BatchEvaluation evaluate_batch(const MlpParams& params, const Matrix& features,
                               std::span<const int> labels, const LossHead& head);
/// Gradient of (1/n) sum coeff_i loss_i given a prior evaluation.
GradientBuffer weighted_backward(const MlpParams& params, const BatchEvaluation& eval,
                                 std::span<const double> coeffs);

/// Central differences per parameter, step h.
GradientBuffer finite_difference_gradient(const MlpParams& params,
                                          const std::function<double(const MlpParams&)>& objective,
                                          double h = 1e-5);

/// Largest |a - b| / max(|a|, |b|, floor) over all entries.
double max_relative_error(const MlpParams& a, const MlpParams& b, double floor = 1e-4);
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-4);

// Text checkpoint: "lnlab-mlp 1", layer count, then per layer "d_out d_in" and
// the weight rows followed by the bias, all with 17 significant digits.
void write_checkpoint(std::ostream& os, const MlpParams& params);
MlpParams read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const MlpParams& params);
MlpParams load_checkpoint(const std::string& path);

}  // namespace lnlab

#endif  // LNLAB_CLASSIFIER_HPP_
