// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "lnlab/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lnlab {

MlpParams MlpParams::zeros(std::span<const int> widths) {
  if (widths.size() < 2) throw std::invalid_argument("MLP needs at least input and output widths");
  MlpParams p;
  for (size_t k = 0; k + 1 < widths.size(); ++k) {
    if (widths[k] < 1 || widths[k + 1] < 1) throw std::invalid_argument("MLP widths must be positive");
    p.layers.push_back({Matrix::Zero(widths[k + 1], widths[k]), Vector::Zero(widths[k + 1])});
  }
  return p;
}

MlpParams MlpParams::init(std::span<const int> widths, RngStream& rng) {
  MlpParams p = zeros(widths);
  for (auto& l : p.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = rng.uniform(-limit, limit);
  }
  return p;
}

MlpParams MlpParams::zeros_like(const MlpParams& shape) {
  MlpParams p;
  for (const auto& l : shape.layers) {
    p.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return p;
}

int MlpParams::input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
int MlpParams::num_classes() const { return static_cast<int>(layers.back().weight.rows()); }

std::vector<int> MlpParams::widths() const {
  std::vector<int> w;
  if (layers.empty()) return w;
  w.push_back(input_dim());
  for (const auto& l : layers) w.push_back(static_cast<int>(l.weight.rows()));
  return w;
}

size_t MlpParams::parameter_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += static_cast<size_t>(l.weight.size() + l.bias.size());
  return n;
}

double& MlpParams::flat(size_t k) {
  for (auto& l : layers) {
    const auto nw = static_cast<size_t>(l.weight.size());
    if (k < nw) return l.weight.data()[k];
    k -= nw;
    const auto nb = static_cast<size_t>(l.bias.size());
    if (k < nb) return l.bias.data()[k];
    k -= nb;
  }
  throw std::out_of_range("MlpParams::flat index out of range");
}

double MlpParams::flat(size_t k) const { return const_cast<MlpParams*>(this)->flat(k); }

std::vector<double> MlpParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for_each_block([&](std::span<const double> b) { out.insert(out.end(), b.begin(), b.end()); });
  return out;
}

bool MlpParams::same_shape(const MlpParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].weight.rows() != other.layers[k].weight.rows() ||
        layers[k].weight.cols() != other.layers[k].weight.cols() ||
        layers[k].bias.size() != other.layers[k].bias.size()) {
      return false;
    }
  }
  return true;
}

void MlpParams::add_scaled(const MlpParams& other, double scale) {
  if (!same_shape(other)) throw std::invalid_argument("add_scaled: shape mismatch");
  for (size_t k = 0; k < layers.size(); ++k) {
    layers[k].weight += scale * other.layers[k].weight;
    layers[k].bias += scale * other.layers[k].bias;
  }
}

bool MlpParams::finite() const {
  bool ok = true;
  for_each_block([&](std::span<const double> b) { ok = ok && all_finite(b); });
  return ok;
}

BatchActivations forward_batch(const MlpParams& params, const Matrix& features) {
  if (params.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (features.cols() != params.input_dim()) {
    std::ostringstream msg;
    msg << "forward: feature dimension " << features.cols() << " but network expects "
        << params.input_dim();
    throw std::invalid_argument(msg.str());
  }
  BatchActivations acts;
  acts.layer_inputs.reserve(params.layers.size());
  Matrix current = features;
  for (size_t k = 0; k < params.layers.size(); ++k) {
    const auto& l = params.layers[k];
    Matrix z = current * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    acts.layer_inputs.push_back(std::move(current));
    if (k + 1 < params.layers.size()) {
      current = z.cwiseMax(0.0);
    } else {
      acts.logits = std::move(z);
    }
  }
  acts.probs = stable_softmax_rows(acts.logits);
  return acts;
}

Matrix predict_probs(const MlpParams& params, const Matrix& features) {
  if (params.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (features.cols() != params.input_dim()) throw std::invalid_argument("forward: dimension mismatch");
  Matrix current = features;
  for (size_t k = 0; k < params.layers.size(); ++k) {
    const auto& l = params.layers[k];
    Matrix z = current * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    current = (k + 1 < params.layers.size()) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return stable_softmax_rows(current);
}

Vector forward(const MlpParams& params, std::span<const double> x) {
  Matrix row(1, static_cast<Eigen::Index>(x.size()));
  std::copy(x.begin(), x.end(), row.data());
  return predict_probs(params, row).row(0).transpose();
}

Matrix softmax_backward(const Matrix& probs, const Matrix& dprobs) {
  // dz = p * (g - <g, p>)
  Matrix dz(probs.rows(), probs.cols());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double inner = probs.row(r).dot(dprobs.row(r));
    dz.row(r) = probs.row(r).cwiseProduct(dprobs.row(r).array().matrix() -
                                          Eigen::RowVectorXd::Constant(probs.cols(), inner));
  }
  return dz;
}

GradientBuffer backward(const MlpParams& params, const BatchActivations& acts, const Matrix& dlogits) {
  GradientBuffer grad = MlpParams::zeros_like(params);
  Matrix delta = dlogits;
  for (size_t k = params.layers.size(); k-- > 0;) {
    const Matrix& input = acts.layer_inputs[k];
    grad.layers[k].weight.noalias() = delta.transpose() * input;
    grad.layers[k].bias = delta.colwise().sum().transpose();
    if (k == 0) break;
    Matrix upstream = delta * params.layers[k].weight;
    // Rectifier derivative: the stored input is post-activation, zero where inactive.
    delta = upstream.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
  }
  return grad;
}

double per_example_ce(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<size_t>(label) >= probs.size()) {
    std::ostringstream msg;
    msg << "cross-entropy: label " << label << " outside [0, " << probs.size() << ")";
    throw std::invalid_argument(msg.str());
  }
  return -std::log(std::max(probs[static_cast<size_t>(label)], kProbabilityClamp));
}

LossHead LossHead::cross_entropy() { return LossHead{}; }

LossHead LossHead::forward_corrected(Matrix transition) {
  if (transition.rows() != transition.cols() || transition.rows() < 1) {
    throw std::invalid_argument("forward head: transition must be square");
  }
  require_finite(transition, "forward head transition");
  LossHead head;
  head.transition_ = std::move(transition);
  return head;
}

namespace {

void check_labels(const Matrix& probs, std::span<const int> labels) {
  if (static_cast<size_t>(probs.rows()) != labels.size()) {
    throw std::invalid_argument("loss head: label count does not match batch size");
  }
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= probs.cols()) {
      std::ostringstream msg;
      msg << "loss head: label " << labels[i] << " at index " << i << " outside [0, " << probs.cols() << ")";
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace

std::vector<double> LossHead::losses(const Matrix& probs, std::span<const int> labels) const {
  Matrix unused;
  return losses_and_gradients(probs, labels, unused);
}

std::vector<double> LossHead::losses_and_gradients(const Matrix& probs, std::span<const int> labels,
                                                   Matrix& dprobs) const {
  check_labels(probs, labels);
  if (transition_ && transition_->cols() != probs.cols()) {
    throw std::invalid_argument("forward head: transition size does not match class count");
  }
  const Eigen::Index n = probs.rows();
  std::vector<double> out(static_cast<size_t>(n));
  dprobs = Matrix::Zero(n, probs.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<size_t>(i)];
    if (!transition_) {
      const double p = probs(i, y);
      out[static_cast<size_t>(i)] = -std::log(std::max(p, kProbabilityClamp));
      if (p > kProbabilityClamp) dprobs(i, y) = -1.0 / p;
    } else {
      const auto& t = *transition_;
      const double q = t.row(y).dot(probs.row(i));
      out[static_cast<size_t>(i)] = -std::log(std::max(q, kProbabilityClamp));
      if (q > kProbabilityClamp) dprobs.row(i) = -t.row(y) / q;
    }
  }
  return out;
}

Matrix LossHead::transition_gradient(const Matrix& probs, std::span<const int> labels,
                                     std::span<const double> coeffs) const {
  const Eigen::Index c = probs.cols();
  Matrix g = Matrix::Zero(c, c);
  if (!transition_) return g;
  check_labels(probs, labels);
  const auto& t = *transition_;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const int y = labels[static_cast<size_t>(i)];
    const double q = t.row(y).dot(probs.row(i));
    if (q > kProbabilityClamp) g.row(y) -= (coeffs[static_cast<size_t>(i)] / q) * probs.row(i);
  }
  return g;
}

BatchEvaluation evaluate_batch(const MlpParams& params, const Matrix& features,
                               std::span<const int> labels, const LossHead& head) {
  BatchEvaluation eval;
  eval.acts = forward_batch(params, features);
  eval.losses = head.losses_and_gradients(eval.acts.probs, labels, eval.dprobs);
  for (size_t i = 0; i < eval.losses.size(); ++i) {
    if (!std::isfinite(eval.losses[i])) {
      std::ostringstream msg;
      msg << "non-finite loss at example " << i;
      throw NumericError(msg.str());
    }
  }
  return eval;
}

GradientBuffer weighted_backward(const MlpParams& params, const BatchEvaluation& eval,
                                 std::span<const double> coeffs) {
  const Eigen::Index n = eval.acts.probs.rows();
  if (coeffs.size() != static_cast<size_t>(n)) {
    throw std::invalid_argument("weighted_backward: one coefficient per example required");
  }
  Matrix scaled = eval.dprobs;
  for (Eigen::Index i = 0; i < n; ++i) scaled.row(i) *= coeffs[static_cast<size_t>(i)] / static_cast<double>(n);
  return backward(params, eval.acts, softmax_backward(eval.acts.probs, scaled));
}

WeightedGradient weighted_batch_gradient(const MlpParams& params, const Matrix& features,
                                         std::span<const int> labels,
                                         std::span<const double> weights, const LossHead& head) {
  if (weights.size() != labels.size()) {
    throw std::invalid_argument("weighted_batch_gradient: one weight per example required");
  }
  for (size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i])) {
      std::ostringstream msg;
      msg << "non-finite weight " << weights[i] << " at example " << i;
      throw NumericError(msg.str());
    }
  }
  BatchEvaluation eval = evaluate_batch(params, features, labels, head);
  double total = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) total += weights[i] * eval.losses[i];
  WeightedGradient out;
  out.loss = labels.empty() ? 0.0 : total / static_cast<double>(labels.size());
  out.grad = weighted_backward(params, eval, weights);
  return out;
}

GradientBuffer finite_difference_gradient(const MlpParams& params,
                                          const std::function<double(const MlpParams&)>& objective,
                                          double h) {
  GradientBuffer grad = MlpParams::zeros_like(params);
  MlpParams probe = params;
  const size_t n = params.parameter_count();
  for (size_t k = 0; k < n; ++k) {
    const double original = probe.flat(k);
    probe.flat(k) = original + h;
    const double up = objective(probe);
    probe.flat(k) = original - h;
    const double down = objective(probe);
    probe.flat(k) = original;
    grad.flat(k) = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("max_relative_error: size mismatch");
  double worst = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a[k]), std::abs(b[k]), floor});
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

double max_relative_error(const MlpParams& a, const MlpParams& b, double floor) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_relative_error: shape mismatch");
  const auto fa = a.flatten();
  const auto fb = b.flatten();
  return max_relative_error(fa, fb, floor);
}

void write_checkpoint(std::ostream& os, const MlpParams& params) {
  os << "lnlab-mlp 1\n" << params.layers.size() << '\n' << std::setprecision(17);
  for (const auto& l : params.layers) {
    os << l.weight.rows() << ' ' << l.weight.cols() << '\n';
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) os << (c ? " " : "") << l.weight(r, c);
      os << '\n';
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) os << (r ? " " : "") << l.bias[r];
    os << '\n';
  }
}

MlpParams read_checkpoint(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "lnlab-mlp") throw std::runtime_error("checkpoint: bad header");
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  size_t count = 0;
  if (!(is >> count) || count == 0) throw std::runtime_error("checkpoint: bad layer count");
  MlpParams p;
  for (size_t k = 0; k < count; ++k) {
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> rows >> cols) || rows < 1 || cols < 1) throw std::runtime_error("checkpoint: bad layer shape");
    DenseLayer l{Matrix(rows, cols), Vector(rows)};
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) {
      if (!(is >> l.weight.data()[i])) throw std::runtime_error("checkpoint: truncated weights");
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!(is >> l.bias[i])) throw std::runtime_error("checkpoint: truncated bias");
    }
    if (!p.layers.empty() && p.layers.back().weight.rows() != cols) {
      throw std::runtime_error("checkpoint: layer widths do not chain");
    }
    p.layers.push_back(std::move(l));
  }
  return p;
}

void save_checkpoint(const std::string& path, const MlpParams& params) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_checkpoint(os, params);
}

MlpParams load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_checkpoint(is);
}

}  // namespace lnlab
