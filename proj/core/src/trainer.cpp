// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "lnlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace lnlab {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (!(drop_factor > 0.0)) throw std::invalid_argument("drop factor must be positive");
  for (size_t k = 0; k < lr_drops.size(); ++k) {
    if (lr_drops[k] <= 0 || lr_drops[k] >= epochs) {
      throw std::invalid_argument("lr drop epochs must lie in (0, epochs)");
    }
    if (k > 0 && lr_drops[k] <= lr_drops[k - 1]) {
      throw std::invalid_argument("lr drop epochs must be strictly increasing");
    }
  }
}

double OptimizerConfig::learning_rate_at(int epoch) const {
  double lr = learning_rate;
  for (int drop : lr_drops) {
    if (epoch >= drop) lr /= drop_factor;
  }
  return lr;
}

void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              const SgdHyper& hyper) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw std::invalid_argument("sgd_step: shape mismatch");
  }
  for (size_t k = 0; k < params.size(); ++k) {
    velocity[k] = hyper.momentum * velocity[k] + (grads[k] + hyper.weight_decay * params[k]);
    params[k] -= hyper.learning_rate * velocity[k];
    if (!std::isfinite(params[k])) {
      std::ostringstream msg;
      msg << "sgd_step: non-finite parameter at index " << k << " (grad " << grads[k] << ")";
      throw NumericError(msg.str());
    }
  }
}

void sgd_step(MlpParams& params, const GradientBuffer& grads, SgdState& state, const SgdHyper& hyper) {
  if (!params.same_shape(grads)) throw std::invalid_argument("sgd_step: gradient shape mismatch");
  if (!state.velocity.same_shape(params)) state.velocity = MlpParams::zeros_like(params);
  for (size_t k = 0; k < params.layers.size(); ++k) {
    auto& p = params.layers[k];
    const auto& g = grads.layers[k];
    auto& v = state.velocity.layers[k];
    sgd_step(std::span<double>(p.weight.data(), static_cast<size_t>(p.weight.size())),
             std::span<const double>(g.weight.data(), static_cast<size_t>(g.weight.size())),
             std::span<double>(v.weight.data(), static_cast<size_t>(v.weight.size())), hyper);
    sgd_step(std::span<double>(p.bias.data(), static_cast<size_t>(p.bias.size())),
             std::span<const double>(g.bias.data(), static_cast<size_t>(g.bias.size())),
             std::span<double>(v.bias.data(), static_cast<size_t>(v.bias.size())), hyper);
  }
}

LossSplit split_losses(std::span<const double> losses, const std::vector<bool>& correct) {
  if (correct.size() != losses.size()) throw std::invalid_argument("split_losses: mask size mismatch");
  LossSplit out;
  if (losses.empty()) return out;
  double sum_c = 0.0, sum_i = 0.0;
  size_t n_c = 0, n_i = 0;
  for (size_t k = 0; k < losses.size(); ++k) {
    if (correct[k]) {
      sum_c += losses[k];
      ++n_c;
    } else {
      sum_i += losses[k];
      ++n_i;
    }
  }
  if (n_c) out.mean_correct = sum_c / static_cast<double>(n_c);
  if (n_i) out.mean_incorrect = sum_i / static_cast<double>(n_i);
  const MeanVariance mv = mean_and_variance(losses);
  out.mean = mv.mean;
  out.variance = mv.variance;
  return out;
}

namespace {

constexpr Eigen::Index kEvalChunk = 2048;

Matrix dataset_probs(const MlpParams& params, const LabeledDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  Matrix probs(n, params.num_classes());
  for (Eigen::Index start = 0; start < n; start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, n - start);
    probs.middleRows(start, len) = predict_probs(params, data.features.middleRows(start, len));
  }
  return probs;
}

std::vector<double> scaled_losses(const Matrix& probs, const LabeledDataset& data, const LossHead& head,
                                  std::span<const double> scale) {
  std::vector<double> losses = head.losses(probs, data.labels);
  if (!scale.empty()) {
    if (scale.size() != losses.size()) throw std::invalid_argument("diagnostics: scale size mismatch");
    for (size_t k = 0; k < losses.size(); ++k) losses[k] *= scale[k];
  }
  return losses;
}

}  // namespace

LossSplit diagnostics_pass(const MlpParams& params, const LabeledDataset& data, const LossHead& head,
                           std::span<const double> scale) {
  return split_losses(scaled_losses(dataset_probs(params, data), data, head, scale), data.correct_mask());
}

double accuracy(const MlpParams& params, const LabeledDataset& data) {
  if (data.size() == 0) return 0.0;
  size_t hits = 0;
  const auto n = static_cast<Eigen::Index>(data.size());
  for (Eigen::Index start = 0; start < n; start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, n - start);
    const Matrix probs = predict_probs(params, data.features.middleRows(start, len));
    for (Eigen::Index i = 0; i < len; ++i) {
      Eigen::Index best = 0;
      probs.row(i).maxCoeff(&best);
      if (static_cast<int>(best) == data.labels[static_cast<size_t>(start + i)]) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace {

void put(std::ostream& os, const std::optional<double>& v) {
  if (v) os << *v;
}

}  // namespace

void write_report_csv(std::ostream& os, const TrainReport& report) {
  os << "epoch,train_loss,val_acc,test_acc,loss_correct,loss_incorrect,loss_var,clamp_count,"
        "ce_loss_correct,ce_loss_incorrect,eps_t\n";
  const auto old = os.precision(17);
  for (const auto& r : report.rows) {
    os << r.epoch << ',' << r.train_loss << ',' << r.val_acc << ',' << r.test_acc << ',';
    put(os, r.loss_correct);
    os << ',';
    put(os, r.loss_incorrect);
    os << ',' << r.loss_var << ',' << r.clamp_count << ',';
    put(os, r.ce_loss_correct);
    os << ',';
    put(os, r.ce_loss_incorrect);
    os << ',';
    put(os, r.eps_t);
    os << '\n';
  }
  os.precision(old);
}

TrainResult train(const RiskSpec& risk, const TrainingData& data, MlpParams init, const OptimizerConfig& cfg,
                  const MethodInputs& inputs, const EpochCallback& on_epoch) {
  risk.validate();
  cfg.validate();
  data.train.validate();
  if (data.train.size() == 0) throw std::invalid_argument("train: empty training set");
  if (init.input_dim() != data.train.dim() || init.num_classes() != data.train.classes) {
    throw std::invalid_argument("train: network shape does not match the data");
  }
  if ((risk.method == Method::kForward || risk.method == Method::kReweight) && !inputs.transition) {
    throw std::invalid_argument("train: " + to_string(risk.method) + " needs a transition matrix");
  }
  if (risk.method == Method::kReweight && inputs.betas.size() != data.train.size()) {
    throw std::invalid_argument("train: reweight needs one factor per training example");
  }
  const int classes = data.train.classes;

  MlpParams params = std::move(init);
  SgdState state;
  state.velocity = MlpParams::zeros_like(params);

  std::optional<TrainableTransition> volmin;
  Matrix volmin_velocity;
  if (risk.method == Method::kVolMin) {
    volmin = inputs.initial_volmin ? *inputs.initial_volmin : TrainableTransition::near_identity(classes);
    volmin_velocity = Matrix::Zero(classes, classes);
  }

  LossMeanTracker tracker(risk.mean_mode);
  RngStream shuffle_rng(cfg.seed, StreamId::kShuffle);
  std::vector<size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainResult result;
  result.best_params = params;
  const std::vector<int>& all_labels = data.train.labels;
  const auto bs = static_cast<size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate_at(epoch);
    const SgdHyper theta_hyper{lr, cfg.momentum, cfg.weight_decay};
    const SgdHyper u_hyper{lr, cfg.momentum, 0.0};
    shuffle_rng.shuffle(std::span<size_t>(order));
    tracker.reset();

    double objective_sum = 0.0;
    size_t clamp_count = 0;
    for (size_t start = 0; start < order.size(); start += bs) {
      const size_t len = std::min(bs, order.size() - start);
      Matrix x(static_cast<Eigen::Index>(len), data.train.features.cols());
      std::vector<int> y(len);
      std::vector<double> betas;
      for (size_t k = 0; k < len; ++k) {
        const size_t i = order[start + k];
        x.row(static_cast<Eigen::Index>(k)) = data.train.features.row(static_cast<Eigen::Index>(i));
        y[k] = all_labels[i];
        if (risk.method == Method::kReweight) betas.push_back(inputs.betas[i]);
      }
      WeightingOptions w;
      w.alpha = risk.alpha;
      w.floor = risk.weight_floor;
      w.tracker = &tracker;

      ObjectiveResult obj;
      try {
        switch (risk.method) {
          case Method::kCrossEntropy: obj = ce_vrnl_objective(params, x, y, w); break;
          case Method::kForward: obj = forward_vrnl_objective(params, x, y, *inputs.transition, w); break;
          case Method::kReweight: obj = reweight_vrnl_objective(params, x, y, betas, w); break;
          case Method::kVolMin: obj = volmin_vrnl_objective(params, *volmin, x, y, w, risk.lambda); break;
        }
        if (!std::isfinite(obj.value) || !obj.theta_grad.finite()) throw NumericError("non-finite objective");
        sgd_step(params, obj.theta_grad, state, theta_hyper);
        if (volmin) {
          Matrix& u = volmin->logits();
          sgd_step(std::span<double>(u.data(), static_cast<size_t>(u.size())),
                   std::span<const double>(obj.transition_grad.data(), static_cast<size_t>(obj.transition_grad.size())),
                   std::span<double>(volmin_velocity.data(), static_cast<size_t>(volmin_velocity.size())), u_hyper);
          u.diagonal().setZero();
        }
      } catch (const NumericError& e) {
        std::ostringstream msg;
        msg << "training diverged in epoch " << epoch << ": " << e.what();
        throw DivergenceError(msg.str(), epoch);
      }
      objective_sum += obj.value * static_cast<double>(len);
      clamp_count += obj.clamped;
    }

    EpochRow row;
    row.epoch = epoch;
    row.train_loss = objective_sum / static_cast<double>(order.size());
    row.clamp_count = clamp_count;
    row.val_acc = accuracy(params, data.val);
    row.test_acc = accuracy(params, data.test);

    LossHead head = LossHead::cross_entropy();
    std::optional<TransitionMatrix> current_t;
    if (risk.method == Method::kForward) current_t = inputs.transition;
    if (risk.method == Method::kReweight) current_t = inputs.transition;
    if (volmin) current_t = TransitionMatrix(volmin->realize(), 1e-9);
    if (current_t && risk.method != Method::kReweight) head = forward_loss_head(*current_t);

    const Matrix train_probs = dataset_probs(params, data.train);
    const std::span<const double> scale =
        risk.method == Method::kReweight ? std::span<const double>(inputs.betas) : std::span<const double>();
    const std::vector<double> own_losses = scaled_losses(train_probs, data.train, head, scale);
    if (data.train.clean_labels) {
      const std::vector<bool> mask = data.train.correct_mask();
      const LossSplit own = split_losses(own_losses, mask);
      row.loss_correct = own.mean_correct;
      row.loss_incorrect = own.mean_incorrect;
      row.loss_var = own.variance;
      const LossSplit ce = split_losses(LossHead::cross_entropy().losses(train_probs, data.train.labels), mask);
      row.ce_loss_correct = ce.mean_correct;
      row.ce_loss_incorrect = ce.mean_incorrect;
    } else {
      row.loss_var = mean_and_variance(own_losses).variance;
    }
    if (inputs.true_transition && current_t) row.eps_t = relative_l1_error(*inputs.true_transition, *current_t);

    if (result.report.best_epoch < 0 || row.val_acc > result.report.best_val_acc) {
      result.report.best_epoch = epoch;
      result.report.best_val_acc = row.val_acc;
      result.report.best_test_acc = row.test_acc;
      result.best_params = params;
      if (volmin) result.learned_transition = current_t;
    }
    result.report.rows.push_back(row);
    if (on_epoch) on_epoch(epoch, params);
  }
  result.final_params = std::move(params);
  return result;
}

}  // namespace lnlab
