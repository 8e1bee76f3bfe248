// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "lnlab/transition_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace lnlab {

Eigen::Index anchor_index(const Matrix& noisy_posteriors, int column, double percentile) {
  if (!(percentile > 0.0 && percentile <= 100.0)) {
    throw std::invalid_argument("anchor percentile must lie in (0, 100]");
  }
  const Eigen::Index n = noisy_posteriors.rows();
  if (n == 0) throw std::invalid_argument("anchor estimation: no examples");
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  // Stable sort keeps the earliest index among ties, so the choice is reproducible.
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return noisy_posteriors(a, column) < noisy_posteriors(b, column);
  });
  // Nearest rank at or above the requested percentile.
  const double position = percentile / 100.0 * static_cast<double>(n - 1);
  const auto rank = static_cast<size_t>(std::ceil(position - 1e-9));
  return order[std::min(rank, order.size() - 1)];
}

TransitionMatrix estimate_transition_anchor(const Matrix& noisy_posteriors, std::span<const int> labels,
                                            double percentile) {
  const int c = static_cast<int>(noisy_posteriors.cols());
  if (c < 2) throw std::invalid_argument("anchor estimation: need at least 2 classes");
  if (static_cast<size_t>(noisy_posteriors.rows()) != labels.size()) {
    throw std::invalid_argument("anchor estimation: label count does not match predictions");
  }
  std::vector<size_t> counts(static_cast<size_t>(c), 0);
  for (int y : labels) {
    if (y < 0 || y >= c) throw std::invalid_argument("anchor estimation: label out of range");
    ++counts[static_cast<size_t>(y)];
  }
  for (int j = 0; j < c; ++j) {
    if (counts[static_cast<size_t>(j)] == 0) {
      std::ostringstream msg;
      msg << "anchor estimation: class " << j << " has no examples";
      throw std::invalid_argument(msg.str());
    }
  }
  require_finite(noisy_posteriors, "anchor estimation posteriors");

  Matrix t(c, c);
  for (int j = 0; j < c; ++j) {
    const Eigen::Index anchor = anchor_index(noisy_posteriors, j, percentile);
    Vector column = noisy_posteriors.row(anchor).transpose().cwiseMax(0.0).cwiseMin(1.0);
    const double total = column.sum();
    if (!(total > 0.0)) throw NumericError("anchor estimation: anchor prediction is all zeros");
    t.col(j) = column / total;
  }
  return TransitionMatrix(std::move(t));
}

TransitionMatrix estimate_transition_anchor(const PosteriorSnapshot& model, const Matrix& features,
                                            std::span<const int> labels, double percentile) {
  return estimate_transition_anchor(model.predict(features), labels, percentile);
}

CleanPosterior invert_for_clean_posterior(const TransitionMatrix& t, const Vector& noisy_posterior) {
  if (noisy_posterior.size() != t.classes()) {
    throw std::invalid_argument("invert_for_clean_posterior: dimension mismatch");
  }
  CleanPosterior out;
  out.values = solve(t.matrix(), noisy_posterior);
  constexpr double kSlack = 1e-12;
  out.on_simplex = (out.values.array() >= -kSlack).all() && (out.values.array() <= 1.0 + kSlack).all() &&
                   std::abs(out.values.sum() - 1.0) <= 1e-9;
  return out;
}

}  // namespace lnlab
