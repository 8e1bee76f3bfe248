// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LNLAB_TRANSITION_ESTIMATION_HPP_
#define LNLAB_TRANSITION_ESTIMATION_HPP_

#include <span>

#include "lnlab/noise_model.hpp"
#include "lnlab/numerics.hpp"
#include "lnlab/risk.hpp"

namespace lnlab {

inline constexpr double kDefaultAnchorPercentile = 97.0;

/// Anchor-point estimate of T from noisy-posterior predictions.
///
/// For each class j the anchor is the example whose predicted probability of j
/// sits at `percentile` among all examples (100 = the maximum); column j is the
/// prediction at that anchor, clamped to [0, 1] and renormalized.
/// `labels` are the observed noisy labels; every class must occur at least once.
TransitionMatrix estimate_transition_anchor(const Matrix& noisy_posteriors, std::span<const int> labels,
                                            double percentile = kDefaultAnchorPercentile);
TransitionMatrix estimate_transition_anchor(const PosteriorSnapshot& model, const Matrix& features,
                                            std::span<const int> labels,
                                            double percentile = kDefaultAnchorPercentile);

/// Index of the row selected as anchor for `column` (exposed for diagnostics).
Eigen::Index anchor_index(const Matrix& noisy_posteriors, int column, double percentile);

struct CleanPosterior {
  Vector values;
  bool on_simplex = true;  // false when estimation error pushed entries outside [0, 1]
};

/// T^-1 p_noisy. Throws SingularMatrixError for singular T.
CleanPosterior invert_for_clean_posterior(const TransitionMatrix& t, const Vector& noisy_posterior);

}  // namespace lnlab

#endif  // LNLAB_TRANSITION_ESTIMATION_HPP_
