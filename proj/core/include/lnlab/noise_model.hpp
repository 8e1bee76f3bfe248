// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LNLAB_NOISE_MODEL_HPP_
#define LNLAB_NOISE_MODEL_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lnlab/numerics.hpp"
#include "lnlab/rng.hpp"

namespace lnlab {

/// Column-stochastic C x C matrix, entry (i, j) = P(noisy = i | clean = j).
class TransitionMatrix {
 public:
  /// Validates shape, entries in [0, 1] and unit column sums (within tolerance).
  explicit TransitionMatrix(Matrix m, double tolerance = 1e-10);

  static TransitionMatrix identity(int classes);

  int classes() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int noisy, int clean) const { return m_(noisy, clean); }

  /// T p: maps a clean-posterior vector to the noisy posterior.
  Vector mix(const Vector& clean_posterior) const;

  /// True when each column's diagonal strictly exceeds its off-diagonal entries.
  bool diagonally_dominant() const;

 private:
  Matrix m_;
};

enum class NoiseKind { kSymmetric, kAsymmetric, kPair };

NoiseKind parse_noise_kind(std::string_view name);
std::string to_string(NoiseKind kind);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kSymmetric;
  double rate = 0.0;
  int classes = 2;
  std::uint64_t seed = 0;  // only used by kAsymmetric
};

/// Diagonal 1 - eps, off-diagonal eps / (C - 1). Requires 0 <= eps < (C - 1) / C.
TransitionMatrix build_symmetric(int classes, double rate);
/// Column j keeps 1 - eps and sends eps to class (j + 1) mod C. Requires eps < 0.5.
TransitionMatrix build_pair(int classes, double rate);
/// Per-class rates drawn uniformly from [eps / 2, eps] moved to class (j + 1) mod C.
TransitionMatrix build_asymmetric(int classes, double rate, std::uint64_t seed);
TransitionMatrix build_transition(const NoiseSpec& spec);

/// Draws each noisy label independently from column `clean[i]` of T.
std::vector<int> corrupt_labels(std::span<const int> clean, const TransitionMatrix& t, RngStream& rng);

struct PerturbedTransition {
  Matrix biased;                 // T + gamma |Delta|
  TransitionMatrix normalized;   // columns of `biased` rescaled to sum to one
  double relative_error = 0.0;   // ||T - T_N||_{1,1} / ||T||_{1,1}
};

/// Adds gamma |Delta| with Delta ~ N(0, I) entry-wise and renormalizes columns.
PerturbedTransition perturb_and_normalize(const TransitionMatrix& t, double gamma, RngStream& rng);
/// Same, with |Delta| supplied by the caller.
PerturbedTransition perturb_with_magnitudes(const TransitionMatrix& t, double gamma,
                                            const Matrix& abs_delta);

/// Relative entry-wise L1 error between a reference and an estimate.
double relative_l1_error(const TransitionMatrix& reference, const TransitionMatrix& estimate);

// Plain-text format: optional '#' comment lines, a line holding C, then C rows
// of C entries. Entries are written with 17 significant digits.
void write_transition(std::ostream& os, const TransitionMatrix& t, std::string_view header = {});
TransitionMatrix read_transition(std::istream& is);
void save_transition(const std::string& path, const TransitionMatrix& t, std::string_view header = {});
TransitionMatrix load_transition(const std::string& path);

}  // namespace lnlab

#endif  // LNLAB_NOISE_MODEL_HPP_
