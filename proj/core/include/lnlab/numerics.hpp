// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LNLAB_NUMERICS_HPP_
#define LNLAB_NUMERICS_HPP_

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lnlab {

// Row-major so that per-example rows of a batch are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Pivots with magnitude below this are treated as exact zeros.
inline constexpr double kSingularPivot = 1e-300;

bool all_finite(std::span<const double> values);
inline bool all_finite(const Matrix& m) {
  return all_finite(std::span<const double>(m.data(), static_cast<size_t>(m.size())));
}
/// Throws NumericError naming `what` when any entry is NaN or infinite.
void require_finite(std::span<const double> values, const std::string& what);
void require_finite(const Matrix& m, const std::string& what);

/// Softmax with max-subtraction. Throws on empty or non-finite input.
Vector stable_softmax(std::span<const double> logits);
inline Vector stable_softmax(const Vector& logits) {
  return stable_softmax(std::span<const double>(logits.data(), static_cast<size_t>(logits.size())));
}
/// Row-wise softmax of a batch of logits.
Matrix stable_softmax_rows(const Matrix& logits);

/// LU factorization with partial pivoting, PA = LU packed into one matrix.
class LuDecomposition {
 public:
  /// Throws SingularMatrixError when a pivot falls below kSingularPivot.
  explicit LuDecomposition(const Matrix& m);

  int size() const { return static_cast<int>(lu_.rows()); }
  /// Natural log of |det|.
  double log_abs_det() const;
  /// +1 or -1.
  int sign() const { return sign_; }
  Vector solve(const Vector& b) const;
  Matrix inverse() const;

 private:
  Matrix lu_;
  std::vector<int> perm_;
  int sign_ = 1;
};

struct LogDet {
  double log_abs = 0.0;
  int sign = 1;
};

/// log|det m| and sign of det m.
LogDet log_det(const Matrix& m);

/// d log|det M| / dM = (M^-1)^T.
Matrix log_det_gradient(const Matrix& m);

Matrix inverse(const Matrix& m);
Vector solve(const Matrix& m, const Vector& b);

/// Sum of absolute entries, the entry-wise (1,1) norm.
double entrywise_l1(const Matrix& m);

/// Mean and biased (divide-by-n) variance accumulated sequentially.
struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;
};
MeanVariance mean_and_variance(std::span<const double> values);

}  // namespace lnlab

#endif  // LNLAB_NUMERICS_HPP_
