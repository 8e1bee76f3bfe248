// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "lnlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lnlab {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(std::span<const double> values, const std::string& what) {
  for (size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << what << ": non-finite value " << values[i] << " at index " << i;
      throw NumericError(msg.str());
    }
  }
}

void require_finite(const Matrix& m, const std::string& what) {
  require_finite(std::span<const double>(m.data(), static_cast<size_t>(m.size())), what);
}

Vector stable_softmax(std::span<const double> logits) {
  if (logits.empty()) throw NumericError("stable_softmax: empty input");
  require_finite(logits, "stable_softmax");
  const double top = *std::max_element(logits.begin(), logits.end());
  Vector out(static_cast<Eigen::Index>(logits.size()));
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = std::exp(logits[i] - top);
    total += out[static_cast<Eigen::Index>(i)];
  }
  out /= total;
  return out;
}

Matrix stable_softmax_rows(const Matrix& logits) {
  require_finite(logits, "stable_softmax_rows");
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double top = logits.row(r).maxCoeff();
    double total = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) - top);
      total += out(r, c);
    }
    out.row(r) /= total;
  }
  return out;
}

LuDecomposition::LuDecomposition(const Matrix& m) : lu_(m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw NumericError("LU: matrix must be square and non-empty");
  }
  require_finite(m, "LU input");
  const int n = static_cast<int>(m.rows());
  perm_.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) perm_[static_cast<size_t>(i)] = i;

  for (int k = 0; k < n; ++k) {
    int pivot = k;
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > std::abs(lu_(pivot, k))) pivot = i;
    }
    if (std::abs(lu_(pivot, k)) < kSingularPivot) {
      std::ostringstream msg;
      msg << "singular matrix: pivot " << lu_(pivot, k) << " in column " << k;
      throw SingularMatrixError(msg.str());
    }
    if (pivot != k) {
      lu_.row(k).swap(lu_.row(pivot));
      std::swap(perm_[static_cast<size_t>(k)], perm_[static_cast<size_t>(pivot)]);
      sign_ = -sign_;
    }
    for (int i = k + 1; i < n; ++i) {
      lu_(i, k) /= lu_(k, k);
      const double factor = lu_(i, k);
      for (int j = k + 1; j < n; ++j) lu_(i, j) -= factor * lu_(k, j);
    }
  }
  for (int k = 0; k < n; ++k) {
    if (lu_(k, k) < 0.0) sign_ = -sign_;
  }
}

double LuDecomposition::log_abs_det() const {
  double total = 0.0;
  for (Eigen::Index k = 0; k < lu_.rows(); ++k) total += std::log(std::abs(lu_(k, k)));
  return total;
}

Vector LuDecomposition::solve(const Vector& b) const {
  const int n = size();
  if (b.size() != n) throw NumericError("LU solve: dimension mismatch");
  Vector x(n);
  for (int i = 0; i < n; ++i) {
    double v = b[perm_[static_cast<size_t>(i)]];
    for (int j = 0; j < i; ++j) v -= lu_(i, j) * x[j];
    x[i] = v;
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = x[i];
    for (int j = i + 1; j < n; ++j) v -= lu_(i, j) * x[j];
    x[i] = v / lu_(i, i);
  }
  return x;
}

Matrix LuDecomposition::inverse() const {
  const int n = size();
  Matrix inv(n, n);
  for (int c = 0; c < n; ++c) {
    Vector e = Vector::Zero(n);
    e[c] = 1.0;
    inv.col(c) = solve(e);
  }
  return inv;
}

LogDet log_det(const Matrix& m) {
  LuDecomposition lu(m);
  return {lu.log_abs_det(), lu.sign()};
}

Matrix log_det_gradient(const Matrix& m) {
  return LuDecomposition(m).inverse().transpose();
}

Matrix inverse(const Matrix& m) { return LuDecomposition(m).inverse(); }

Vector solve(const Matrix& m, const Vector& b) { return LuDecomposition(m).solve(b); }

double entrywise_l1(const Matrix& m) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) total += std::abs(m.data()[i]);
  return total;
}

MeanVariance mean_and_variance(std::span<const double> values) {
  if (values.empty()) throw NumericError("mean_and_variance: empty input");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, sq / n};
}

}  // namespace lnlab
