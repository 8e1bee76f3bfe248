// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "lnlab/noise_model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lnlab {

namespace {

void check_classes(int classes) {
  if (classes < 2) throw std::invalid_argument("transition matrix needs at least 2 classes");
}

void check_rate(double rate, double upper, const char* kind, bool upper_inclusive = false) {
  if (!(rate >= 0.0) || !(rate < upper || (upper_inclusive && rate == upper))) {
    std::ostringstream msg;
    msg << kind << " noise rate " << rate << " outside [0, " << upper << (upper_inclusive ? "]" : ")");
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

TransitionMatrix::TransitionMatrix(Matrix m, double tolerance) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() < 1) {
    throw std::invalid_argument("transition matrix must be square");
  }
  require_finite(m_, "transition matrix");
  for (Eigen::Index j = 0; j < m_.cols(); ++j) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
      const double v = m_(i, j);
      if (v < 0.0 || v > 1.0) {
        std::ostringstream msg;
        msg << "transition entry (" << i << ", " << j << ") = " << v << " outside [0, 1]";
        throw std::invalid_argument(msg.str());
      }
      total += v;
    }
    if (std::abs(total - 1.0) > tolerance) {
      std::ostringstream msg;
      msg << std::setprecision(17) << "transition column " << j << " sums to " << total;
      throw std::invalid_argument(msg.str());
    }
  }
}

TransitionMatrix TransitionMatrix::identity(int classes) {
  check_classes(classes);
  return TransitionMatrix(Matrix::Identity(classes, classes));
}

Vector TransitionMatrix::mix(const Vector& clean_posterior) const {
  if (clean_posterior.size() != m_.cols()) {
    throw std::invalid_argument("transition mix: dimension mismatch");
  }
  return m_ * clean_posterior;
}

bool TransitionMatrix::diagonally_dominant() const {
  for (Eigen::Index j = 0; j < m_.cols(); ++j) {
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
      if (i != j && !(m_(j, j) > m_(i, j))) return false;
    }
  }
  return true;
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "symmetric" || name == "sym") return NoiseKind::kSymmetric;
  if (name == "asymmetric" || name == "asym") return NoiseKind::kAsymmetric;
  if (name == "pair") return NoiseKind::kPair;
  throw std::invalid_argument("unknown noise kind '" + std::string(name) + "'");
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kSymmetric: return "symmetric";
    case NoiseKind::kAsymmetric: return "asymmetric";
    case NoiseKind::kPair: return "pair";
  }
  return "unknown";
}

TransitionMatrix build_symmetric(int classes, double rate) {
  check_classes(classes);
  const double c = classes;
  // The endpoint (uniform matrix) is allowed; it is not diagonally dominant.
  check_rate(rate, (c - 1.0) / c, "symmetric", true);
  Matrix m = Matrix::Constant(classes, classes, rate / (c - 1.0));
  m.diagonal().setConstant(1.0 - rate);
  return TransitionMatrix(std::move(m));
}

TransitionMatrix build_pair(int classes, double rate) {
  check_classes(classes);
  check_rate(rate, 0.5, "pair");
  Matrix m = Matrix::Zero(classes, classes);
  for (int j = 0; j < classes; ++j) {
    m(j, j) = 1.0 - rate;
    m((j + 1) % classes, j) += rate;
  }
  return TransitionMatrix(std::move(m));
}

TransitionMatrix build_asymmetric(int classes, double rate, std::uint64_t seed) {
  check_classes(classes);
  check_rate(rate, 0.5, "asymmetric");
  RngStream rng(seed, StreamId::kAsymmetric);
  Matrix m = Matrix::Zero(classes, classes);
  for (int j = 0; j < classes; ++j) {
    const double column_rate = rng.uniform(0.5 * rate, rate);
    m(j, j) = 1.0 - column_rate;
    m((j + 1) % classes, j) += column_rate;
  }
  return TransitionMatrix(std::move(m));
}

TransitionMatrix build_transition(const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::kSymmetric: return build_symmetric(spec.classes, spec.rate);
    case NoiseKind::kAsymmetric: return build_asymmetric(spec.classes, spec.rate, spec.seed);
    case NoiseKind::kPair: return build_pair(spec.classes, spec.rate);
  }
  throw std::invalid_argument("unknown noise kind");
}

std::vector<int> corrupt_labels(std::span<const int> clean, const TransitionMatrix& t, RngStream& rng) {
  const int c = t.classes();
  std::vector<int> noisy(clean.size());
  for (size_t n = 0; n < clean.size(); ++n) {
    const int y = clean[n];
    if (y < 0 || y >= c) {
      std::ostringstream msg;
      msg << "corrupt_labels: label " << y << " at index " << n << " outside [0, " << c << ")";
      throw std::invalid_argument(msg.str());
    }
    // Inverse-CDF draw; the last class absorbs rounding in the cumulative sum.
    const double u = rng.uniform();
    double cumulative = 0.0;
    int drawn = c - 1;
    for (int i = 0; i < c; ++i) {
      cumulative += t(i, y);
      if (u < cumulative) {
        drawn = i;
        break;
      }
    }
    while (t(drawn, y) == 0.0 && drawn > 0) --drawn;
    noisy[n] = drawn;
  }
  return noisy;
}

PerturbedTransition perturb_with_magnitudes(const TransitionMatrix& t, double gamma,
                                            const Matrix& abs_delta) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("perturbation gamma must be finite and non-negative");
  }
  if (abs_delta.rows() != t.classes() || abs_delta.cols() != t.classes()) {
    throw std::invalid_argument("perturbation magnitudes must be C x C");
  }
  if ((abs_delta.array() < 0.0).any()) {
    throw std::invalid_argument("perturbation magnitudes must be non-negative");
  }
  if (gamma == 0.0) return {t.matrix(), t, 0.0};
  Matrix biased = t.matrix() + gamma * abs_delta;
  Matrix normalized = biased;
  for (Eigen::Index j = 0; j < normalized.cols(); ++j) {
    normalized.col(j) /= normalized.col(j).sum();
  }
  TransitionMatrix tn(std::move(normalized));
  const double err = relative_l1_error(t, tn);
  return {std::move(biased), std::move(tn), err};
}

PerturbedTransition perturb_and_normalize(const TransitionMatrix& t, double gamma, RngStream& rng) {
  const int c = t.classes();
  Matrix magnitudes(c, c);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) magnitudes(i, j) = std::abs(rng.normal());
  }
  return perturb_with_magnitudes(t, gamma, magnitudes);
}

double relative_l1_error(const TransitionMatrix& reference, const TransitionMatrix& estimate) {
  if (reference.classes() != estimate.classes()) {
    throw std::invalid_argument("relative_l1_error: class count mismatch");
  }
  return entrywise_l1(reference.matrix() - estimate.matrix()) / entrywise_l1(reference.matrix());
}

void write_transition(std::ostream& os, const TransitionMatrix& t, std::string_view header) {
  if (!header.empty()) os << "# " << header << '\n';
  const int c = t.classes();
  os << c << '\n' << std::setprecision(17);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) {
      if (j) os << ' ';
      os << t(i, j);
    }
    os << '\n';
  }
}

TransitionMatrix read_transition(std::istream& is) {
  std::string line;
  int c = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream first(line);
    if (!(first >> c) || c < 1) throw std::runtime_error("transition file: bad class count line '" + line + "'");
    break;
  }
  if (c < 1) throw std::runtime_error("transition file: missing class count");
  Matrix m(c, c);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) {
      if (!(is >> m(i, j))) throw std::runtime_error("transition file: truncated matrix");
    }
  }
  return TransitionMatrix(std::move(m));
}

void save_transition(const std::string& path, const TransitionMatrix& t, std::string_view header) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_transition(os, t, header);
}

TransitionMatrix load_transition(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_transition(is);
}

}  // namespace lnlab
