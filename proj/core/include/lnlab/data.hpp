// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LNLAB_DATA_HPP_
#define LNLAB_DATA_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lnlab/noise_model.hpp"
#include "lnlab/numerics.hpp"
#include "lnlab/rng.hpp"

namespace lnlab {

/// Features plus observed labels. After corruption `labels` holds the noisy
/// labels and `clean_labels` keeps the originals for diagnostics only.
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  std::optional<std::vector<int>> clean_labels;
  int classes = 0;
  bool corrupted = false;

  size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(features.cols()); }
  LabeledDataset subset(std::span<const size_t> indices) const;
  /// Per-example flag: observed label equals clean label. Requires clean labels.
  std::vector<bool> correct_mask() const;
  void validate() const;
};

struct SyntheticSpec {
  int classes = 3;
  int dim = 2;
  Matrix means;  // classes x dim, distinct rows
  double sigma = 1.0;  // shared isotropic standard deviation
  int n = 3000;
  int anchors_per_class = 1;
  std::uint64_t seed = 0;

  /// Means spaced evenly on a circle of `radius` in the first two dimensions.
  static SyntheticSpec on_circle(int classes, int dim, double radius, double sigma, int n,
                                 std::uint64_t seed);
  void validate() const;
};

/// Equal-prior isotropic Gaussian mixture with exact class posteriors.
class GaussianMixture {
 public:
  explicit GaussianMixture(SyntheticSpec spec);

  const SyntheticSpec& spec() const { return spec_; }
  Vector posterior(std::span<const double> x) const;
  Matrix posteriors(const Matrix& features) const;

  /// Point along mean j's direction where the posterior is one-hot within 1e-10.
  /// `k` selects successively farther copies.
  Vector anchor_point(int j, int k = 0) const;

  /// n draws with uniformly random classes, then anchors_per_class anchors per
  /// class when requested, shuffled together.
  LabeledDataset sample(int n, RngStream& rng, bool with_anchors) const;

 private:
  SyntheticSpec spec_;
  std::vector<double> anchor_distance_;
};

struct SyntheticData {
  LabeledDataset dataset;
  GaussianMixture oracle;
};

/// Draws spec.n examples (plus anchors) from the kData stream of spec.seed.
SyntheticData generate_gaussian_mixture(const SyntheticSpec& spec);

class IdxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Big-endian IDX images/labels; pixels scaled to [0, 1].
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path, int classes = 10);
void write_idx(const std::string& images_path, const std::string& labels_path,
               std::span<const std::uint8_t> pixels, int rows, int cols, std::span<const std::uint8_t> labels);

/// Seeded draw of n examples without replacement (order of the draw).
LabeledDataset subsample(const LabeledDataset& data, size_t n, RngStream& rng);

/// Replaces labels with draws from T and marks the dataset corrupted.
LabeledDataset corrupt_dataset(LabeledDataset clean, const TransitionMatrix& t, RngStream& rng);

struct TrainValSplit {
  LabeledDataset train;
  LabeledDataset val;
};

/// Shuffles, then holds out round(n * val_fraction) examples.
/// Only corrupted datasets are accepted so validation labels are noisy too.
TrainValSplit split(const LabeledDataset& data, double val_fraction, RngStream& rng);

/// Per-dimension standardization fitted on one split and applied to others.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& features);
  void apply(Matrix& features) const;
};

// CSV with header x0..x{d-1},clean_label,noisy_label. A missing clean label is -1.
void write_dataset_csv(const std::string& path, const LabeledDataset& data);
LabeledDataset read_dataset_csv(const std::string& path, int classes = 0);

}  // namespace lnlab

#endif  // LNLAB_DATA_HPP_
