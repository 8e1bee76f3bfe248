// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "lnlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

namespace lnlab {

LabeledDataset LabeledDataset::subset(std::span<const size_t> indices) const {
  LabeledDataset out;
  out.classes = classes;
  out.corrupted = corrupted;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.reserve(indices.size());
  if (clean_labels) out.clean_labels.emplace().reserve(indices.size());
  for (size_t k = 0; k < indices.size(); ++k) {
    const size_t i = indices[k];
    if (i >= size()) throw std::out_of_range("dataset subset index out of range");
    out.features.row(static_cast<Eigen::Index>(k)) = features.row(static_cast<Eigen::Index>(i));
    out.labels.push_back(labels[i]);
    if (clean_labels) out.clean_labels->push_back((*clean_labels)[i]);
  }
  return out;
}

std::vector<bool> LabeledDataset::correct_mask() const {
  if (!clean_labels) throw std::logic_error("dataset has no clean labels");
  std::vector<bool> mask(size());
  for (size_t i = 0; i < size(); ++i) mask[i] = labels[i] == (*clean_labels)[i];
  return mask;
}

void LabeledDataset::validate() const {
  if (static_cast<size_t>(features.rows()) != labels.size()) {
    throw std::invalid_argument("dataset: feature rows do not match label count");
  }
  if (clean_labels && clean_labels->size() != labels.size()) {
    throw std::invalid_argument("dataset: clean label count mismatch");
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) throw std::invalid_argument("dataset: label out of range");
  }
}

SyntheticSpec SyntheticSpec::on_circle(int classes, int dim, double radius, double sigma, int n,
                                       std::uint64_t seed) {
  SyntheticSpec s;
  s.classes = classes;
  s.dim = dim;
  s.sigma = sigma;
  s.n = n;
  s.seed = seed;
  s.means = Matrix::Zero(classes, dim);
  if (dim == 1) {
    if (classes != 2) throw std::invalid_argument("one-dimensional mixtures support exactly 2 classes");
    s.means(0, 0) = radius;
    s.means(1, 0) = -radius;
    return s;
  }
  for (int j = 0; j < classes; ++j) {
    const double angle = 2.0 * std::numbers::pi * j / classes;
    s.means(j, 0) = radius * std::cos(angle);
    s.means(j, 1) = radius * std::sin(angle);
  }
  return s;
}

void SyntheticSpec::validate() const {
  if (classes < 2 || dim < 1 || n < 0 || anchors_per_class < 0) {
    throw std::invalid_argument("synthetic spec: bad sizes");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("synthetic spec: sigma must be positive");
  if (means.rows() != classes || means.cols() != dim) throw std::invalid_argument("synthetic spec: means must be C x d");
  for (int a = 0; a < classes; ++a) {
    for (int b = a + 1; b < classes; ++b) {
      if ((means.row(a) - means.row(b)).norm() == 0.0) throw std::invalid_argument("synthetic spec: means must be distinct");
    }
  }
}

GaussianMixture::GaussianMixture(SyntheticSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  // Distance along mean j's direction where every logit gap reaches 40 nats.
  constexpr double kLogitGap = 40.0;
  const double var = spec_.sigma * spec_.sigma;
  anchor_distance_.assign(static_cast<size_t>(spec_.classes), 0.0);
  for (int j = 0; j < spec_.classes; ++j) {
    const Vector mj = spec_.means.row(j).transpose();
    const double norm = mj.norm();
    if (norm == 0.0) {
      anchor_distance_[static_cast<size_t>(j)] = std::nan("");
      continue;
    }
    const Vector dir = mj / norm;
    double distance = norm;
    for (int k = 0; k < spec_.classes; ++k) {
      if (k == j) continue;
      const Vector mk = spec_.means.row(k).transpose();
      const double slope = (mj - mk).dot(dir);
      if (slope <= 0.0) {
        distance = std::nan("");
        break;
      }
      const double offset = 0.5 * (mj.squaredNorm() - mk.squaredNorm());
      distance = std::max(distance, (kLogitGap * var + offset) / slope);
    }
    anchor_distance_[static_cast<size_t>(j)] = distance;
  }
}

Vector GaussianMixture::posterior(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != spec_.dim) throw std::invalid_argument("posterior: dimension mismatch");
  Eigen::Map<const Vector> point(x.data(), spec_.dim);
  Vector logits(spec_.classes);
  const double var = spec_.sigma * spec_.sigma;
  for (int k = 0; k < spec_.classes; ++k) {
    logits[k] = -(point - spec_.means.row(k).transpose()).squaredNorm() / (2.0 * var);
  }
  return stable_softmax(logits);
}

Matrix GaussianMixture::posteriors(const Matrix& features) const {
  Matrix out(features.rows(), spec_.classes);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Vector row = features.row(i).transpose();
    out.row(i) = posterior(std::span<const double>(row.data(), static_cast<size_t>(row.size()))).transpose();
  }
  return out;
}

Vector GaussianMixture::anchor_point(int j, int k) const {
  const double distance = anchor_distance_.at(static_cast<size_t>(j));
  if (!std::isfinite(distance)) {
    throw std::invalid_argument("class mean is not extreme along its own direction; no anchor exists");
  }
  const Vector mj = spec_.means.row(j).transpose();
  return mj / mj.norm() * distance * (1.0 + 0.1 * k);
}

LabeledDataset GaussianMixture::sample(int n, RngStream& rng, bool with_anchors) const {
  const int anchors = with_anchors ? spec_.anchors_per_class * spec_.classes : 0;
  const int total = n + anchors;
  LabeledDataset data;
  data.classes = spec_.classes;
  data.features.resize(total, spec_.dim);
  data.labels.resize(static_cast<size_t>(total));
  for (int i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec_.classes)));
    data.labels[static_cast<size_t>(i)] = y;
    for (int d = 0; d < spec_.dim; ++d) data.features(i, d) = spec_.means(y, d) + spec_.sigma * rng.normal();
  }
  int row = n;
  for (int j = 0; j < spec_.classes && with_anchors; ++j) {
    for (int k = 0; k < spec_.anchors_per_class; ++k, ++row) {
      data.features.row(row) = anchor_point(j, k).transpose();
      data.labels[static_cast<size_t>(row)] = j;
    }
  }
  std::vector<size_t> order(static_cast<size_t>(total));
  std::iota(order.begin(), order.end(), size_t{0});
  rng.shuffle(std::span<size_t>(order));
  LabeledDataset shuffled = data.subset(order);
  shuffled.clean_labels = shuffled.labels;
  return shuffled;
}

SyntheticData generate_gaussian_mixture(const SyntheticSpec& spec) {
  GaussianMixture oracle(spec);
  RngStream rng(spec.seed, StreamId::kData);
  LabeledDataset data = oracle.sample(spec.n, rng, spec.anchors_per_class > 0);
  return {std::move(data), std::move(oracle)};
}

namespace {

std::uint32_t read_be32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IdxError(path + ": truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::string hex(std::uint32_t v) {
  std::ostringstream s;
  s << "0x" << std::hex << std::setw(8) << std::setfill('0') << v;
  return s.str();
}

}  // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path, int classes) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw IdxError("cannot open " + images_path);
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw IdxError("cannot open " + labels_path);

  const std::uint32_t image_magic = read_be32(images, images_path);
  if (image_magic != kIdxImageMagic) {
    throw IdxError(images_path + ": bad image magic " + hex(image_magic) + ", expected " + hex(kIdxImageMagic));
  }
  const std::uint32_t label_magic = read_be32(labels, labels_path);
  if (label_magic != kIdxLabelMagic) {
    throw IdxError(labels_path + ": bad label magic " + hex(label_magic) + ", expected " + hex(kIdxLabelMagic));
  }
  const std::uint32_t count = read_be32(images, images_path);
  const std::uint32_t rows = read_be32(images, images_path);
  const std::uint32_t cols = read_be32(images, images_path);
  const std::uint32_t label_count = read_be32(labels, labels_path);
  if (count != label_count) {
    throw IdxError("IDX count mismatch: " + std::to_string(count) + " images vs " + std::to_string(label_count) +
                   " labels");
  }
  const size_t pixels = static_cast<size_t>(rows) * cols;
  std::vector<unsigned char> image_bytes(static_cast<size_t>(count) * pixels);
  if (!images.read(reinterpret_cast<char*>(image_bytes.data()), static_cast<std::streamsize>(image_bytes.size()))) {
    throw IdxError(images_path + ": truncated image data");
  }
  std::vector<unsigned char> label_bytes(count);
  if (!labels.read(reinterpret_cast<char*>(label_bytes.data()), static_cast<std::streamsize>(label_bytes.size()))) {
    throw IdxError(labels_path + ": truncated label data");
  }

  LabeledDataset data;
  data.classes = classes;
  data.features.resize(count, static_cast<Eigen::Index>(pixels));
  for (size_t i = 0; i < image_bytes.size(); ++i) data.features.data()[i] = image_bytes[i] / 255.0;
  data.labels.assign(label_bytes.begin(), label_bytes.end());
  for (size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] >= classes) {
      throw IdxError(labels_path + ": label " + std::to_string(data.labels[i]) + " at index " + std::to_string(i) +
                     " exceeds class count");
    }
  }
  data.clean_labels = data.labels;
  return data;
}

void write_idx(const std::string& images_path, const std::string& labels_path,
               std::span<const std::uint8_t> pixels, int rows, int cols, std::span<const std::uint8_t> labels) {
  const size_t per_image = static_cast<size_t>(rows) * static_cast<size_t>(cols);
  if (per_image == 0 || pixels.size() != per_image * labels.size()) {
    throw std::invalid_argument("write_idx: pixel count does not match labels x rows x cols");
  }
  std::ofstream images(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!images || !lab) throw IdxError("write_idx: cannot open output files");
  write_be32(images, kIdxImageMagic);
  write_be32(images, static_cast<std::uint32_t>(labels.size()));
  write_be32(images, static_cast<std::uint32_t>(rows));
  write_be32(images, static_cast<std::uint32_t>(cols));
  images.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  write_be32(lab, kIdxLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(labels.size()));
  lab.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

LabeledDataset subsample(const LabeledDataset& data, size_t n, RngStream& rng) {
  if (n > data.size()) throw std::invalid_argument("subsample larger than dataset");
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  rng.shuffle(std::span<size_t>(order));
  order.resize(n);
  return data.subset(order);
}

LabeledDataset corrupt_dataset(LabeledDataset clean, const TransitionMatrix& t, RngStream& rng) {
  if (clean.corrupted) throw std::logic_error("dataset is already corrupted");
  if (clean.classes != t.classes()) throw std::invalid_argument("corrupt_dataset: class count mismatch");
  clean.clean_labels = clean.labels;
  clean.labels = corrupt_labels(clean.labels, t, rng);
  clean.corrupted = true;
  return clean;
}

TrainValSplit split(const LabeledDataset& data, double val_fraction, RngStream& rng) {
  if (!data.corrupted) {
    throw std::logic_error("split: corrupt labels before splitting so validation labels are noisy");
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw std::invalid_argument("split: fraction must lie in (0, 1)");
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  rng.shuffle(std::span<size_t>(order));
  const auto held_out = static_cast<size_t>(std::llround(static_cast<double>(data.size()) * val_fraction));
  std::span<const size_t> all(order);
  return {data.subset(all.subspan(held_out)), data.subset(all.first(held_out))};
}

Standardizer Standardizer::fit(const Matrix& features) {
  if (features.rows() == 0) throw std::invalid_argument("standardizer: empty features");
  Standardizer s;
  const double n = static_cast<double>(features.rows());
  s.mean = features.colwise().sum().transpose() / n;
  s.scale.resize(features.cols());
  for (Eigen::Index d = 0; d < features.cols(); ++d) {
    const double var = (features.col(d).array() - s.mean[d]).square().sum() / n;
    s.scale[d] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return s;
}

void Standardizer::apply(Matrix& features) const {
  if (features.cols() != mean.size()) throw std::invalid_argument("standardizer: dimension mismatch");
  features.rowwise() -= mean.transpose();
  features.array().rowwise() /= scale.transpose().array();
}

void write_dataset_csv(const std::string& path, const LabeledDataset& data) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (int d = 0; d < data.dim(); ++d) os << 'x' << d << ',';
  os << "clean_label,noisy_label\n" << std::setprecision(17);
  for (size_t i = 0; i < data.size(); ++i) {
    for (int d = 0; d < data.dim(); ++d) os << data.features(static_cast<Eigen::Index>(i), d) << ',';
    os << (data.clean_labels ? (*data.clean_labels)[i] : -1) << ',' << data.labels[i] << '\n';
  }
}

LabeledDataset read_dataset_csv(const std::string& path, int classes) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file");
  const auto columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  const int dim = columns - 2;
  if (dim < 1) throw std::runtime_error(path + ": expected x columns then clean_label,noisy_label");
  std::vector<double> values;
  std::vector<int> clean;
  std::vector<int> noisy;
  bool any_clean_missing = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    for (int d = 0; d < dim; ++d) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error(path + ": short row");
      values.push_back(std::stod(cell));
    }
    if (!std::getline(row, cell, ',')) throw std::runtime_error(path + ": missing clean_label");
    clean.push_back(std::stoi(cell));
    if (!std::getline(row, cell, ',')) throw std::runtime_error(path + ": missing noisy_label");
    noisy.push_back(std::stoi(cell));
    any_clean_missing = any_clean_missing || clean.back() < 0;
  }
  LabeledDataset data;
  data.features = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(noisy.size()), dim);
  data.labels = noisy;
  if (!any_clean_missing) data.clean_labels = clean;
  int max_label = 0;
  for (int y : noisy) max_label = std::max(max_label, y);
  for (int y : clean) max_label = std::max(max_label, y);
  data.classes = classes > 0 ? classes : max_label + 1;
  // Exports carrying clean labels come from corrupt_dataset.
  data.corrupted = data.clean_labels.has_value();
  data.validate();
  return data;
}

}  // namespace lnlab
