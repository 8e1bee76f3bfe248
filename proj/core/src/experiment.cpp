// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "lnlab/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"
#include "lnlab/transition_estimation.hpp"

namespace lnlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream os;
  for (size_t k = 0; k < values.size(); ++k) {
    if (k) os << ',';
    if constexpr (std::is_floating_point_v<T>) {
      os << format_double(values[k]);
    } else {
      os << values[k];
    }
  }
  return os.str();
}

json config_json(const Config& c) {
  json out = json::object();
  for (const auto& [k, v] : c.values()) out[k] = v;
  return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json row_json(const EpochRow& r) {
  return json{{"epoch", r.epoch},
              {"train_loss", r.train_loss},
              {"val_acc", r.val_acc},
              {"test_acc", r.test_acc},
              {"loss_correct", optional_json(r.loss_correct)},
              {"loss_incorrect", optional_json(r.loss_incorrect)},
              {"loss_var", r.loss_var},
              {"clamp_count", r.clamp_count},
              {"ce_loss_correct", optional_json(r.ce_loss_correct)},
              {"ce_loss_incorrect", optional_json(r.ce_loss_incorrect)},
              {"eps_t", optional_json(r.eps_t)}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

}  // namespace

MethodChoice parse_method(std::string_view name) {
  static const std::map<std::string, MethodChoice, std::less<>> kMethods = {
      {"ce", {Method::kCrossEntropy, false, "ce"}},
      {"forward", {Method::kForward, false, "forward"}},
      {"forward-vrnl", {Method::kForward, true, "forward-vrnl"}},
      {"reweight", {Method::kReweight, false, "reweight"}},
      {"reweight-vrnl", {Method::kReweight, true, "reweight-vrnl"}},
      {"volmin", {Method::kVolMin, false, "volmin"}},
      {"volmin-vrnl", {Method::kVolMin, true, "volmin-vrnl"}},
  };
  const auto it = kMethods.find(name);
  if (it == kMethods.end()) {
    throw ConfigError("unknown method '" + std::string(name) +
                      "' (ce, forward, forward-vrnl, reweight, reweight-vrnl, volmin, volmin-vrnl)");
  }
  return it->second;
}

double default_alpha(const MethodChoice& method, NoiseKind noise, std::string_view dataset) {
  if (!method.vrnl) return 0.0;
  switch (method.method) {
    case Method::kForward:
    case Method::kReweight:
      return noise == NoiseKind::kPair ? 0.01 : 0.1;
    case Method::kVolMin:
      return (noise == NoiseKind::kPair && dataset == "mnist") ? 0.005 : 0.05;
    case Method::kCrossEntropy:
      return 0.1;
  }
  return 0.0;
}

namespace {

double resolve_alpha(const MethodChoice& m, const std::optional<double>& explicit_alpha, NoiseKind noise,
                     std::string_view dataset) {
  if (!m.vrnl && m.method != Method::kCrossEntropy) {
    if (explicit_alpha && *explicit_alpha != 0.0) {
      throw ConfigError("method '" + m.name + "' has no variance term; use '" + m.name + "-vrnl' or alpha = 0");
    }
    return 0.0;
  }
  return explicit_alpha ? *explicit_alpha : default_alpha(m, noise, dataset);
}

}  // namespace

ExperimentConfig ExperimentConfig::from(const Config& c) {
  ExperimentConfig e;
  e.dataset = c.get("dataset");
  if (e.dataset != "synthetic" && e.dataset != "mnist") throw ConfigError("dataset must be synthetic or mnist");
  e.classes = e.dataset == "mnist" ? 10 : c.get_int("classes");
  e.dim = c.get_int("dim");
  e.n = c.get_int("n");
  e.n_test = c.get_int("n_test");
  e.radius = c.get_double("radius");
  e.sigma = c.get_double("sigma");
  e.anchors_per_class = c.get_int("anchors_per_class");
  e.mnist_dir = c.get("mnist_dir");
  e.mnist_subsample = c.get_int("mnist_subsample");
  e.val_fraction = c.get_double("val_fraction");

  try {
    e.noise = parse_noise_kind(c.get("noise"));
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  e.noise_rate = c.get_double("noise_rate");

  e.method = parse_method(c.get("method"));
  if (c.get("alpha") != "auto") e.alpha_explicit = c.get_double("alpha");
  e.risk.method = e.method.method;
  e.risk.alpha = resolve_alpha(e.method, e.alpha_explicit, e.noise, e.dataset);
  e.risk.lambda = c.get_double("lambda");
  try {
    e.risk.mean_mode = parse_mean_mode(c.get("mean_mode"));
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  e.risk.weight_floor = c.get_double("weight_floor");
  e.transition = c.get("transition");
  if (e.transition != "estimate" && e.transition != "true") throw ConfigError("transition must be estimate or true");
  e.transition_file = c.get("transition_file");
  e.percentile = c.get_double("percentile");
  e.warmup_epochs = c.get_int("warmup_epochs");
  const std::string hidden = c.get("hidden");
  if (hidden == "auto") {
    e.hidden = e.dataset == "mnist" ? std::vector<int>{256} : std::vector<int>{32, 32};
  } else if (hidden != "none") {
    e.hidden = c.get_ints("hidden");
  }

  e.optimizer.learning_rate = c.get_double("lr");
  e.optimizer.momentum = c.get_double("momentum");
  e.optimizer.weight_decay = c.get_double("weight_decay");
  e.optimizer.batch_size = c.get_int("batch_size");
  e.optimizer.epochs = c.get_int("epochs");
  e.optimizer.lr_drops = c.get_ints("lr_drops");
  e.optimizer.drop_factor = c.get_double("drop_factor");
  e.seed = c.get_u64("seed");
  e.optimizer.seed = e.seed;
  e.deterministic = c.get_bool("deterministic");
  e.save_every = c.get_int("save_every");

  e.gammas = c.get_doubles("gammas");
  e.sweep_methods = c.get_strings("sweep_methods");
  for (const auto& s : c.get_strings("seeds")) {
    try {
      e.seeds.push_back(std::stoull(s));
    } catch (const std::exception&) {
      throw ConfigError("seeds: '" + s + "' is not an unsigned integer");
    }
  }
  e.checkpoint = c.get("checkpoint");

  try {
    e.risk.validate();
    e.optimizer.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  if (!(e.val_fraction > 0.0 && e.val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
  if (!(e.percentile > 0.0 && e.percentile <= 100.0)) throw ConfigError("percentile must lie in (0, 100]");
  if (e.warmup_epochs < 1) throw ConfigError("warmup_epochs must be positive");
  if (e.classes < 2) throw ConfigError("classes must be at least 2");
  if (e.dim < 1 || e.n < 1 || e.n_test < 1) throw ConfigError("dim, n and n_test must be positive");
  if (!(e.sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (e.anchors_per_class < 0) throw ConfigError("anchors_per_class must be non-negative");
  for (int h : e.hidden) {
    if (h < 1) throw ConfigError("hidden widths must be positive");
  }
  try {
    (void)build_transition({e.noise, e.noise_rate, e.classes, e.seed});
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  return e;
}

Config ExperimentConfig::resolved() const {
  Config c;
  c.set("dataset", dataset);
  c.set("classes", std::to_string(classes));
  c.set("dim", std::to_string(dim));
  c.set("n", std::to_string(n));
  c.set("n_test", std::to_string(n_test));
  c.set("radius", format_double(radius));
  c.set("sigma", format_double(sigma));
  c.set("anchors_per_class", std::to_string(anchors_per_class));
  c.set("mnist_dir", mnist_dir);
  c.set("mnist_subsample", std::to_string(mnist_subsample));
  c.set("val_fraction", format_double(val_fraction));
  c.set("noise", to_string(noise));
  c.set("noise_rate", format_double(noise_rate));
  c.set("method", method.name);
  c.set("alpha", format_double(risk.alpha));
  c.set("lambda", format_double(risk.lambda));
  c.set("mean_mode", to_string(risk.mean_mode));
  c.set("weight_floor", format_double(risk.weight_floor));
  c.set("transition", transition);
  c.set("transition_file", transition_file);
  c.set("percentile", format_double(percentile));
  c.set("warmup_epochs", std::to_string(warmup_epochs));
  c.set("hidden", hidden.empty() ? "none" : join(hidden));
  c.set("lr", format_double(optimizer.learning_rate));
  c.set("momentum", format_double(optimizer.momentum));
  c.set("weight_decay", format_double(optimizer.weight_decay));
  c.set("batch_size", std::to_string(optimizer.batch_size));
  c.set("epochs", std::to_string(optimizer.epochs));
  c.set("lr_drops", join(optimizer.lr_drops));
  c.set("drop_factor", format_double(optimizer.drop_factor));
  c.set("seed", std::to_string(seed));
  c.set("deterministic", deterministic ? "true" : "false");
  c.set("save_every", std::to_string(save_every));
  c.set("gammas", join(gammas));
  c.set("sweep_methods", join(sweep_methods));
  c.set("seeds", join(seeds));
  c.set("checkpoint", checkpoint);
  return c;
}

ExperimentConfig ExperimentConfig::with_seed(std::uint64_t s) const {
  ExperimentConfig e = *this;
  e.seed = s;
  e.optimizer.seed = s;
  return e;
}

ExperimentConfig ExperimentConfig::with_method(std::string_view name) const {
  ExperimentConfig e = *this;
  e.method = parse_method(name);
  e.risk.method = e.method.method;
  if (!e.method.vrnl && e.method.method != Method::kCrossEntropy) {
    e.risk.alpha = 0.0;
  } else {
    e.risk.alpha = alpha_explicit ? *alpha_explicit : default_alpha(e.method, noise, dataset);
  }
  return e;
}

LabeledDataset corrupted_pool(const ExperimentConfig& cfg, TransitionMatrix* t_out) {
  const TransitionMatrix t = build_transition({cfg.noise, cfg.noise_rate, cfg.classes, cfg.seed});
  LabeledDataset clean;
  if (cfg.dataset == "synthetic") {
    SyntheticSpec spec = SyntheticSpec::on_circle(cfg.classes, cfg.dim, cfg.radius, cfg.sigma, cfg.n, cfg.seed);
    spec.anchors_per_class = cfg.anchors_per_class;
    clean = generate_gaussian_mixture(spec).dataset;
  } else {
    const fs::path dir(cfg.mnist_dir);
    LabeledDataset full = load_idx((dir / "train-images-idx3-ubyte").string(),
                                   (dir / "train-labels-idx1-ubyte").string());
    if (cfg.mnist_subsample > 0 && static_cast<size_t>(cfg.mnist_subsample) < full.size()) {
      RngStream rng(cfg.seed, StreamId::kSubsample);
      clean = subsample(full, static_cast<size_t>(cfg.mnist_subsample), rng);
    } else {
      clean = std::move(full);
    }
  }
  RngStream corruption(cfg.seed, StreamId::kCorruption);
  LabeledDataset pool = corrupt_dataset(std::move(clean), t, corruption);
  if (t_out) *t_out = t;
  return pool;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData out;
  LabeledDataset pool = corrupted_pool(cfg, &out.true_transition);
  RngStream split_rng(cfg.seed, StreamId::kSplit);
  TrainValSplit parts = split(pool, cfg.val_fraction, split_rng);
  out.train = std::move(parts.train);
  out.val = std::move(parts.val);
  if (cfg.dataset == "synthetic") {
    SyntheticSpec spec = SyntheticSpec::on_circle(cfg.classes, cfg.dim, cfg.radius, cfg.sigma, cfg.n, cfg.seed);
    GaussianMixture oracle(spec);
    RngStream test_rng(cfg.seed, StreamId::kTestData);
    out.test = oracle.sample(cfg.n_test, test_rng, false);
    const Standardizer s = Standardizer::fit(out.train.features);
    s.apply(out.train.features);
    s.apply(out.val.features);
    s.apply(out.test.features);
  } else {
    const fs::path dir(cfg.mnist_dir);
    out.test = load_idx((dir / "t10k-images-idx3-ubyte").string(), (dir / "t10k-labels-idx1-ubyte").string());
  }
  return out;
}

std::vector<int> network_widths(const ExperimentConfig& cfg, int input_dim) {
  std::vector<int> widths{input_dim};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(cfg.classes);
  return widths;
}

const MlpParams& WarmupCache::get(const ExperimentConfig& cfg, const PreparedData& data) {
  if (!params_) {
    RngStream init_rng(cfg.seed, StreamId::kInit);
    MlpParams init = MlpParams::init(network_widths(cfg, data.train.dim()), init_rng);
    OptimizerConfig opt = cfg.optimizer;
    opt.epochs = cfg.warmup_epochs;
    std::erase_if(opt.lr_drops, [&](int e) { return e >= opt.epochs; });
    RiskSpec ce;
    ce.method = Method::kCrossEntropy;
    params_ = train(ce, {data.train, data.val, data.test}, std::move(init), opt).final_params;
  }
  return *params_;
}

RunOutcome run_method(const ExperimentConfig& cfg, const PreparedData& data, WarmupCache& warmup,
                      const std::optional<TransitionMatrix>& transition_override, const EpochCallback& on_epoch) {
  const auto started = std::chrono::steady_clock::now();
  RunOutcome out;
  RngStream init_rng(cfg.seed, StreamId::kInit);
  MlpParams init = MlpParams::init(network_widths(cfg, data.train.dim()), init_rng);

  MethodInputs inputs;
  inputs.true_transition = data.true_transition;
  const Method m = cfg.method.method;
  if (m == Method::kForward || m == Method::kReweight) {
    if (transition_override) {
      out.transition = *transition_override;
    } else if (!cfg.transition_file.empty()) {
      out.transition = load_transition(cfg.transition_file);
    } else if (cfg.transition == "true") {
      out.transition = data.true_transition;
    } else {
      const PosteriorSnapshot g = PosteriorSnapshot::from_model(warmup.get(cfg, data));
      out.transition = estimate_transition_anchor(g, data.train.features, data.train.labels, cfg.percentile);
    }
    if (out.transition->classes() != cfg.classes) throw ConfigError("transition matrix has the wrong class count");
    inputs.transition = out.transition;
    out.eps_t = relative_l1_error(data.true_transition, *out.transition);
  }
  if (m == Method::kReweight) {
    const MlpParams& snapshot = warmup.get(cfg, data);
    const PosteriorSnapshot g = PosteriorSnapshot::from_model(snapshot);
    inputs.betas = reweight_factors(g, *out.transition, data.train.features, data.train.labels).betas;
    init = snapshot;
  }
  out.result = train(cfg.risk, {data.train, data.val, data.test}, std::move(init), cfg.optimizer, inputs, on_epoch);
  if (m == Method::kVolMin && out.result.learned_transition) {
    out.transition = out.result.learned_transition;
    out.eps_t = relative_l1_error(data.true_transition, *out.transition);
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

std::vector<SweepRow> bias_sweep(const ExperimentConfig& cfg) {
  if (cfg.gammas.empty()) throw ConfigError("bias sweep: empty gamma grid");
  if (cfg.seeds.empty()) throw ConfigError("bias sweep: empty seed list");
  bool has_vrnl = false, has_plain = false;
  for (const auto& name : cfg.sweep_methods) {
    const MethodChoice m = parse_method(name);
    if (m.method != Method::kForward && m.method != Method::kReweight) {
      throw ConfigError("bias sweep supports forward and reweight methods, got '" + name + "'");
    }
    (m.vrnl ? has_vrnl : has_plain) = true;
  }
  if (!has_vrnl || !has_plain) throw ConfigError("bias sweep needs at least one VRNL and one plain method");
  for (double g : cfg.gammas) {
    if (!(g >= 0.0)) throw ConfigError("bias sweep: gamma must be non-negative");
  }

  std::vector<SweepRow> rows;
  for (const std::uint64_t seed : cfg.seeds) {
    const ExperimentConfig run = cfg.with_seed(seed);
    const PreparedData data = prepare_data(run);
    WarmupCache warmup;
    RngStream rng(seed, StreamId::kPerturbation);
    const int c = data.true_transition.classes();
    Matrix magnitudes(c, c);
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < c; ++j) magnitudes(i, j) = std::abs(rng.normal());
    }
    for (const double gamma : cfg.gammas) {
      const PerturbedTransition pt = perturb_with_magnitudes(data.true_transition, gamma, magnitudes);
      for (const auto& name : cfg.sweep_methods) {
        const RunOutcome outcome = run_method(run.with_method(name), data, warmup, pt.normalized);
        rows.push_back({name, gamma, seed, pt.relative_error, outcome.result.report.best_test_acc});
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.method != b.method) return a.method < b.method;
    if (a.gamma != b.gamma) return a.gamma < b.gamma;
    return a.seed < b.seed;
  });
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "method,gamma,seed,eps_t,test_acc\n";
  for (const auto& r : rows) {
    os << r.method << ',' << format_double(r.gamma) << ',' << r.seed << ',' << format_double(r.eps_t) << ','
       << format_double(r.test_acc) << '\n';
  }
}

void cmd_corrupt(const ExperimentConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  TransitionMatrix t = TransitionMatrix::identity(2);
  const LabeledDataset pool = corrupted_pool(cfg, &t);
  write_dataset_csv((fs::path(out_dir) / "noisy_dataset.csv").string(), pool);
  std::ostringstream header;
  header << "true transition: " << to_string(cfg.noise) << " rate " << format_double(cfg.noise_rate) << " seed "
         << cfg.seed;
  save_transition((fs::path(out_dir) / "transition.txt").string(), t, header.str());
  size_t flipped = 0;
  for (size_t i = 0; i < pool.size(); ++i) flipped += pool.labels[i] != (*pool.clean_labels)[i];
  write_json(fs::path(out_dir) / "corrupt_summary.json",
             json{{"command", "corrupt"},
                  {"config", config_json(cfg.resolved())},
                  {"examples", pool.size()},
                  {"flipped", flipped},
                  {"flip_fraction", pool.size() ? static_cast<double>(flipped) / static_cast<double>(pool.size()) : 0.0},
                  {"transition", matrix_json(t.matrix())}});
}

void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto started = std::chrono::steady_clock::now();
  const fs::path out(out_dir);
  fs::create_directories(out);
  const PreparedData data = prepare_data(cfg);
  WarmupCache warmup;
  EpochCallback on_epoch;
  if (cfg.save_every > 0) {
    fs::create_directories(out / "checkpoints");
    on_epoch = [&](int epoch, const MlpParams& params) {
      if ((epoch + 1) % cfg.save_every != 0) return;
      std::ostringstream name;
      name << "epoch_" << std::setw(4) << std::setfill('0') << epoch << ".txt";
      save_checkpoint((out / "checkpoints" / name.str()).string(), params);
    };
  }
  const RunOutcome outcome = run_method(cfg, data, warmup, std::nullopt, on_epoch);
  const TrainReport& report = outcome.result.report;

  {
    std::ofstream csv = open_out(out / "report.csv");
    write_report_csv(csv, report);
  }
  save_checkpoint((out / "checkpoint_best.txt").string(), outcome.result.best_params);
  save_checkpoint((out / "checkpoint_final.txt").string(), outcome.result.final_params);
  json transition = nullptr;
  if (outcome.transition) {
    std::string provenance;
    if (cfg.method.method == Method::kVolMin) {
      provenance = "learned jointly with the classifier, best epoch " + std::to_string(report.best_epoch);
    } else if (!cfg.transition_file.empty()) {
      provenance = "loaded from " + cfg.transition_file;
    } else if (cfg.transition == "true") {
      provenance = "true transition used for corruption";
    } else {
      provenance = "anchor estimate at percentile " + format_double(cfg.percentile) + " from a " +
                   std::to_string(cfg.warmup_epochs) + "-epoch cross-entropy model";
    }
    save_transition((out / "transition_used.txt").string(), *outcome.transition, provenance);
    transition = json{{"provenance", provenance},
                      {"eps_t", optional_json(outcome.eps_t)},
                      {"matrix", matrix_json(outcome.transition->matrix())}};
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json(out / "summary.json",
             json{{"command", "train"},
                  {"config", config_json(cfg.resolved())},
                  {"best_epoch", report.best_epoch},
                  {"best_val_acc", report.best_val_acc},
                  {"best_test_acc", report.best_test_acc},
                  {"final", report.rows.empty() ? json(nullptr) : row_json(report.rows.back())},
                  {"true_transition", matrix_json(data.true_transition.matrix())},
                  {"transition", transition},
                  {"wall_time_seconds", wall}});
}

void cmd_bias_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto started = std::chrono::steady_clock::now();
  const fs::path out(out_dir);
  fs::create_directories(out);
  const std::vector<SweepRow> rows = bias_sweep(cfg);
  {
    std::ofstream csv = open_out(out / "bias_sweep.csv");
    write_sweep_csv(csv, rows);
  }
  std::map<std::pair<std::string, double>, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    auto& slot = acc[{r.method, r.gamma}];
    slot.first += r.test_acc;
    slot.second += 1;
  }
  json means = json::array();
  for (const auto& [key, v] : acc) {
    means.push_back(json{{"method", key.first}, {"gamma", key.second}, {"mean_test_acc", v.first / v.second}});
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json(out / "summary.json", json{{"command", "bias-sweep"},
                                        {"config", config_json(cfg.resolved())},
                                        {"mean_accuracy", means},
                                        {"wall_time_seconds", wall}});
}

namespace {

int epoch_from_name(const fs::path& p) {
  const std::string stem = p.stem().string();
  const auto us = stem.rfind('_');
  if (us == std::string::npos) return -1;
  int epoch = -1;
  const auto res = std::from_chars(stem.data() + us + 1, stem.data() + stem.size(), epoch);
  return res.ec == std::errc() ? epoch : -1;
}

}  // namespace

void cmd_diagnose(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.checkpoint.empty()) throw ConfigError("diagnose: set checkpoint to a checkpoint file or directory");
  std::vector<fs::path> files;
  if (fs::is_directory(cfg.checkpoint)) {
    for (const auto& entry : fs::directory_iterator(cfg.checkpoint)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(cfg.checkpoint)) {
    files.push_back(cfg.checkpoint);
  } else {
    throw ConfigError("diagnose: checkpoint '" + cfg.checkpoint + "' does not exist");
  }
  if (files.empty()) throw ConfigError("diagnose: no checkpoints in " + cfg.checkpoint);

  const PreparedData data = prepare_data(cfg);
  const Method m = cfg.method.method;
  LossHead head = LossHead::cross_entropy();
  std::vector<double> betas;
  if (m != Method::kCrossEntropy) {
    std::optional<TransitionMatrix> t;
    if (!cfg.transition_file.empty()) {
      t = load_transition(cfg.transition_file);
    } else if (cfg.transition == "true" && m != Method::kVolMin) {
      t = data.true_transition;
    } else {
      throw ConfigError("diagnose: set transition_file (e.g. transition_used.txt from the training run)");
    }
    if (m == Method::kReweight) {
      WarmupCache warmup;
      betas = reweight_factors(PosteriorSnapshot::from_model(warmup.get(cfg, data)), *t, data.train.features,
                               data.train.labels)
                  .betas;
    } else {
      head = forward_loss_head(*t);
    }
  }

  const fs::path out(out_dir);
  fs::create_directories(out);
  std::ofstream csv = open_out(out / "diagnose.csv");
  csv << "checkpoint,epoch,loss_correct,loss_incorrect,loss_var,ce_loss_correct,ce_loss_incorrect,val_acc,test_acc\n"
      << std::setprecision(17);
  const auto opt = [&](const std::optional<double>& v) -> std::string { return v ? format_double(*v) : ""; };
  for (const auto& file : files) {
    const MlpParams params = load_checkpoint(file.string());
    const LossSplit own = diagnostics_pass(params, data.train, head, betas);
    const LossSplit ce = diagnostics_pass(params, data.train, LossHead::cross_entropy());
    csv << file.filename().string() << ',' << epoch_from_name(file) << ',' << opt(own.mean_correct) << ','
        << opt(own.mean_incorrect) << ',' << format_double(own.variance) << ',' << opt(ce.mean_correct) << ','
        << opt(ce.mean_incorrect) << ',' << format_double(accuracy(params, data.val)) << ','
        << format_double(accuracy(params, data.test)) << '\n';
  }
}

}  // namespace lnlab
