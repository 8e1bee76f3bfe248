// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "lnlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lnlab {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

const std::map<std::string, std::string>& Config::defaults() {
  static const std::map<std::string, std::string> kDefaults = {
      // data
      {"dataset", "synthetic"},
      {"classes", "3"},
      {"dim", "2"},
      {"n", "3000"},
      {"n_test", "3000"},
      {"radius", "2"},
      {"sigma", "1"},
      {"anchors_per_class", "1"},
      {"mnist_dir", "data/mnist"},
      {"mnist_subsample", "10000"},
      {"val_fraction", "0.1"},
      // noise
      {"noise", "symmetric"},
      {"noise_rate", "0.2"},
      // method
      {"method", "forward-vrnl"},
      {"alpha", "auto"},
      {"lambda", "0.0001"},
      {"mean_mode", "batch"},
      {"weight_floor", "0"},
      {"transition", "estimate"},
      {"transition_file", ""},
      {"percentile", "97"},
      {"warmup_epochs", "20"},
      {"hidden", "auto"},
      // optimizer
      {"lr", "0.01"},
      {"momentum", "0.9"},
      {"weight_decay", "0.0001"},
      {"batch_size", "128"},
      {"epochs", "80"},
      {"lr_drops", "30,60"},
      {"drop_factor", "10"},
      // run control
      {"seed", "1"},
      {"deterministic", "true"},
      {"save_every", "0"},
      // bias sweep
      {"gammas", "0.01,0.05,0.10,0.15"},
      {"sweep_methods", "reweight,reweight-vrnl"},
      {"seeds", "1,2,3,4,5"},
      // diagnose
      {"checkpoint", ""},
  };
  return kDefaults;
}

Config::Config() : values_(defaults()) {}

void Config::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  std::ostringstream text;
  text << is.rdbuf();
  load_text(text.str(), path);
}

void Config::load_text(std::string_view text, const std::string& origin) {
  std::istringstream is{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected key = value");
    }
    set(trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
  }
}

void Config::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not KEY=VALUE");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  if (!defaults().count(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
}

int Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
  }
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    const auto out = std::stoull(v, &used);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an unsigned integer");
  }
}

bool Config::get_bool(const std::string& key) const {
  std::string v = get(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key) const { return split_list(get(key)); }

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : get_strings(key)) {
    try {
      out.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': '" + s + "' is not a number");
    }
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& key) const {
  std::vector<int> out;
  for (const auto& s : get_strings(key)) {
    try {
      out.push_back(std::stoi(s));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': '" + s + "' is not an integer");
    }
  }
  return out;
}

}  // namespace lnlab
