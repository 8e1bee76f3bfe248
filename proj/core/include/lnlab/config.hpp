// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LNLAB_CONFIG_HPP_
#define LNLAB_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lnlab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key = value configuration. Later assignments win, so command-line
/// overrides are applied after the file. Unknown keys are rejected.
class Config {
 public:
  /// Starts from the documented defaults.
  Config();

  static const std::map<std::string, std::string>& defaults();

  /// Parses "key = value" lines; '#' starts a comment.
  void load_file(const std::string& path);
  void load_text(std::string_view text, const std::string& origin = "<text>");
  /// Applies one "key=value" override.
  void set(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_string(const std::string& key) const { return get(key); }
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(std::string_view text);

}  // namespace lnlab

#endif  // LNLAB_CONFIG_HPP_
