#pragma once

#include <map>
#include <string>

namespace twix {

// Flat `key = value` configuration file. '#' starts a comment; keys follow
// the hyper-parameter names used throughout (t_G, t_P, t_F, theta_1,
// theta_2, t_A, theta_T, ...), with durations in seconds and scores as
// fractions.
class Config {
public:
  Config() = default;
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  const std::map<std::string, std::string>& values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

}  // namespace twix
