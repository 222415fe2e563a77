#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmcf::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key=value configuration with '#' comments and dotted keys.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  // Fills keys missing here from defaults.
  void merge_defaults(const std::map<std::string, std::string>& defaults);

  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key) const;
  double real(const std::string& key, double fallback) const;
  int integer(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  // Comma-separated reals.
  std::vector<double> reals(const std::string& key) const;

  // Keys under a dotted prefix, with the prefix stripped.
  std::map<std::string, std::string> section(const std::string& prefix) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace wmcf::cli
