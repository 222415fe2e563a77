#include "wmcf/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace wmcf::cli {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  return std::all_of(key.begin(), key.end(),
                     [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '.' || c == '-'; });
}

double to_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad key '" + key + "'");
    if (cfg.has(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

void Config::merge_defaults(const std::map<std::string, std::string>& defaults) {
  for (const auto& [k, v] : defaults) values_.try_emplace(k, v);
}

std::string Config::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::real(const std::string& key) const { return to_real(key, str(key)); }
double Config::real(const std::string& key, double fallback) const {
  return has(key) ? real(key) : fallback;
}

int Config::integer(const std::string& key) const {
  const double v = real(key);
  if (v != static_cast<double>(static_cast<int>(v))) throw ConfigError("key '" + key + "': expected an integer");
  return static_cast<int>(v);
}

int Config::integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = str(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> Config::reals(const std::string& key) const {
  std::vector<double> out;
  std::istringstream in(str(key));
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_real(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::map<std::string, std::string> Config::section(const std::string& prefix) const {
  std::map<std::string, std::string> out;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : values_) {
    if (k.rfind(p, 0) == 0) out[k.substr(p.size())] = v;
  }
  return out;
}

}  // namespace wmcf::cli
