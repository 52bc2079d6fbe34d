#include "sop/bench/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace sop::bench {

namespace {

std::string trim(const std::string& s) {
  const auto first = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
  const auto last = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
  return first < last ? std::string(first, last) : std::string();
}

const Section& empty_section() {
  static const Section empty;
  return empty;
}

}  // namespace

std::string Section::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string Section::require(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("[" + name_ + "] is missing key '" + key + "'");
  return it->second;
}

double Section::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get(key, "");
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("[" + name_ + "] " + key + " = '" + s + "' is not a number");
  }
}

long Section::get_int(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get(key, "");
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("[" + name_ + "] " + key + " = '" + s + "' is not an integer");
  return v;
}

bool Section::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get(key, "");
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("[" + name_ + "] " + key + " = '" + s + "' is not a boolean");
}

std::vector<long> Section::get_int_list(const std::string& key, std::vector<long> fallback) const {
  if (!has(key)) return fallback;
  std::vector<long> out;
  std::stringstream ss(get(key, ""));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
      throw ConfigError("[" + name_ + "] " + key + " has a non-integer entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::string current;
  std::map<std::string, std::string> values;
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, std::string>> raw;
  auto flush = [&] {
    if (!current.empty()) raw[current] = values;
    values.clear();
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      flush();
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) throw ConfigError(where + "empty section name");
      if (raw.count(current)) throw ConfigError(where + "duplicate section [" + current + "]");
      raw[current];
      order.push_back(current);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (current.empty()) throw ConfigError(where + "key outside of a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (values.count(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    values[key] = value;
  }
  flush();
  const std::string prefix = "solver:";
  for (const auto& name : order) {
    Section s(name, raw[name]);
    if (name.rfind(prefix, 0) == 0) {
      if (name.size() == prefix.size()) throw ConfigError("solver section without a name");
      cfg.solvers_.emplace_back(name.substr(prefix.size()), raw[name]);
    } else {
      cfg.sections_[name] = std::move(s);
    }
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const Section& Config::section(const std::string& name) const {
  const auto it = sections_.find(name);
  return it == sections_.end() ? empty_section() : it->second;
}

bool Config::has_section(const std::string& name) const { return sections_.count(name) != 0; }

}  // namespace sop::bench
