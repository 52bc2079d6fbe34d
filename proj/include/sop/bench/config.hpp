#pragma once

// Plain-text experiment configuration:
//
//   # comment
//   [problem]
//   family = gaussian
//   m = 20
//   [solver:fista]
//   method = ista
//   accel = fista
//
// Keys are unique within a section; solver sections keep their file order.

#include "sop/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sop::bench {

class Section {
 public:
  Section() = default;
  Section(std::string name, std::map<std::string, std::string> values)
      : name_(std::move(name)), values_(std::move(values)) {}

  const std::string& name() const { return name_; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<long> get_int_list(const std::string& key, std::vector<long> fallback) const;

 private:
  std::string name_;
  std::map<std::string, std::string> values_;
};

class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  // Empty section when absent.
  const Section& section(const std::string& name) const;
  bool has_section(const std::string& name) const;
  // [solver:NAME] sections in file order.
  const std::vector<Section>& solvers() const { return solvers_; }

 private:
  std::map<std::string, Section> sections_;
  std::vector<Section> solvers_;
};

}  // namespace sop::bench
