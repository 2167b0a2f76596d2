#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "paththerm/diffusion.hpp"
#include "paththerm/spacetime.hpp"

namespace paththerm::cli {

enum ExitCode : int {
  ok = 0,
  internal_error = 1,
  schema_error = 2,
  numerical_error = 3,
  infeasible = 4,
  io_error = 5,
};

/// Config schema violation; `path` is a JSON pointer to the offending value.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& msg)
      : std::runtime_error(path + ": " + msg), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Read-only view of a JSON object that remembers which keys were read, so
/// that finish() can reject the rest.
class Node {
 public:
  Node(const nlohmann::json& j, std::string path);

  bool has(const std::string& key) const;
  const std::string& path() const noexcept { return path_; }

  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  std::uint64_t unsigned_integer(const std::string& key);
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  bool boolean(const std::string& key, bool fallback);
  std::vector<double> numbers(const std::string& key);
  Node object(const std::string& key);
  const nlohmann::json& raw(const std::string& key);

  /// Throws ConfigError naming the first key that was never read.
  void finish() const;

 private:
  const nlohmann::json& get(const std::string& key);
  std::string child(const std::string& key) const { return path_ + "/" + key; }

  const nlohmann::json* j_;
  std::string path_;
  std::set<std::string> used_;
};

UnitSystem parse_units(Node n);
Grid1D parse_grid(Node n);
Potential parse_potential(Node n);
/// Field specs: uniform, gaussian, cosine, half_box, delta, constant, values.
Field parse_field(Node n, const Grid1D& grid, double t);

struct RunOptions {
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
  bool deterministic = false;
};

struct RunResult {
  nlohmann::json report;
  nlohmann::json manifest;
  std::vector<std::string> files;
  std::string summary;
};

const std::vector<std::string>& experiments();

/// Validates the whole config, runs the experiment and writes manifest.json,
/// report.json and the CSV series into opts.out.
RunResult run_experiment(const nlohmann::json& config, const RunOptions& opts);

/// Command-line entry point; returns the process exit code.
int run_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace paththerm::cli
