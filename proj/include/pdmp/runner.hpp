#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pdmp/core_model.hpp"
#include "pdmp/error.hpp"

namespace pdmp {

// A run configuration: one JSON document with sections model, grid, task,
// seed and tolerances.
class RunConfig {
 public:
  RunConfig();
  ~RunConfig();
  RunConfig(const RunConfig& other);
  RunConfig& operator=(const RunConfig& other);

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  // Dotted paths address the document directly. A bare key goes to the
  // section that already holds it (task, model, grid, tolerances), else to
  // task; "seed" stays at the top. Values are read as JSON when they parse,
  // else as strings.
  void set(const std::string& key, const std::string& value);
  std::string dump() const;

  ModelPtr build_model() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  friend class Runner;
};

enum ExitStatus { kExitOk = 0, kExitUsage = 1, kExitTolerance = 2 };

struct RunResult {
  int exit_code = kExitOk;
  std::string message;  // error text when exit_code != 0
  std::optional<ErrorCode> error;
  std::string summary;  // summary.json contents
  Values density;       // density.csv values, empty when none is written
};

const std::vector<std::string>& subcommands();

// Runs one pipeline; writes density.csv and summary.json into out_dir when it
// is not empty. Never throws.
RunResult run(const RunConfig& config, const std::string& subcommand, const std::string& out_dir);

std::string density_csv(const PdmpModel& model, ValueView values);
std::string boundary_csv(const PdmpModel& model, const BoundaryGrid& side, ValueView values);

}  // namespace pdmp
