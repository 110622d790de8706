// pdmp run <config.json> <subcommand> [--key value ...] [--out DIR]

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdmp/pdmp.h"

namespace {

int report(const char* what) {
  std::fprintf(stderr, "pdmp: %s: %s\n", what, pdmp_last_error());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise deterministic Markov process toolkit"};
  app.set_version_flag("--version", std::string(pdmp_version()));
  app.require_subcommand(1);

  std::string config_path, subcommand, out_dir = ".";
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a pipeline on a JSON config");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("subcommand", subcommand, "simulate | evolve | invariant | embedded | resolvent | verify")
      ->required()
      ->check(CLI::IsMember({"simulate", "evolve", "invariant", "embedded", "resolvent", "verify"}));
  run->add_option("--out", out_dir, "Output directory for density.csv and summary.json");
  run->add_flag("-q,--quiet", quiet, "Do not print the summary");
  run->allow_extras();
  run->footer("Other --key value pairs override config entries; dotted keys address nested entries.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::vector<std::string> extras = run->remaining();
  pdmp_config* cfg = nullptr;
  if (pdmp_config_load(config_path.c_str(), &cfg) != PDMP_OK) return report("config");

  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string key = extras[i], value;
    if (key.rfind("--", 0) != 0) {
      std::fprintf(stderr, "pdmp: unexpected argument '%s'\n", key.c_str());
      pdmp_config_free(cfg);
      return 1;
    }
    key.erase(0, 2);
    if (auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else if (i + 1 < extras.size()) {
      value = extras[++i];
    } else {
      std::fprintf(stderr, "pdmp: override --%s has no value\n", key.c_str());
      pdmp_config_free(cfg);
      return 1;
    }
    if (pdmp_config_set(cfg, key.c_str(), value.c_str()) != PDMP_OK) {
      pdmp_config_free(cfg);
      return report("override");
    }
  }

  pdmp_result* res = nullptr;
  const pdmp_status st = pdmp_run(cfg, subcommand.c_str(), out_dir.c_str(), &res);
  pdmp_config_free(cfg);
  if (!res) return report(subcommand.c_str());

  const int code = pdmp_result_exit_code(res);
  if (!quiet && *pdmp_result_summary(res)) std::fputs(pdmp_result_summary(res), stdout);
  if (st != PDMP_OK) std::fprintf(stderr, "pdmp: %s: %s\n", subcommand.c_str(), pdmp_result_message(res));
  pdmp_result_free(res);
  return code;
}
