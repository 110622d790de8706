#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "pdmp/pdmp.h"

namespace {

const char* kM1 = R"({
  "model": {"name": "drift_redistribute"},
  "grid": {"cells": 200},
  "task": {"t": 1.0, "paths": 20000, "dt": 0.001},
  "seed": 3
})";

struct Config {
  pdmp_config* p = nullptr;
  explicit Config(const char* text) { REQUIRE(pdmp_config_parse(text, &p) == PDMP_OK); }
  ~Config() { pdmp_config_free(p); }
};

struct Result {
  pdmp_result* p = nullptr;
  pdmp_status status = PDMP_OK;
  Result(const pdmp_config* c, const char* sub, const char* dir = nullptr) { status = pdmp_run(c, sub, dir, &p); }
  ~Result() { pdmp_result_free(p); }
  std::vector<double> values() const {
    const double* v = nullptr;
    const size_t n = pdmp_result_values(p, &v);
    return std::vector<double>(v, v + n);
  }
  nlohmann::json summary() const { return nlohmann::json::parse(pdmp_result_summary(p)); }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / ("pdmp_capi_" + std::to_string(::getpid())) / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("status codes and the error buffer") {
  CHECK(std::string(pdmp_version()).size() > 0);
  pdmp_config* c = nullptr;
  CHECK(pdmp_config_parse(nullptr, &c) == PDMP_ERR_NULL_POINTER);
  CHECK(std::string(pdmp_last_error()).find("null pointer") != std::string::npos);
  CHECK(pdmp_config_parse("{not json", &c) == PDMP_ERR_CONFIG);
  CHECK(c == nullptr);
  CHECK(std::string(pdmp_last_error()).find("malformed") != std::string::npos);
  CHECK(pdmp_config_parse("[1, 2]", &c) == PDMP_ERR_CONFIG);
  CHECK(pdmp_config_load("/nonexistent/cfg.json", &c) == PDMP_ERR_IO);
  CHECK(pdmp_config_parse("{}", &c) == PDMP_OK);
  CHECK(std::string(pdmp_last_error()).empty());
  pdmp_config_free(c);
  pdmp_config_free(nullptr);
  pdmp_result_free(nullptr);
  pdmp_model_free(nullptr);
}

TEST_CASE("overrides land in the right section") {
  Config c(kM1);
  CHECK(pdmp_config_set(c.p, "t", "0.5") == PDMP_OK);
  CHECK(pdmp_config_set(c.p, "cells", "100") == PDMP_OK);
  CHECK(pdmp_config_set(c.p, "seed", "9") == PDMP_OK);
  CHECK(pdmp_config_set(c.p, "model.params.rate", "0.25") == PDMP_OK);
  CHECK(pdmp_config_set(c.p, "fresh", "word") == PDMP_OK);
  CHECK(pdmp_config_set(c.p, "a..b", "1") == PDMP_ERR_CONFIG);
  CHECK(pdmp_config_set(c.p, "seed.x", "1") == PDMP_ERR_CONFIG);
  char* text = nullptr;
  REQUIRE(pdmp_config_dump(c.p, &text) == PDMP_OK);
  auto j = nlohmann::json::parse(text);
  pdmp_string_free(text);
  CHECK(j["task"]["t"] == 0.5);
  CHECK(j["grid"]["cells"] == 100);
  CHECK(j["seed"] == 9);
  CHECK(j["model"]["params"]["rate"] == 0.25);
  CHECK(j["task"]["fresh"] == "word");
}

TEST_CASE("config errors map to exit code 1") {
  Config bad(R"({"model": {"name": "nope"}})");
  Result r(bad.p, "simulate");
  CHECK(r.status == PDMP_ERR_CONFIG);
  CHECK(pdmp_result_exit_code(r.p) == 1);
  CHECK(std::string(pdmp_result_message(r.p)).find("unknown model") != std::string::npos);

  Config m1(kM1);
  Result s(m1.p, "dance");
  CHECK(pdmp_result_exit_code(s.p) == 1);

  Result io(m1.p, "evolve", "/proc/pdmp_no_such_dir");
  CHECK(io.status == PDMP_ERR_IO);
  CHECK(pdmp_result_exit_code(io.p) == 1);

  Config point(R"({"model": {"name": "drift_redistribute"}, "task": {"init": {"kind": "point", "coords": [0.2]}}})");
  Result e(point.p, "evolve");
  CHECK(pdmp_result_exit_code(e.p) == 1);
}

TEST_CASE("simulate writes 200 rows and no censored mass") {
  Config c(kM1);
  const auto dir = scratch("sim");
  Result r(c.p, "simulate", dir.string().c_str());
  REQUIRE(r.status == PDMP_OK);
  CHECK(pdmp_result_exit_code(r.p) == 0);
  auto v = r.values();
  CHECK(v.size() == 200);
  auto s = r.summary();
  CHECK(s["subcommand"] == "simulate");
  CHECK(s["model"] == "drift_redistribute");
  CHECK(s["seed"] == 3);
  CHECK(s["masses"]["censored"] == 0.0);
  CHECK(s["masses"]["output"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.contains("wall_time_seconds"));
  CHECK(s["parameters"]["grid"]["cells"] == 200);

  std::istringstream csv(slurp(dir / "density.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "x,mode,value");
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    const auto a = line.find(','), b = line.rfind(',');
    CHECK(std::stod(line.substr(0, a)) == doctest::Approx((rows + 0.5) / 200.0));
    // 17 significant digits round-trip exactly.
    CHECK(std::stod(line.substr(b + 1)) == v[rows]);
    ++rows;
  }
  CHECK(rows == 200);
  CHECK(nlohmann::json::parse(slurp(dir / "summary.json")) == s);
}

TEST_CASE("invariant of the drift-redistribute model is 2x") {
  Config c(kM1);
  Result r(c.p, "invariant");
  REQUIRE(r.status == PDMP_OK);
  auto v = r.values();
  REQUIRE(v.size() == 200);
  double l1 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) l1 += std::abs(v[i] - 2.0 * (i + 0.5) / 200.0) / 200.0;
  CHECK(l1 < 1e-3);
  CHECK(r.summary()["residuals"]["k_residual"].get<double>() < 1e-6);
}

TEST_CASE("embedded writes the boundary part") {
  Config c(R"({"model": {"name": "kinetic_slab", "params": {"collision": 1.0}}, "grid": {"cells": 50}})");
  const auto dir = scratch("emb");
  Result r(c.p, "embedded", dir.string().c_str());
  REQUIRE(r.status == PDMP_OK);
  CHECK(std::filesystem::exists(dir / "boundary.csv"));
  auto s = r.summary();
  CHECK(std::abs(s["residuals"]["stochasticity_defect"].get<double>()) < 1e-6);
  CHECK(s["interior_mass"].get<double>() + s["boundary_mass"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("resolvent and evolve") {
  Config c(kM1);
  pdmp_config_set(c.p, "lambda", "2");
  Result r(c.p, "resolvent");
  REQUIRE(r.status == PDMP_OK);
  CHECK(r.summary()["residuals"]["lambda_norm"].get<double>() == doctest::Approx(1.0).epsilon(1e-4));
  Result e(c.p, "evolve");
  REQUIRE(e.status == PDMP_OK);
  CHECK(e.summary()["masses"]["output"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a failed tolerance exits with 2") {
  Config c(R"({"model": {"name": "free_flow"}, "task": {"paths": 2000, "dt": 0.025,
               "init": {"kind": "indicator", "lo": 0, "hi": 1}}, "tolerances": {"mc": 1e-9}})");
  Result r(c.p, "verify");
  CHECK(r.status == PDMP_ERR_TOLERANCE);
  CHECK(pdmp_result_exit_code(r.p) == 2);
  auto s = r.summary();
  bool mc_failed = false;
  for (const auto& check : s["checks"])
    if (check["name"] == "mc_vs_pde") mc_failed = !check["passed"].get<bool>();
  CHECK(mc_failed);
}

TEST_CASE("simulation output does not depend on the thread count") {
  Config c(kM1);
  pdmp_set_threads(1);
  Result one(c.p, "simulate");
  pdmp_set_threads(4);
  Result four(c.p, "simulate");
  pdmp_set_threads(0);
  CHECK(one.values() == four.values());
}

TEST_CASE("model handles") {
  Config c(kM1);
  pdmp_model* m = nullptr;
  REQUIRE(pdmp_model_create(c.p, &m) == PDMP_OK);
  CHECK(pdmp_model_grid_size(m) == 200);
  CHECK(pdmp_model_dimension(m, 0) == 1);
  CHECK(pdmp_model_dimension(m, 3) == 0);
  double x = 0.3, t = 0.0;
  CHECK(pdmp_model_hitting_time(m, 0, &x, 1, &t) == PDMP_OK);
  CHECK(t == doctest::Approx(0.7));
  CHECK(pdmp_model_hitting_time(m, 0, &x, 0, &t) == PDMP_ERR_INVALID_ARGUMENT);
  CHECK(pdmp_model_hitting_time(m, 2, &x, 1, &t) == PDMP_ERR_INVALID_ARGUMENT);
  int hit = -1;
  CHECK(pdmp_model_advance(m, 0, &x, 0.2, &hit) == PDMP_OK);
  CHECK(x == doctest::Approx(0.5));
  CHECK(hit == 0);
  CHECK(pdmp_model_advance(m, 0, &x, 3.0, &hit) == PDMP_OK);
  CHECK(x == doctest::Approx(1.0));
  CHECK(hit == 1);
  double out = 1.5;
  CHECK(pdmp_model_hitting_time(m, 0, &out, 1, &t) == PDMP_ERR_DOMAIN);
  pdmp_model_free(m);

  Config bad(R"({"model": {"name": "kinetic_slab", "params": {"velocities": [1, 0]}}})");
  CHECK(pdmp_model_create(bad.p, &m) == PDMP_ERR_CONFIG);
  CHECK(m == nullptr);
}
