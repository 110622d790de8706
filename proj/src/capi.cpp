#include "pdmp/pdmp.h"

#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "pdmp/core_model.hpp"
#include "pdmp/error.hpp"
#include "pdmp/parallel.hpp"
#include "pdmp/runner.hpp"

struct pdmp_config {
  pdmp::RunConfig cfg;
};

struct pdmp_result {
  pdmp::RunResult r;
};

struct pdmp_model {
  pdmp::ModelPtr model;
};

namespace {

thread_local std::string tl_error;

pdmp_status set_error(pdmp_status s, const std::string& msg) {
  tl_error = msg;
  return s;
}

pdmp_status ok() {
  tl_error.clear();
  return PDMP_OK;
}

pdmp_status from_code(pdmp::ErrorCode c) {
  switch (c) {
    case pdmp::ErrorCode::InvalidArgument: return PDMP_ERR_INVALID_ARGUMENT;
    case pdmp::ErrorCode::Config: return PDMP_ERR_CONFIG;
    case pdmp::ErrorCode::Domain: return PDMP_ERR_DOMAIN;
    case pdmp::ErrorCode::Numeric: return PDMP_ERR_NUMERIC;
    case pdmp::ErrorCode::Tolerance: return PDMP_ERR_TOLERANCE;
    case pdmp::ErrorCode::Internal: return PDMP_ERR_INTERNAL;
    case pdmp::ErrorCode::Io: return PDMP_ERR_IO;
  }
  return PDMP_ERR_INTERNAL;
}

template <class F>
pdmp_status guarded(F&& body) {
  try {
    return body();
  } catch (const pdmp::PdmpError& e) {
    return set_error(from_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(PDMP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(PDMP_ERR_INTERNAL, e.what());
  }
}

#define PDMP_REQUIRE(p) \
  do { if (!(p)) return set_error(PDMP_ERR_NULL_POINTER, "null pointer: " #p); } while (0)

pdmp::StatePoint point_of(const pdmp_model* m, size_t mode, const double* coords) {
  const auto& modes = m->model->space->modes();
  if (mode >= modes.size()) pdmp::fail(pdmp::ErrorCode::InvalidArgument, "mode out of range");
  pdmp::StatePoint x{std::vector<double>(coords, coords + modes[mode].axes.size()), mode};
  const auto& space = *m->model->space;
  space.check(x);
  if (!space.in_domain(x) && !space.on_plus(x) && !space.on_minus(x))
    pdmp::fail(pdmp::ErrorCode::Domain, "point lies outside the state space");
  return x;
}

}  // namespace

extern "C" {

const char* pdmp_version(void) { return "1.0.0"; }

const char* pdmp_last_error(void) { return tl_error.c_str(); }

void pdmp_set_threads(size_t n) { pdmp::set_worker_count(n); }

pdmp_status pdmp_config_parse(const char* json_text, pdmp_config** out) {
  PDMP_REQUIRE(json_text);
  PDMP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    *out = new pdmp_config{pdmp::RunConfig::parse(json_text)};
    return ok();
  });
}

pdmp_status pdmp_config_load(const char* path, pdmp_config** out) {
  PDMP_REQUIRE(path);
  PDMP_REQUIRE(out);
  *out = nullptr;
  if (!std::ifstream(path)) return set_error(PDMP_ERR_IO, std::string("cannot read '") + path + "'");
  return guarded([&] {
    *out = new pdmp_config{pdmp::RunConfig::load(path)};
    return ok();
  });
}

pdmp_status pdmp_config_set(pdmp_config* cfg, const char* key, const char* value) {
  PDMP_REQUIRE(cfg);
  PDMP_REQUIRE(key);
  PDMP_REQUIRE(value);
  return guarded([&] {
    cfg->cfg.set(key, value);
    return ok();
  });
}

pdmp_status pdmp_config_dump(const pdmp_config* cfg, char** out) {
  PDMP_REQUIRE(cfg);
  PDMP_REQUIRE(out);
  return guarded([&] {
    const std::string s = cfg->cfg.dump();
    *out = new char[s.size() + 1];
    std::memcpy(*out, s.c_str(), s.size() + 1);
    return ok();
  });
}

void pdmp_config_free(pdmp_config* cfg) { delete cfg; }

void pdmp_string_free(char* s) { delete[] s; }

pdmp_status pdmp_run(const pdmp_config* cfg, const char* subcommand, const char* out_dir, pdmp_result** out) {
  PDMP_REQUIRE(cfg);
  PDMP_REQUIRE(subcommand);
  PDMP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    auto* r = new pdmp_result{pdmp::run(cfg->cfg, subcommand, out_dir ? out_dir : "")};
    *out = r;
    if (r->r.error) return set_error(from_code(*r->r.error), r->r.message);
    return ok();
  });
}

int pdmp_result_exit_code(const pdmp_result* r) { return r ? r->r.exit_code : pdmp::kExitUsage; }

const char* pdmp_result_message(const pdmp_result* r) { return r ? r->r.message.c_str() : ""; }

const char* pdmp_result_summary(const pdmp_result* r) { return r ? r->r.summary.c_str() : ""; }

size_t pdmp_result_values(const pdmp_result* r, const double** values) {
  if (!r) return 0;
  if (values) *values = r->r.density.data();
  return r->r.density.size();
}

void pdmp_result_free(pdmp_result* r) { delete r; }

pdmp_status pdmp_model_create(const pdmp_config* cfg, pdmp_model** out) {
  PDMP_REQUIRE(cfg);
  PDMP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    *out = new pdmp_model{cfg->cfg.build_model()};
    return ok();
  });
}

void pdmp_model_free(pdmp_model* m) { delete m; }

size_t pdmp_model_grid_size(const pdmp_model* m) { return m ? m->model->grid().size() : 0; }

size_t pdmp_model_dimension(const pdmp_model* m, size_t mode) {
  if (!m || mode >= m->model->space->modes().size()) return 0;
  return m->model->space->modes()[mode].axes.size();
}

pdmp_status pdmp_model_hitting_time(const pdmp_model* m, size_t mode, const double* coords, int direction,
                                    double* out) {
  PDMP_REQUIRE(m);
  PDMP_REQUIRE(coords);
  PDMP_REQUIRE(out);
  if (direction != 1 && direction != -1) return set_error(PDMP_ERR_INVALID_ARGUMENT, "direction must be +1 or -1");
  return guarded([&] {
    *out = pdmp::hitting_time(*m->model, point_of(m, mode, coords),
                              direction > 0 ? pdmp::Direction::Forward : pdmp::Direction::Backward);
    return ok();
  });
}

pdmp_status pdmp_model_advance(const pdmp_model* m, size_t mode, double* coords, double t, int* at_boundary) {
  PDMP_REQUIRE(m);
  PDMP_REQUIRE(coords);
  return guarded([&] {
    auto a = pdmp::advance(*m->model, point_of(m, mode, coords), t);
    if (a.status == pdmp::FlowStatus::OutOfDomain)
      return set_error(PDMP_ERR_DOMAIN, "flow left the state space");
    std::copy(a.point.coords.begin(), a.point.coords.end(), coords);
    if (at_boundary) *at_boundary = a.status == pdmp::FlowStatus::Boundary;
    return ok();
  });
}

}  // extern "C"
