#include "h3nls/h3nls.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <optional>
#include <string>

#include "h3nls/calculus.hpp"
#include "h3nls/data_gen.hpp"
#include "h3nls/errors.hpp"
#include "h3nls/lab.hpp"

using namespace h3nls;

struct h3nls_grid {
  RadialGrid grid;
};

struct h3nls_field {
  RadialField field;
};

struct h3nls_config {
  RunConfig cfg;
};

struct h3nls_run {
  std::optional<Experiment> ex;
};

struct h3nls_result {
  RunOutput out;
};

namespace {

thread_local std::string g_last_error;

h3nls_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_parameter: return H3NLS_ERR_INVALID_PARAMETER;
    case ErrorCode::invalid_argument: return H3NLS_ERR_INVALID_ARGUMENT;
    case ErrorCode::numeric_domain: return H3NLS_ERR_NUMERIC_DOMAIN;
    case ErrorCode::unsupported_retention: return H3NLS_ERR_UNSUPPORTED_RETENTION;
    case ErrorCode::config: return H3NLS_ERR_CONFIG;
    case ErrorCode::io: return H3NLS_ERR_IO;
    case ErrorCode::version_mismatch: return H3NLS_ERR_VERSION_MISMATCH;
    case ErrorCode::corrupt: return H3NLS_ERR_CORRUPT;
    case ErrorCode::numeric_fatal: return H3NLS_ERR_NUMERIC_FATAL;
  }
  return H3NLS_ERR_INTERNAL;
}

template <class F>
h3nls_status guarded(F&& body) noexcept {
  g_last_error.clear();
  try {
    body();
    return H3NLS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return H3NLS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return H3NLS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return H3NLS_ERR_INTERNAL;
  }
}

#define H3NLS_NONNULL(p)                                         \
  do {                                                           \
    if ((p) == nullptr) {                                        \
      g_last_error = #p " is null";                              \
      return H3NLS_ERR_NULL_POINTER;                             \
    }                                                            \
  } while (0)

char* dup_string(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

Experiment& live(h3nls_run* run) {
  if (!run->ex) fail(ErrorCode::invalid_argument, "run has already been finished");
  return *run->ex;
}

const Experiment& live(const h3nls_run* run) {
  if (!run->ex) fail(ErrorCode::invalid_argument, "run has already been finished");
  return *run->ex;
}

const std::vector<std::string> kRunOutputs{"history.csv", "ledger.json", "report.json"};

void write_run_outputs(const RunOutput& out, const std::string& dir, bool force) {
  write_output(dir, "history.csv", out.history_csv, force);
  write_output(dir, "ledger.json", ledger_to_json(out.ledger).dump(2) + "\n", force);
  write_output(dir, "report.json", out.report.dump(2) + "\n", force);
}

// Advances to the horizon, refreshing dir/checkpoint.bin every
// checkpoint_every steps when enabled. A resumed run may refresh the
// checkpoint it started from.
RunOutput drive(Experiment ex, const std::string& dir, bool force, bool resumed) {
  const auto cal = calibration_for(ex.config());
  const auto every = ex.config().checkpoint_every;
  std::vector<std::string> outputs = kRunOutputs;
  if (every > 0 && !resumed) outputs.push_back("checkpoint.bin");
  claim_outputs(dir, outputs, force);
  if (every > 0) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::io, "cannot create output directory " + dir + ": " + ec.message());
    while (!ex.done()) {
      ex.advance(every);
      if (!ex.done()) save_checkpoint((std::filesystem::path(dir) / "checkpoint.bin").string(), ex);
    }
  } else {
    ex.advance(ex.run().total_steps());
  }
  auto out = std::move(ex).finish(cal);
  write_run_outputs(out, dir, true);
  return out;
}

}  // namespace

extern "C" {

unsigned h3nls_abi_version(void) { return H3NLS_ABI_VERSION; }

const char* h3nls_last_error(void) { return g_last_error.c_str(); }

const char* h3nls_status_name(h3nls_status status) {
  switch (status) {
    case H3NLS_OK: return "ok";
    case H3NLS_ERR_INVALID_PARAMETER: return "invalid_parameter";
    case H3NLS_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case H3NLS_ERR_NUMERIC_DOMAIN: return "numeric_domain";
    case H3NLS_ERR_UNSUPPORTED_RETENTION: return "unsupported_retention";
    case H3NLS_ERR_CONFIG: return "config";
    case H3NLS_ERR_IO: return "io";
    case H3NLS_ERR_VERSION_MISMATCH: return "version_mismatch";
    case H3NLS_ERR_CORRUPT: return "corrupt";
    case H3NLS_ERR_NUMERIC_FATAL: return "numeric_fatal";
    case H3NLS_ERR_NULL_POINTER: return "null_pointer";
    case H3NLS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

int h3nls_exit_code(h3nls_status status) {
  switch (status) {
    case H3NLS_OK: return 0;
    case H3NLS_ERR_NUMERIC_DOMAIN:
    case H3NLS_ERR_NUMERIC_FATAL: return 3;
    default: return 2;
  }
}

void h3nls_string_free(char* s) { std::free(s); }

h3nls_status h3nls_grid_create(double radius, int intervals, h3nls_grid** out) {
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] { *out = new h3nls_grid{make_grid(radius, intervals)}; });
}

h3nls_status h3nls_grid_size(const h3nls_grid* grid, size_t* nodes) {
  H3NLS_NONNULL(grid);
  H3NLS_NONNULL(nodes);
  *nodes = grid->grid.size();
  return H3NLS_OK;
}

void h3nls_grid_destroy(h3nls_grid* grid) { delete grid; }

h3nls_status h3nls_gen_data(const h3nls_grid* grid, double s, uint64_t seed, double amplitude,
                            double delta_spec, h3nls_field** out) {
  H3NLS_NONNULL(grid);
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    *out = new h3nls_field{gen_data(s, seed, amplitude, grid->grid, delta_spec)};
  });
}

h3nls_status h3nls_field_create(const h3nls_grid* grid, const double* re, const double* im,
                                size_t n, h3nls_field** out) {
  H3NLS_NONNULL(grid);
  H3NLS_NONNULL(re);
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    if (n != grid->grid.size())
      fail(ErrorCode::invalid_argument, "value count does not match the grid");
    std::vector<Complex> w(n);
    for (size_t j = 0; j < n; ++j) w[j] = Complex(re[j], im ? im[j] : 0.0);
    *out = new h3nls_field{RadialField(grid->grid, std::move(w))};
  });
}

h3nls_status h3nls_field_values(const h3nls_field* field, double* re, double* im, size_t n) {
  H3NLS_NONNULL(field);
  return guarded([&] {
    if (n != field->field.size())
      fail(ErrorCode::invalid_argument, "buffer length does not match the field");
    for (size_t j = 0; j < n; ++j) {
      if (re) re[j] = field->field[j].real();
      if (im) im[j] = field->field[j].imag();
    }
  });
}

h3nls_status h3nls_field_norm(const h3nls_field* field, const char* spec, double* out) {
  H3NLS_NONNULL(field);
  H3NLS_NONNULL(spec);
  H3NLS_NONNULL(out);
  return guarded([&] { *out = evaluate(field->field, NormSpec::parse(spec)); });
}

h3nls_status h3nls_field_energy(const h3nls_field* field, double* out) {
  H3NLS_NONNULL(field);
  H3NLS_NONNULL(out);
  return guarded([&] { *out = energy(field->field); });
}

h3nls_status h3nls_field_mass(const h3nls_field* field, double* out) {
  H3NLS_NONNULL(field);
  H3NLS_NONNULL(out);
  return guarded([&] { *out = mass(field->field); });
}

h3nls_status h3nls_field_to_json(const h3nls_field* field, char** out) {
  H3NLS_NONNULL(field);
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] { *out = dup_string(field_to_json(field->field).dump()); });
}

void h3nls_field_destroy(h3nls_field* field) { delete field; }

h3nls_status h3nls_config_default(h3nls_config** out) {
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] { *out = new h3nls_config{}; });
}

h3nls_status h3nls_config_load(const char* path, h3nls_config** out) {
  H3NLS_NONNULL(path);
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    auto cfg = load_config(path);
    validate(cfg);
    *out = new h3nls_config{std::move(cfg)};
  });
}

h3nls_status h3nls_config_parse(const char* text, h3nls_config** out) {
  H3NLS_NONNULL(text);
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
    }
    auto cfg = config_from_json(j);
    validate(cfg);
    *out = new h3nls_config{std::move(cfg)};
  });
}

h3nls_status h3nls_config_to_json(const h3nls_config* cfg, char** out) {
  H3NLS_NONNULL(cfg);
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] { *out = dup_string(config_to_json(cfg->cfg).dump(2)); });
}

h3nls_status h3nls_config_set_seed(h3nls_config* cfg, uint64_t seed) {
  H3NLS_NONNULL(cfg);
  cfg->cfg.seed = seed;
  return H3NLS_OK;
}

h3nls_status h3nls_config_set_out(h3nls_config* cfg, const char* dir) {
  H3NLS_NONNULL(cfg);
  H3NLS_NONNULL(dir);
  return guarded([&] {
    if (*dir == '\0') fail(ErrorCode::config, "output directory is empty");
    cfg->cfg.out = dir;
  });
}

h3nls_status h3nls_config_out(const h3nls_config* cfg, char** out) {
  H3NLS_NONNULL(cfg);
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] { *out = dup_string(cfg->cfg.out); });
}

void h3nls_config_destroy(h3nls_config* cfg) { delete cfg; }

h3nls_status h3nls_run_create(const h3nls_config* cfg, h3nls_run** out) {
  H3NLS_NONNULL(cfg);
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    validate(cfg->cfg);
    auto* r = new h3nls_run{};
    try {
      r->ex.emplace(cfg->cfg);
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

h3nls_status h3nls_run_resume(const char* path, h3nls_run** out) {
  H3NLS_NONNULL(path);
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    auto* r = new h3nls_run{};
    try {
      r->ex.emplace(load_checkpoint(path));
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

h3nls_status h3nls_run_advance(h3nls_run* run, int64_t steps, int* done) {
  H3NLS_NONNULL(run);
  return guarded([&] {
    auto& ex = live(run);
    if (steps < 0) fail(ErrorCode::invalid_argument, "step count must be nonnegative");
    ex.advance(steps);
    if (done) *done = ex.done() ? 1 : 0;
  });
}

h3nls_status h3nls_run_progress(const h3nls_run* run, int64_t* step, int64_t* total) {
  H3NLS_NONNULL(run);
  return guarded([&] {
    const auto& ex = live(run);
    if (step) *step = ex.run().step_index();
    if (total) *total = ex.run().total_steps();
  });
}

h3nls_status h3nls_run_checkpoint(const h3nls_run* run, const char* path) {
  H3NLS_NONNULL(run);
  H3NLS_NONNULL(path);
  return guarded([&] { save_checkpoint(path, live(run)); });
}

h3nls_status h3nls_run_finish(h3nls_run* run, h3nls_result** out) {
  H3NLS_NONNULL(run);
  H3NLS_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    auto& ex = live(run);
    const auto cal = calibration_for(ex.config());
    Experiment taken = std::move(ex);
    run->ex.reset();
    *out = new h3nls_result{std::move(taken).finish(cal)};
  });
}

void h3nls_run_destroy(h3nls_run* run) { delete run; }

h3nls_status h3nls_result_report(const h3nls_result* result, char** json) {
  H3NLS_NONNULL(result);
  H3NLS_NONNULL(json);
  *json = nullptr;
  return guarded([&] { *json = dup_string(result->out.report.dump(2)); });
}

h3nls_status h3nls_result_ledger(const h3nls_result* result, char** json) {
  H3NLS_NONNULL(result);
  H3NLS_NONNULL(json);
  *json = nullptr;
  return guarded([&] { *json = dup_string(ledger_to_json(result->out.ledger).dump(2)); });
}

h3nls_status h3nls_result_history_csv(const h3nls_result* result, char** csv) {
  H3NLS_NONNULL(result);
  H3NLS_NONNULL(csv);
  *csv = nullptr;
  return guarded([&] { *csv = dup_string(result->out.history_csv); });
}

h3nls_status h3nls_result_audits_pass(const h3nls_result* result, int* pass) {
  H3NLS_NONNULL(result);
  H3NLS_NONNULL(pass);
  *pass = result->out.audits_pass ? 1 : 0;
  return H3NLS_OK;
}

h3nls_status h3nls_result_write(const h3nls_result* result, const char* dir, int force) {
  H3NLS_NONNULL(result);
  H3NLS_NONNULL(dir);
  return guarded([&] {
    claim_outputs(dir, kRunOutputs, force != 0);
    write_run_outputs(result->out, dir, true);
  });
}

void h3nls_result_destroy(h3nls_result* result) { delete result; }

h3nls_status h3nls_write_data(const h3nls_config* cfg, const char* out_dir, int force) {
  H3NLS_NONNULL(cfg);
  H3NLS_NONNULL(out_dir);
  return guarded([&] {
    const auto& c = cfg->cfg;
    validate(c);
    const auto u0 = gen_data(c.s, c.seed, c.amplitude, c.grid(), c.delta_spec);
    write_output(out_dir, "field.json", field_to_json(u0).dump() + "\n", force != 0);
  });
}

h3nls_status h3nls_simulate(const h3nls_config* cfg, const char* out_dir, int force,
                            int* audits_pass) {
  H3NLS_NONNULL(cfg);
  H3NLS_NONNULL(out_dir);
  return guarded([&] {
    validate(cfg->cfg);
    const auto out = drive(Experiment(cfg->cfg), out_dir, force != 0, false);
    if (audits_pass) *audits_pass = out.audits_pass ? 1 : 0;
  });
}

h3nls_status h3nls_resume(const char* path, const char* out_dir, int force, int* audits_pass) {
  H3NLS_NONNULL(path);
  H3NLS_NONNULL(out_dir);
  return guarded([&] {
    const auto out = drive(load_checkpoint(path), out_dir, force != 0, true);
    if (audits_pass) *audits_pass = out.audits_pass ? 1 : 0;
  });
}

h3nls_status h3nls_sweep(const h3nls_config* cfg, const char* out_dir, int force, int threads,
                         int* audits_pass) {
  H3NLS_NONNULL(cfg);
  H3NLS_NONNULL(out_dir);
  return guarded([&] {
    validate(cfg->cfg);
    if (threads < 1) fail(ErrorCode::config, "thread count must be at least 1");
    claim_outputs(out_dir, {"report.json"}, force != 0);
    const auto out = sweep(cfg->cfg, calibration_for(cfg->cfg), threads);
    write_output(out_dir, "report.json", out.report.dump(2) + "\n", true);
    if (audits_pass) *audits_pass = out.audits_pass ? 1 : 0;
  });
}

h3nls_status h3nls_audit(const h3nls_config* cfg, const char* out_dir, int force,
                         int* audits_pass) {
  H3NLS_NONNULL(cfg);
  H3NLS_NONNULL(out_dir);
  return guarded([&] {
    const auto& c = cfg->cfg;
    validate(c);
    if (c.calibration.empty())
      fail(ErrorCode::config, "audit batteries need a calibration file");
    claim_outputs(out_dir, {"report.json"}, force != 0);
    const auto out = audit_batteries(c, Calibration::load(c.calibration));
    write_output(out_dir, "report.json", out.report.dump(2) + "\n", true);
    if (audits_pass) *audits_pass = out.audits_pass ? 1 : 0;
  });
}

h3nls_status h3nls_calibrate(const h3nls_config* cfg, const char* out_dir, int force) {
  H3NLS_NONNULL(cfg);
  H3NLS_NONNULL(out_dir);
  return guarded([&] {
    validate(cfg->cfg);
    claim_outputs(out_dir, {"calibration.json"}, force != 0);
    const auto cal = calibrate(cfg->cfg);
    write_output(out_dir, "calibration.json", cal.to_json().dump(2) + "\n", true);
  });
}

}  // extern "C"
