// Command-line front end. Talks to the library only through the C API.
//
// Exit status: 0 success, 1 an audit failed, 2 configuration or input error,
// 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "h3nls/h3nls.h"

namespace {

constexpr int kAuditFailed = 1;

struct ConfigDeleter {
  void operator()(h3nls_config* c) const { h3nls_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<h3nls_config, ConfigDeleter>;

// Prints the library's message and returns the exit status for `status`.
int report(h3nls_status status) {
  if (status == H3NLS_OK) return 0;
  std::fprintf(stderr, "h3nls: %s: %s\n", h3nls_status_name(status), h3nls_last_error());
  return h3nls_exit_code(status);
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_seed) {
  cmd->add_option("-c,--config", c.config, "JSON configuration file (defaults if omitted)");
  cmd->add_option("-o,--out", c.out, "output directory (overrides the config)");
  if (with_seed) cmd->add_option("--seed", c.seed, "data seed (overrides the config)");
  cmd->add_flag("-f,--force", c.force, "overwrite existing outputs");
}

// Loads the configuration and applies command-line overrides.
h3nls_status load(const Common& c, ConfigPtr& cfg, std::string& out_dir) {
  h3nls_config* raw = nullptr;
  const auto st = c.config.empty() ? h3nls_config_default(&raw)
                                   : h3nls_config_load(c.config.c_str(), &raw);
  if (st != H3NLS_OK) return st;
  cfg.reset(raw);
  if (c.seed) h3nls_config_set_seed(cfg.get(), *c.seed);
  if (!c.out.empty()) {
    out_dir = c.out;
    return H3NLS_OK;
  }
  char* s = nullptr;
  const auto st2 = h3nls_config_out(cfg.get(), &s);
  if (st2 != H3NLS_OK) return st2;
  out_dir = s;
  h3nls_string_free(s);
  return H3NLS_OK;
}

// `pass` is read only after the call that fills it has returned.
int verdict(h3nls_status status, const int& pass) {
  if (status != H3NLS_OK) return report(status);
  if (!pass) {
    std::fprintf(stderr, "h3nls: one or more audits failed (see report.json)\n");
    return kAuditFailed;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (h3nls_abi_version() != H3NLS_ABI_VERSION) {
    std::fprintf(stderr, "h3nls: library ABI %u does not match header ABI %u\n",
                 h3nls_abi_version(), H3NLS_ABI_VERSION);
    return 2;
  }

  CLI::App app{"Radial NLS on hyperbolic space: high-low frequency laboratory"};
  app.require_subcommand(1);

  Common gen, sim, swp, aud, cal;
  std::string checkpoint;
  std::string resume_out;
  bool resume_force = false;
  int threads = 1;

  auto* gen_cmd = app.add_subcommand("gen-data", "write the random-phase initial field");
  add_common(gen_cmd, gen, true);
  auto* sim_cmd = app.add_subcommand("simulate", "evolve one configuration and audit it");
  add_common(sim_cmd, sim, true);
  auto* swp_cmd = app.add_subcommand("sweep", "run the (s, s0, seed) grid and fit exponents");
  add_common(swp_cmd, swp, false);
  swp_cmd->add_option("-j,--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* aud_cmd = app.add_subcommand("audit", "Bernstein, radial Sobolev and smoothing batteries");
  add_common(aud_cmd, aud, true);
  auto* cal_cmd = app.add_subcommand("calibrate", "measure audit constants on the reference run");
  add_common(cal_cmd, cal, true);
  auto* res_cmd = app.add_subcommand("resume", "continue a run from a checkpoint");
  res_cmd->add_option("checkpoint", checkpoint, "checkpoint file")->required();
  res_cmd->add_option("-o,--out", resume_out, "output directory (default: checkpoint's)");
  res_cmd->add_flag("-f,--force", resume_force, "overwrite existing outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  ConfigPtr cfg;
  std::string out_dir;
  int pass = 0;

  if (*gen_cmd) {
    if (auto st = load(gen, cfg, out_dir); st != H3NLS_OK) return report(st);
    return report(h3nls_write_data(cfg.get(), out_dir.c_str(), gen.force));
  }
  if (*sim_cmd) {
    if (auto st = load(sim, cfg, out_dir); st != H3NLS_OK) return report(st);
    return verdict(h3nls_simulate(cfg.get(), out_dir.c_str(), sim.force, &pass), pass);
  }
  if (*swp_cmd) {
    if (auto st = load(swp, cfg, out_dir); st != H3NLS_OK) return report(st);
    return verdict(h3nls_sweep(cfg.get(), out_dir.c_str(), swp.force, threads, &pass), pass);
  }
  if (*aud_cmd) {
    if (auto st = load(aud, cfg, out_dir); st != H3NLS_OK) return report(st);
    return verdict(h3nls_audit(cfg.get(), out_dir.c_str(), aud.force, &pass), pass);
  }
  if (*cal_cmd) {
    if (auto st = load(cal, cfg, out_dir); st != H3NLS_OK) return report(st);
    return report(h3nls_calibrate(cfg.get(), out_dir.c_str(), cal.force));
  }
  if (*res_cmd) {
    if (resume_out.empty()) {
      resume_out = std::filesystem::path(checkpoint).parent_path().string();
      if (resume_out.empty()) resume_out = ".";
    }
    return verdict(h3nls_resume(checkpoint.c_str(), resume_out.c_str(), resume_force, &pass),
                   pass);
  }
  return 2;
}
