#pragma once

// Experiment orchestration: configuration, single runs, sweeps, reports and
// calibration.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "h3nls/diagnostics.hpp"
#include "h3nls/highlow.hpp"
#include "json.hpp"

namespace h3nls {

/// Flat experiment configuration. JSON keys equal the member names.
struct RunConfig {
  // grid
  double R = 40.0;
  int N = 4096;
  // stepper
  double dt = 2e-3;
  int retain_every = 10;
  double shell_fraction = 0.1;
  double shell_tolerance = 1e-6;
  // physics
  double s = 0.95;
  double s0 = 1.0 / 256.0;
  double eps = 0.1;
  double T = 20.0;
  // data
  std::uint64_t seed = 7;
  double amplitude = 20.0;
  double delta_spec = 0.01;
  // audits
  std::vector<std::string> audits{"conservation", "morawetz", "scattering", "budget",
                                  "splitting"};
  std::string calibration;  // path; relative paths resolve against the config file
  double sigma_scatter = 0.5;
  double bootstrap_exponent = 1.5;
  double morawetz_tolerance = 0.2;
  double budget_tolerance = 0.0;
  double smoothing_delta = 0.01;
  // sweeps: empty lists mean the single value above
  std::vector<double> sweep_s;
  std::vector<double> sweep_s0;
  std::vector<std::uint64_t> sweep_seeds;
  // outputs
  std::string out = "out";
  std::int64_t checkpoint_every = 0;  // steps; 0 disables

  HighLowParams highlow_params() const;
  StepperConfig stepper_config() const;
  RadialGrid grid() const;
};

/// Throws ErrorCode::config on any violated constraint.
void validate(const RunConfig& cfg);
nlohmann::json config_to_json(const RunConfig& cfg);
/// Unknown keys and wrong types are configuration errors.
RunConfig config_from_json(const nlohmann::json& j);
/// Reads a config file; a relative calibration path is resolved against the
/// file's directory.
RunConfig load_config(const std::string& path);

/// Audit names accepted in RunConfig::audits.
const std::vector<std::string>& known_audits();
/// Audits whose thresholds come from the calibration file.
bool audit_needs_calibration(const std::string& name);

/// Exponents compared in the bootstrap step: the predicted bound
/// -b (1 - s) against the budget exponent -s/2 + 3/8.
struct BootstrapCheck {
  double predicted_exponent = 0.0;
  double budget_exponent = 0.0;
  bool flag = false;  // predicted_exponent > budget_exponent
};

BootstrapCheck bootstrap_check(double s, double b = 1.5);

struct RunOutput {
  nlohmann::json report;
  Ledger ledger;
  std::string history_csv;
  /// Whole-run tables: psi at sigma 0 and 1, phi and v at sigma 1.
  std::vector<StrichartzTable> strichartz;
  bool audits_pass = true;
};

/// Evolution in progress for one configuration; checkpointable.
class Experiment {
 public:
  explicit Experiment(RunConfig cfg);
  Experiment(RunConfig cfg, HighLowRun run);

  const RunConfig& config() const noexcept { return cfg_; }
  const HighLowRun& run() const noexcept { return run_; }
  bool done() const noexcept { return run_.done(); }
  void advance(std::int64_t steps) { run_.advance(steps); }
  /// Closes the run, evaluates the configured audits and builds the report.
  RunOutput finish(const std::optional<Calibration>& cal) &&;

 private:
  RunConfig cfg_;
  HighLowRun run_;
};

void save_checkpoint(const std::string& path, const Experiment& ex);
Experiment load_checkpoint(const std::string& path);
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Loads the calibration named by cfg if any calibrated audit is requested.
std::optional<Calibration> calibration_for(const RunConfig& cfg);

RunOutput run(const RunConfig& cfg, const std::optional<Calibration>& cal);

struct SweepPoint {
  double s = 0.0;
  double s0 = 0.0;
  std::uint64_t seed = 0;
  RunOutput output;
  double energy_phi0 = 0.0;
  double max_dE = 0.0;
  double psi_strichartz = 0.0;  // S^0 surrogate of psi over the run
  double v_strichartz = 0.0;    // max over intervals of the S^1 surrogate of v
};

struct SweepOutput {
  nlohmann::json report;
  std::vector<SweepPoint> points;
  bool audits_pass = true;
};

/// Runs every (s, s0, seed) combination; points are independent and may run
/// on `threads` workers. Results are ordered by (s, s0, seed).
SweepOutput sweep(const RunConfig& cfg, const std::optional<Calibration>& cal, int threads);

/// E(phi0) = E(e^{s0 Delta} u0) for each s0, without evolution.
std::vector<std::pair<double, double>> splitting_energies(const RunConfig& cfg,
                                                          const std::vector<double>& s0s);

/// Grid-level batteries: Bernstein, radial Sobolev and local smoothing.
struct AuditOutput {
  nlohmann::json report;
  bool audits_pass = true;
};
AuditOutput audit_batteries(const RunConfig& cfg, const Calibration& cal);

/// Calibration pass: the reference run plus the exact grid constants.
Calibration calibrate(const RunConfig& cfg);

/// Fit summary with target; status "fit skipped (<2 points)" when undefined.
nlohmann::json fit_json(const std::string& quantity, double target, double tolerance,
                        bool one_sided, const std::vector<std::pair<double, double>>& pts,
                        bool* pass);

/// Writes text to dir/name; refuses to overwrite unless force.
void write_output(const std::string& dir, const std::string& name, const std::string& text,
                  bool force);
/// Fails if any of the named files already exists in dir and force is off.
void claim_outputs(const std::string& dir, const std::vector<std::string>& names, bool force);

}  // namespace h3nls
