#pragma once

// High-low frequency engine.
//
// The datum is split as u0 = psi0 + phi0 with phi0 = e^{s0 Delta} u0. psi
// evolves linearly, phi and u by the cubic flow, and v = u - psi - phi. Time
// is cut into intervals on which the scattering budget integral of
// ||u||_{L^4}^8 reaches eps; at each cut v is absorbed into phi and reset.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "h3nls/propagators.hpp"
#include "h3nls/strichartz.hpp"
#include "json.hpp"

namespace h3nls {

/// Returns (psi0, phi0).
std::pair<RadialField, RadialField> split_initial(const RadialField& u0, double s0);

struct AbsorptionRecord {
  /// E(phi + v) - E(phi) for the pre-absorption fields.
  double dE = 0.0;
  /// integral of |grad phi||grad v| + |grad v|^2.
  double term_I = 0.0;
  /// integral of |phi|^3 |v| + |phi| |v|^3.
  double term_II = 0.0;
  double energy_phi_before = 0.0;
  double energy_phi_after = 0.0;
};

/// phi <- phi + v, v <- 0; psi and u untouched.
std::pair<Decomposition, AbsorptionRecord> absorb_boundary(Decomposition state);

struct HighLowParams {
  double s = 0.95;   // data regularity, bookkeeping only
  double s0 = 1.0 / 256.0;
  double eps = 0.1;
  double T = 20.0;
  std::uint64_t seed = 0;  // bookkeeping only
};

void validate(const HighLowParams& params);

struct IntervalRecord {
  int index = 0;
  double b0 = 0.0;
  double b1 = 0.0;
  /// Scattering budget used on the interval.
  double budget = 0.0;
  /// Contribution of the closing step to the budget.
  double last_increment = 0.0;
  double dE = 0.0;
  double term_I = 0.0;
  double term_II = 0.0;
  /// E(phi(b1-)) - E(phi(b0+)): drift of phi's energy under its own flow.
  double dE_flow = 0.0;
  double E_phi_end = 0.0;
  std::vector<StrichartzTable> strichartz;
};

struct Ledger {
  HighLowParams params;
  double R = 0.0;
  int N = 0;
  double dt = 0.0;
  std::vector<IntervalRecord> intervals;
  std::vector<std::pair<double, double>> energy_phi_trajectory;
  double M_used = 0.0;
  double dE_total = 0.0;

  std::size_t interval_count() const noexcept { return intervals.size(); }
  double max_dE() const;
};

nlohmann::json ledger_to_json(const Ledger& ledger);

struct HighLowResult {
  Ledger ledger;
  EvolutionHistory history;
  Decomposition final_state;
};

/// Step-wise high-low evolution. Resumable: advance() may be called
/// repeatedly, and finish() closes the last interval at the current time.
class HighLowRun {
 public:
  HighLowRun(const RadialField& u0, const HighLowParams& params, const StepperConfig& cfg);
  /// Starts from an explicit decomposition (v must be zero).
  HighLowRun(Decomposition initial, const HighLowParams& params, const StepperConfig& cfg);

  std::int64_t total_steps() const noexcept;
  std::int64_t step_index() const noexcept { return step_; }
  bool done() const noexcept { return step_ >= total_steps(); }

  /// Advances up to `steps` steps (clamped to the horizon).
  void advance(std::int64_t steps);
  void advance_to_end() { advance(total_steps() - step_); }
  /// Closes the open interval at the current time and returns the result.
  HighLowResult finish() &&;

  const Decomposition& state() const noexcept { return state_; }
  const Ledger& ledger() const noexcept { return ledger_; }
  const EvolutionHistory& history() const noexcept { return history_; }
  const HighLowParams& params() const noexcept { return params_; }
  const StepperConfig& stepper_config() const noexcept { return cfg_; }

  /// Complete restorable state for checkpointing.
  struct Internals {
    std::int64_t step = 0;
    double budget = 0.0;
    double prev_u8 = 0.0;
    double interval_start = 0.0;
    double interval_start_energy = 0.0;
    double max_reconstruction_error = 0.0;
    std::vector<std::vector<double>> accumulators;
  };
  Internals internals() const;
  static HighLowRun restore(Decomposition state, const HighLowParams& params,
                            const StepperConfig& cfg, Ledger ledger,
                            EvolutionHistory history, const Internals& internals);

  /// max over samples of ||u - (psi+phi+v)||_2 / ||u||_2.
  double max_reconstruction_error() const noexcept { return max_reconstruction_error_; }

 private:
  struct RestoreTag {};
  HighLowRun(RestoreTag, Decomposition state, const HighLowParams& params,
             const StepperConfig& cfg);

  void start_interval();
  void close_interval(double last_increment);
  double u_l4_eighth() const;
  void check_reconstruction();

  HighLowParams params_;
  StepperConfig cfg_;
  CoEvolver evolver_;
  Decomposition state_;
  Ledger ledger_;
  EvolutionHistory history_;
  std::vector<StrichartzAccumulator> tables_;
  LebesgueNorm l4_;
  std::int64_t step_ = 0;
  double budget_ = 0.0;
  double prev_u8_ = 0.0;
  double interval_start_ = 0.0;
  double interval_start_energy_ = 0.0;
  double max_reconstruction_error_ = 0.0;
};

HighLowResult run_highlow(const RadialField& u0, const HighLowParams& params,
                          const StepperConfig& cfg);

struct BudgetVerdict {
  double dE_total = 0.0;
  std::size_t interval_count = 0;
  double max_dE = 0.0;
  double comparison = 0.0;  // interval_count * s0^{(3/2)s - 11/8}
  double rho = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

BudgetVerdict budget_check(const Ledger& ledger, double tolerance, double c_cal);

}  // namespace h3nls
