#pragma once

// Time evolution for i u_t + Delta u = |u|^2 u on radial fields.
//
// The linear part is applied exactly in the sine basis (phase e^{-i lambda t});
// the cubic part is the exact pointwise phase rotation w <- w e^{-i dt |u|^2}.
// Strang splitting composes half linear, full nonlinear, half linear.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "h3nls/calculus.hpp"
#include "h3nls/radial_core.hpp"

namespace h3nls {

/// Co-evolved high-low state. v is the residual u - psi - phi.
struct Decomposition {
  RadialField psi;
  RadialField phi;
  RadialField v;
  RadialField u;
  double t = 0.0;

  RadialField zeta() const { return phi + v; }
};

struct StepperConfig {
  double dt = 2e-3;
  double shell_fraction = 0.1;
  double shell_tolerance = 1e-6;
  /// Full fields are retained every this many steps; 0 keeps norms only.
  int retain_every = 10;
};

void validate(const StepperConfig& cfg);

RadialField linear_flow(const RadialField& f, double t);
RadialField strang_step(const RadialField& f, double dt);
/// One Strang step of i v_t + Delta v = |u|^2 u - |phi|^2 phi with the forcing
/// frozen at the supplied u and phi.
RadialField forced_strang_step(const RadialField& v, const RadialField& u,
                               const RadialField& phi, double dt);

/// Split-step integrator with phase tables cached for one step size.
class SplitStepper {
 public:
  SplitStepper(RadialGrid grid, double dt);

  double dt() const noexcept { return dt_; }
  const RadialGrid& grid() const noexcept { return grid_; }

  void linear_step(RadialField& f) const;   // e^{i dt Delta}
  void strang_step(RadialField& f) const;
  void forced_step(RadialField& v, std::span<const Complex> forcing_w) const;

 private:
  void linear_phase(RadialField& f, std::span<const Complex> phase) const;
  void nonlinear_phase(RadialField& f, double tau) const;

  RadialGrid grid_;
  double dt_;
  std::vector<Complex> half_phase_;
  std::vector<Complex> full_phase_;
};

/// Per-sample record kept at every step.
struct NormSample {
  double t = 0.0;
  double mass_u = 0.0;
  double energy_u = 0.0;
  double energy_phi = 0.0;
  double l4_u = 0.0;
  double l4_zeta = 0.0;
  /// Fraction of the mass of u in the outer shell of the domain.
  double shell_mass = 0.0;
};

struct Snapshot {
  double t = 0.0;
  RadialField u;
  RadialField psi;
  RadialField phi;
};

struct EvolutionHistory {
  std::vector<NormSample> samples;
  std::vector<Snapshot> snapshots;
  std::vector<std::string> warnings;
  bool shell_flagged = false;
  int retain_every = 0;

  bool empty() const noexcept { return samples.empty(); }
};

/// CSV with header t,mass_u,energy_u,energy_phi,L4x_u,L4x_zeta,shell_mass.
std::string history_csv(const EvolutionHistory& history);

/// Observer updated once per step with the post-step state.
class Accumulator {
 public:
  virtual ~Accumulator() = default;
  virtual void observe(const Decomposition& state) = 0;
};

/// Advances u and phi by Strang steps and psi by the exact linear flow;
/// v is refreshed as u - psi - phi after each step.
class CoEvolver {
 public:
  explicit CoEvolver(const RadialGrid& grid, const StepperConfig& cfg);

  /// Advances the fields by one step; the caller owns the time stamp.
  void step(Decomposition& state) const;
  NormSample sample(const Decomposition& state) const;
  /// Appends the sample (and a snapshot when due) and updates the shell flag.
  void record(EvolutionHistory& history, const Decomposition& state,
              std::int64_t step_index) const;

  const StepperConfig& config() const noexcept { return cfg_; }
  const SplitStepper& stepper() const noexcept { return stepper_; }

 private:
  StepperConfig cfg_;
  SplitStepper stepper_;
  LebesgueNorm l4_;
  std::size_t shell_begin_;
};

std::pair<Decomposition, EvolutionHistory> evolve_window(
    Decomposition state, double t0, double t1, const StepperConfig& cfg,
    std::span<Accumulator* const> accumulators = {});

}  // namespace h3nls
