#include "h3nls/propagators.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace h3nls {

void validate(const StepperConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
    fail(ErrorCode::invalid_parameter, "time step must be positive");
  if (!(cfg.shell_fraction > 0.0 && cfg.shell_fraction < 1.0))
    fail(ErrorCode::invalid_parameter, "shell fraction must lie in (0,1)");
  if (!(cfg.shell_tolerance > 0.0 && cfg.shell_tolerance < 1.0))
    fail(ErrorCode::invalid_parameter, "shell tolerance must lie in (0,1)");
  if (cfg.retain_every < 0)
    fail(ErrorCode::invalid_parameter, "retention cadence must be >= 0");
}

SplitStepper::SplitStepper(RadialGrid grid, double dt)
    : grid_(std::move(grid)), dt_(dt) {
  if (!std::isfinite(dt)) fail(ErrorCode::invalid_parameter, "time step must be finite");
  const auto lambda = grid_.eigenvalues();
  half_phase_.resize(lambda.size());
  full_phase_.resize(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    half_phase_[i] = std::polar(1.0, -lambda[i] * (0.5 * dt));
    full_phase_[i] = std::polar(1.0, -lambda[i] * dt);
  }
}

void SplitStepper::linear_phase(RadialField& f, std::span<const Complex> phase) const {
  auto w = f.values();
  grid_.sine_sum(w);
  const double scale = 2.0 / grid_.intervals();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= phase[i];
  grid_.sine_sum(w);
  for (auto& z : w) z *= scale;
}

void SplitStepper::nonlinear_phase(RadialField& f, double tau) const {
  const auto inv_sh2 = grid_.inv_sinh_squared();
  auto w = f.values();
  for (std::size_t j = 0; j < w.size(); ++j)
    w[j] *= std::polar(1.0, -tau * std::norm(w[j]) * inv_sh2[j]);
}

void SplitStepper::linear_step(RadialField& f) const {
  require_same_grid(grid_, f.grid(), "linear step");
  linear_phase(f, full_phase_);
}

void SplitStepper::strang_step(RadialField& f) const {
  require_same_grid(grid_, f.grid(), "strang step");
  linear_phase(f, half_phase_);
  nonlinear_phase(f, dt_);
  linear_phase(f, half_phase_);
}

void SplitStepper::forced_step(RadialField& v, std::span<const Complex> forcing_w) const {
  require_same_grid(grid_, v.grid(), "forced step");
  linear_phase(v, half_phase_);
  auto w = v.values();
  const Complex minus_i_dt{0.0, -dt_};
  for (std::size_t j = 0; j < w.size(); ++j) w[j] += minus_i_dt * forcing_w[j];
  linear_phase(v, half_phase_);
}

RadialField linear_flow(const RadialField& f, double t) {
  if (t == 0.0) return f;
  return inverse_transform(apply_multiplier(
      transform(f), [t](double lambda) { return std::polar(1.0, -lambda * t); }));
}

RadialField strang_step(const RadialField& f, double dt) {
  RadialField out = f;
  SplitStepper(f.grid(), dt).strang_step(out);
  return out;
}

RadialField forced_strang_step(const RadialField& v, const RadialField& u,
                               const RadialField& phi, double dt) {
  require_same_grid(v.grid(), u.grid(), "forced_strang_step");
  require_same_grid(v.grid(), phi.grid(), "forced_strang_step");
  // w-representation of |u|^2 u - |phi|^2 phi is (|w_u|^2 w_u - |w_phi|^2 w_phi) / sinh^2.
  const auto inv_sh2 = v.grid().inv_sinh_squared();
  std::vector<Complex> forcing(v.size());
  for (std::size_t j = 0; j < forcing.size(); ++j)
    forcing[j] = (std::norm(u[j]) * u[j] - std::norm(phi[j]) * phi[j]) * inv_sh2[j];
  RadialField out = v;
  SplitStepper(v.grid(), dt).forced_step(out, forcing);
  return out;
}

std::string history_csv(const EvolutionHistory& history) {
  std::ostringstream out;
  out << "t,mass_u,energy_u,energy_phi,L4x_u,L4x_zeta,shell_mass\n";
  char line[512];
  for (const auto& s : history.samples) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  s.t, s.mass_u, s.energy_u, s.energy_phi, s.l4_u, s.l4_zeta,
                  s.shell_mass);
    out << line;
  }
  return out.str();
}

CoEvolver::CoEvolver(const RadialGrid& grid, const StepperConfig& cfg)
    : cfg_(cfg), stepper_(grid, cfg.dt), l4_(grid, 4.0) {
  validate(cfg);
  const auto r = grid.nodes();
  const double inner = (1.0 - cfg.shell_fraction) * grid.radius();
  shell_begin_ = 0;
  while (shell_begin_ < r.size() && r[shell_begin_] <= inner) ++shell_begin_;
}

void CoEvolver::step(Decomposition& state) const {
  stepper_.strang_step(state.u);
  stepper_.strang_step(state.phi);
  stepper_.linear_step(state.psi);
  auto v = state.v.values();
  for (std::size_t j = 0; j < v.size(); ++j)
    v[j] = state.u[j] - state.psi[j] - state.phi[j];
  if (!state.u.all_finite() || !state.phi.all_finite() || !state.psi.all_finite())
    fail(ErrorCode::numeric_fatal, "non-finite field values at t = " +
                                       std::to_string(state.t + cfg_.dt));
}

NormSample CoEvolver::sample(const Decomposition& state) const {
  NormSample s;
  s.t = state.t;
  const auto& g = state.u.grid();
  double total = 0.0;
  double shell = 0.0;
  for (std::size_t j = 0; j < state.u.size(); ++j) {
    const double m = std::norm(state.u[j]);
    total += m;
    if (j >= shell_begin_) shell += m;
  }
  s.mass_u = 4.0 * std::numbers::pi * g.spacing() * total;
  s.shell_mass = total > 0.0 ? shell / total : 0.0;
  const double l4u = l4_.integral(state.u.values());
  s.l4_u = std::pow(l4u, 0.25);
  s.energy_u = 0.5 * std::pow(sobolev_norm(state.u, 1.0), 2) + 0.25 * l4u;
  s.energy_phi = energy(state.phi);
  std::vector<Complex> zeta(state.u.size());
  for (std::size_t j = 0; j < zeta.size(); ++j) zeta[j] = state.phi[j] + state.v[j];
  s.l4_zeta = l4_(zeta);
  return s;
}

void CoEvolver::record(EvolutionHistory& history, const Decomposition& state,
                       std::int64_t step_index) const {
  const auto s = sample(state);
  history.samples.push_back(s);
  history.retain_every = cfg_.retain_every;
  if (cfg_.retain_every > 0 && step_index % cfg_.retain_every == 0)
    history.snapshots.push_back({state.t, state.u, state.psi, state.phi});
  if (s.shell_mass > cfg_.shell_tolerance && !history.shell_flagged) {
    history.shell_flagged = true;
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "outer-shell mass fraction %.3e exceeds tolerance %.1e at t = %.6g",
                  s.shell_mass, cfg_.shell_tolerance, s.t);
    history.warnings.emplace_back(msg);
  }
}

std::pair<Decomposition, EvolutionHistory> evolve_window(
    Decomposition state, double t0, double t1, const StepperConfig& cfg,
    std::span<Accumulator* const> accumulators) {
  validate(cfg);
  EvolutionHistory history;
  if (t1 == t0) return {std::move(state), std::move(history)};
  if (!(t1 > t0)) fail(ErrorCode::invalid_parameter, "window end must follow its start");
  const double exact_steps = (t1 - t0) / cfg.dt;
  const auto steps = static_cast<std::int64_t>(std::llround(exact_steps));
  if (steps < 1 || std::abs(exact_steps - static_cast<double>(steps)) > 1e-6)
    fail(ErrorCode::invalid_parameter, "window length must be a multiple of dt");

  const CoEvolver evolver(state.u.grid(), cfg);
  state.t = t0;
  evolver.record(history, state, 0);
  for (std::int64_t n = 1; n <= steps; ++n) {
    evolver.step(state);
    state.t = t0 + static_cast<double>(n) * cfg.dt;
    evolver.record(history, state, n);
    if (n == steps && cfg.retain_every > 0 && n % cfg.retain_every != 0)
      history.snapshots.push_back({state.t, state.u, state.psi, state.phi});
    for (auto* acc : accumulators) acc->observe(state);
  }
  return {std::move(state), std::move(history)};
}

}  // namespace h3nls
