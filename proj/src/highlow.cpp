#include "h3nls/highlow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace h3nls {

namespace {

constexpr std::array<FieldSelector, 3> kTableFields{FieldSelector::psi, FieldSelector::phi,
                                                    FieldSelector::v};
constexpr std::array<double, 2> kTableSigmas{0.0, 1.0};

nlohmann::json exponent_json(double p) {
  if (std::isinf(p)) return "inf";
  return p;
}

}  // namespace

std::pair<RadialField, RadialField> split_initial(const RadialField& u0, double s0) {
  if (!(s0 > 0.0) || !std::isfinite(s0))
    fail(ErrorCode::invalid_parameter, "split scale s0 must be positive");
  auto phi0 = project(u0, Projection::low, s0);
  auto psi0 = u0 - phi0;
  return {std::move(psi0), std::move(phi0)};
}

std::pair<Decomposition, AbsorptionRecord> absorb_boundary(Decomposition state) {
  AbsorptionRecord rec;
  const auto& grid = state.u.grid();
  auto merged = state.phi + state.v;
  rec.energy_phi_before = energy(state.phi);
  rec.energy_phi_after = energy(merged);
  rec.dE = rec.energy_phi_after - rec.energy_phi_before;

  const auto grad_phi = radial_gradient(state.phi);
  const auto grad_v = radial_gradient(state.v);
  const auto phi = to_physical(state.phi);
  const auto v = to_physical(state.v);
  std::vector<double> kinetic(grid.size());
  std::vector<double> quartic(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double gp = std::abs(grad_phi[j]);
    const double gv = std::abs(grad_v[j]);
    const double a = std::abs(phi[j]);
    const double b = std::abs(v[j]);
    kinetic[j] = gp * gv + gv * gv;
    quartic[j] = a * a * a * b + a * b * b * b;
  }
  rec.term_I = volume_integral(grid, kinetic);
  rec.term_II = volume_integral(grid, quartic);

  state.phi = std::move(merged);
  state.v = RadialField(grid);
  return {std::move(state), rec};
}

void validate(const HighLowParams& p) {
  if (!(p.s0 > 0.0) || !std::isfinite(p.s0))
    fail(ErrorCode::invalid_parameter, "s0 must be positive");
  if (!(p.eps > 0.0 && p.eps < 1.0))
    fail(ErrorCode::invalid_parameter, "eps must lie in (0,1)");
  if (!(p.T > 0.0) || !std::isfinite(p.T))
    fail(ErrorCode::invalid_parameter, "horizon T must be positive");
}

double Ledger::max_dE() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& rec : intervals) m = std::max(m, rec.dE);
  return m;
}

nlohmann::json ledger_to_json(const Ledger& ledger) {
  using nlohmann::json;
  json intervals = json::array();
  for (const auto& rec : ledger.intervals) {
    json tables = json::array();
    for (const auto& t : rec.strichartz) {
      json rows = json::array();
      for (const auto& row : t.rows)
        rows.push_back({{"p", exponent_json(row.pair.p)},
                        {"q", row.pair.q},
                        {"value", row.value},
                        {"admissible", row.admissible}});
      tables.push_back({{"field", to_string(t.field)},
                        {"sigma", t.sigma},
                        {"surrogate", t.surrogate},
                        {"rows", std::move(rows)}});
    }
    intervals.push_back({{"j", rec.index},
                         {"b0", rec.b0},
                         {"b1", rec.b1},
                         {"budget", rec.budget},
                         {"dE", rec.dE},
                         {"termI", rec.term_I},
                         {"termII", rec.term_II},
                         {"E_phi_end", rec.E_phi_end},
                         {"dE_flow", rec.dE_flow},
                         {"last_increment", rec.last_increment},
                         {"strichartz", std::move(tables)}});
  }
  const auto& p = ledger.params;
  return {{"params",
           {{"s", p.s},
            {"s0", p.s0},
            {"eps", p.eps},
            {"R", ledger.R},
            {"N", ledger.N},
            {"dt", ledger.dt},
            {"T", p.T},
            {"seed", p.seed}}},
          {"intervals", std::move(intervals)},
          {"totals",
           {{"M_used", ledger.M_used},
            {"dE_total", ledger.dE_total},
            {"interval_count", ledger.interval_count()}}}};
}

HighLowRun::HighLowRun(RestoreTag, Decomposition state, const HighLowParams& params,
                       const StepperConfig& cfg)
    : params_(params),
      cfg_(cfg),
      evolver_(state.u.grid(), cfg),
      state_(std::move(state)),
      l4_(state_.u.grid(), 4.0) {
  validate(params_);
  const auto& grid = state_.u.grid();
  for (const auto field : kTableFields)
    for (const auto sigma : kTableSigmas) tables_.emplace_back(grid, field, sigma);
  ledger_.params = params_;
  ledger_.R = grid.radius();
  ledger_.N = grid.intervals();
  ledger_.dt = cfg_.dt;
}

HighLowRun::HighLowRun(Decomposition initial, const HighLowParams& params,
                       const StepperConfig& cfg)
    : HighLowRun(RestoreTag{}, std::move(initial), params, cfg) {
  require_same_grid(state_.u.grid(), state_.psi.grid(), "decomposition");
  require_same_grid(state_.u.grid(), state_.phi.grid(), "decomposition");
  require_same_grid(state_.u.grid(), state_.v.grid(), "decomposition");
  for (const auto z : state_.v.values())
    if (z != Complex{}) fail(ErrorCode::invalid_argument, "initial v must vanish");
  state_.t = 0.0;
  prev_u8_ = u_l4_eighth();
  start_interval();
  check_reconstruction();
  evolver_.record(history_, state_, 0);
}

HighLowRun::HighLowRun(const RadialField& u0, const HighLowParams& params,
                       const StepperConfig& cfg)
    : HighLowRun(
          [&] {
            auto [psi0, phi0] = split_initial(u0, params.s0);
            return Decomposition{std::move(psi0), std::move(phi0), RadialField(u0.grid()),
                                 u0, 0.0};
          }(),
          params, cfg) {}

std::int64_t HighLowRun::total_steps() const noexcept {
  return static_cast<std::int64_t>(std::llround(params_.T / cfg_.dt));
}

double HighLowRun::u_l4_eighth() const {
  const double I = l4_.integral(state_.u.values());
  return I * I;
}

void HighLowRun::check_reconstruction() {
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t j = 0; j < state_.u.size(); ++j) {
    err += std::norm(state_.u[j] - (state_.psi[j] + state_.phi[j] + state_.v[j]));
    ref += std::norm(state_.u[j]);
  }
  const double rel = ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err);
  max_reconstruction_error_ = std::max(max_reconstruction_error_, rel);
}

void HighLowRun::start_interval() {
  budget_ = 0.0;
  interval_start_ = state_.t;
  interval_start_energy_ = energy(state_.phi);
  ledger_.energy_phi_trajectory.emplace_back(state_.t, interval_start_energy_);
  for (auto& acc : tables_) acc.reset(state_);
}

void HighLowRun::close_interval(double last_increment) {
  IntervalRecord rec;
  rec.index = static_cast<int>(ledger_.intervals.size()) + 1;
  rec.b0 = interval_start_;
  rec.b1 = state_.t;
  rec.budget = budget_;
  rec.last_increment = last_increment;
  for (const auto& acc : tables_) rec.strichartz.push_back(acc.table());

  auto [next, absorbed] = absorb_boundary(std::move(state_));
  state_ = std::move(next);
  rec.dE = absorbed.dE;
  rec.term_I = absorbed.term_I;
  rec.term_II = absorbed.term_II;
  rec.dE_flow = absorbed.energy_phi_before - interval_start_energy_;
  rec.E_phi_end = absorbed.energy_phi_after;
  ledger_.dE_total += rec.dE;
  ledger_.intervals.push_back(std::move(rec));
  start_interval();
}

void HighLowRun::advance(std::int64_t steps) {
  const auto end = std::min(total_steps(), step_ + std::max<std::int64_t>(steps, 0));
  while (step_ < end) {
    evolver_.step(state_);
    ++step_;
    state_.t = static_cast<double>(step_) * cfg_.dt;
    check_reconstruction();
    for (auto& acc : tables_) acc.observe(state_);

    const double cur = u_l4_eighth();
    const double increment = 0.5 * cfg_.dt * (prev_u8_ + cur);
    prev_u8_ = cur;
    budget_ += increment;
    ledger_.M_used += increment;
    if (budget_ >= params_.eps) {
      close_interval(increment);
      check_reconstruction();
    }

    evolver_.record(history_, state_, step_);
    if (step_ == total_steps() && cfg_.retain_every > 0 && step_ % cfg_.retain_every != 0)
      history_.snapshots.push_back({state_.t, state_.u, state_.psi, state_.phi});
  }
}

HighLowResult HighLowRun::finish() && {
  if (state_.t > interval_start_ || ledger_.intervals.empty()) {
    // last_increment is not meaningful for a horizon cut.
    close_interval(0.0);
  }
  return {std::move(ledger_), std::move(history_), std::move(state_)};
}

HighLowRun::Internals HighLowRun::internals() const {
  Internals in;
  in.step = step_;
  in.budget = budget_;
  in.prev_u8 = prev_u8_;
  in.interval_start = interval_start_;
  in.interval_start_energy = interval_start_energy_;
  in.max_reconstruction_error = max_reconstruction_error_;
  for (const auto& acc : tables_) in.accumulators.push_back(acc.state());
  return in;
}

HighLowRun HighLowRun::restore(Decomposition state, const HighLowParams& params,
                               const StepperConfig& cfg, Ledger ledger,
                               EvolutionHistory history, const Internals& in) {
  HighLowRun run(RestoreTag{}, std::move(state), params, cfg);
  if (in.accumulators.size() != run.tables_.size())
    fail(ErrorCode::corrupt, "checkpoint accumulator count mismatch");
  run.ledger_ = std::move(ledger);
  run.history_ = std::move(history);
  run.step_ = in.step;
  run.budget_ = in.budget;
  run.prev_u8_ = in.prev_u8;
  run.interval_start_ = in.interval_start;
  run.interval_start_energy_ = in.interval_start_energy;
  run.max_reconstruction_error_ = in.max_reconstruction_error;
  for (std::size_t i = 0; i < run.tables_.size(); ++i)
    run.tables_[i].restore(in.accumulators[i]);
  return run;
}

HighLowResult run_highlow(const RadialField& u0, const HighLowParams& params,
                          const StepperConfig& cfg) {
  HighLowRun run(u0, params, cfg);
  run.advance_to_end();
  return std::move(run).finish();
}

BudgetVerdict budget_check(const Ledger& ledger, double tolerance, double c_cal) {
  if (ledger.intervals.empty())
    fail(ErrorCode::invalid_argument, "budget_check needs a nonempty ledger");
  BudgetVerdict v;
  v.dE_total = ledger.dE_total;
  v.interval_count = ledger.interval_count();
  v.max_dE = ledger.max_dE();
  const double exponent = 1.5 * ledger.params.s - 11.0 / 8.0;
  v.comparison = static_cast<double>(v.interval_count) * std::pow(ledger.params.s0, exponent);
  v.rho = v.dE_total / v.comparison;
  v.threshold = c_cal * (1.0 + tolerance);
  v.pass = v.rho <= v.threshold;
  return v;
}

}  // namespace h3nls
