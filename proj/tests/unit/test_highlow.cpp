#include <cmath>
#include <limits>

#include "doctest.h"
#include "h3nls/data_gen.hpp"
#include "h3nls/highlow.hpp"
#include "support.hpp"

using namespace h3nls;
using namespace h3nls::testing;

namespace {

constexpr double kUlp = std::numeric_limits<double>::epsilon();

struct Setup {
  RadialGrid grid = make_grid(20.0, 1024);
  HighLowParams params;
  StepperConfig cfg;
  RadialField u0;

  explicit Setup(double amplitude, double T = 2.0, std::uint64_t seed = 5)
      : u0(gen_data(0.95, seed, amplitude, grid)) {
    params.s = 0.95;
    params.s0 = 1.0 / 256;
    params.eps = 0.1;
    params.T = T;
    params.seed = seed;
    cfg.dt = 2e-3;
    cfg.retain_every = 50;
  }
};

bool identical(const Ledger& a, const Ledger& b) {
  return ledger_to_json(a).dump() == ledger_to_json(b).dump();
}

}  // namespace

TEST_CASE("initial split") {
  const auto g = make_grid(40.0, 2048);
  const auto u0 = gen_data(0.95, 7, 20.0, g);
  double prev = 2.0;
  for (int e = 4; e <= 16; e += 2) {
    const double s0 = std::ldexp(1.0, -e);
    const auto [psi0, phi0] = split_initial(u0, s0);
    CHECK(phi0 == project(u0, Projection::low, s0));
    for (std::size_t j = 0; j < u0.size(); ++j)
      REQUIRE(std::abs(psi0[j] + phi0[j] - u0[j]) <=
              2.0 * kUlp * (std::abs(u0[j]) + std::abs(phi0[j])));
    double sup = 0.0;
    for (double l : g.eigenvalues()) sup = std::max(sup, 1.0 - std::exp(-s0 * l));
    const double frac = lebesgue_norm(psi0, 2.0) / lebesgue_norm(u0, 2.0);
    CHECK(frac <= sup * (1 + 1e-12));
    CHECK(frac < prev);
    prev = frac;
  }
}

TEST_CASE("boundary absorption") {
  const Setup st(20.0);
  const auto [psi0, phi0] = split_initial(st.u0, st.params.s0);

  SUBCASE("v = 0 leaves phi alone") {
    Decomposition d{psi0, phi0, RadialField(st.grid), st.u0, 0.3};
    const auto [out, rec] = absorb_boundary(d);
    CHECK(out.phi == phi0);
    CHECK(out.u == st.u0);
    CHECK(rec.dE == 0.0);
    CHECK(rec.term_I == 0.0);
    CHECK(rec.term_II == 0.0);
  }

  SUBCASE("u is untouched and v is zeroed") {
    auto [d, hist] = evolve_window(Decomposition{psi0, phi0, RadialField(st.grid), st.u0, 0.0},
                                   0.0, 0.2, st.cfg);
    REQUIRE(max_abs(d.v) > 0.0);
    const auto u_before = d.u;
    const auto phi_plus_v = d.phi + d.v;
    const auto [out, rec] = absorb_boundary(d);
    CHECK(out.u == u_before);
    CHECK(lebesgue_norm(out.u - u_before, 2.0) == 0.0);
    CHECK(max_abs(out.v) == 0.0);
    CHECK(out.phi == phi_plus_v);
    CHECK(rec.dE == doctest::Approx(energy(phi_plus_v) - energy(d.phi)).epsilon(1e-12));
    CHECK(rec.energy_phi_after == energy(out.phi));
  }
}

TEST_CASE("interval bookkeeping on a seeded run") {
  const Setup st(20.0);
  HighLowRun run(st.u0, st.params, st.cfg);
  RadialField u_free = st.u0;
  const SplitStepper stepper(st.grid, st.cfg.dt);
  std::size_t seen = 0;
  while (!run.done()) {
    run.advance(1);
    stepper.strang_step(u_free);
    // u never feels the absorptions
    REQUIRE(run.state().u == u_free);
    if (run.ledger().interval_count() > seen) {
      seen = run.ledger().interval_count();
      CHECK(max_abs(run.state().v) == 0.0);
    }
  }
  CHECK(run.max_reconstruction_error() <= 1e-12);
  const auto result = std::move(run).finish();
  const auto& L = result.ledger;
  REQUIRE(L.interval_count() >= 3);
  CHECK(L.interval_count() <= std::size_t(std::floor(L.M_used / st.params.eps)) + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < L.intervals.size(); ++i) {
    const auto& rec = L.intervals[i];
    sum += rec.budget;
    CHECK(rec.dE <= rec.term_I + rec.term_II + 1e-10);
    if (i + 1 < L.intervals.size()) {
      CHECK(rec.budget >= st.params.eps);
      CHECK(rec.budget - rec.last_increment < st.params.eps);
      CHECK(L.intervals[i + 1].b0 == rec.b1);
    }
  }
  CHECK(sum == doctest::Approx(L.M_used).epsilon(1e-12));
  CHECK(L.intervals.front().b0 == 0.0);
  CHECK(L.intervals.back().b1 == doctest::Approx(st.params.T).epsilon(1e-12));
}

TEST_CASE("tiny data never closes an interval") {
  Setup st(1e-6, 1.0);
  const auto result = run_highlow(st.u0, st.params, st.cfg);
  REQUIRE(result.ledger.interval_count() == 1);
  CHECK(std::abs(result.ledger.intervals[0].dE) <= 1e-20);
  CHECK(result.ledger.intervals[0].budget < st.params.eps);
}

TEST_CASE("runs are deterministic and resumable in pieces") {
  const Setup st(20.0, 1.0);
  const auto a = run_highlow(st.u0, st.params, st.cfg);
  const auto b = run_highlow(st.u0, st.params, st.cfg);
  CHECK(identical(a.ledger, b.ledger));
  CHECK(history_csv(a.history) == history_csv(b.history));

  HighLowRun pieces(st.u0, st.params, st.cfg);
  for (std::int64_t n : {1, 7, 100, 3, 10000}) pieces.advance(n);
  const auto c = std::move(pieces).finish();
  CHECK(identical(a.ledger, c.ledger));
  CHECK(c.final_state.u == a.final_state.u);
  CHECK(c.final_state.phi == a.final_state.phi);
}

TEST_CASE("budget check") {
  SUBCASE("single tiny interval") {
    Setup st(1e-6, 1.0);
    const auto result = run_highlow(st.u0, st.params, st.cfg);
    const auto v = budget_check(result.ledger, 0.0, 1.0);
    CHECK(v.rho < 1e-15);
    CHECK(v.pass);
  }
  SUBCASE("zero cumulative increment") {
    Ledger L;
    L.params.s = 0.95;
    L.params.s0 = 1.0 / 256;
    L.intervals.resize(3);
    const auto v = budget_check(L, 0.0, 1.0);
    CHECK(v.rho == 0.0);
    CHECK(v.pass);
    CHECK(v.comparison == doctest::Approx(3 * std::pow(1.0 / 256, 1.5 * 0.95 - 11.0 / 8)));
  }
}

TEST_CASE("parameter guards") {
  HighLowParams p;
  p.s0 = 0.0;
  CHECK(error_code_of([&] { validate(p); }) == ErrorCode::invalid_parameter);
  p = HighLowParams{};
  p.eps = 1.5;
  CHECK(error_code_of([&] { validate(p); }) == ErrorCode::invalid_parameter);
  p = HighLowParams{};
  p.T = -1.0;
  CHECK(error_code_of([&] { validate(p); }) == ErrorCode::invalid_parameter);
}
