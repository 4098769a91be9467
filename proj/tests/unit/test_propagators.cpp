#include <cmath>
#include <numbers>

#include "doctest.h"
#include "h3nls/data_gen.hpp"
#include "h3nls/propagators.hpp"
#include "support.hpp"

using namespace h3nls;
using namespace h3nls::testing;
using std::numbers::pi;

namespace {

// Smooth radial Gaussian u = A e^{-r^2}.
RadialField gaussian(const RadialGrid& g, double A) {
  RadialField f(g);
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double r = g.node(j);
    f[j] = std::sinh(r) * A * std::exp(-r * r);
  }
  return f;
}

RadialField evolve(RadialField f, double dt, double T, double* energy_drift = nullptr) {
  const SplitStepper st(f.grid(), dt);
  const auto n = std::llround(T / dt);
  const double e0 = energy(f);
  double worst = 0.0;
  for (long long i = 0; i < n; ++i) {
    st.strang_step(f);
    if (energy_drift) worst = std::max(worst, std::abs(energy(f) - e0) / e0);
  }
  if (energy_drift) *energy_drift = worst;
  return f;
}

}  // namespace

TEST_CASE("linear flow") {
  const auto g = make_grid(pi, 128);
  const auto f = random_field(g, 1);
  CHECK(linear_flow(f, 0.0) == f);

  for (int k : {1, 2, 6}) {
    const auto mode = sine_mode(g, k);
    const auto out = linear_flow(mode, pi / (1.0 + k * k));
    CHECK(max_abs_diff(out, -1.0 * mode) < 1e-12);
  }

  const auto big = make_grid(40.0, 2048);
  const auto h = random_field(big, 2);
  const auto later = linear_flow(h, 7.3);
  for (double sigma : {0.0, 0.5, 1.0})
    CHECK(rel_diff(sobolev_norm(later, sigma), sobolev_norm(h, sigma)) < 1e-11);

  const auto composed = linear_flow(linear_flow(h, 0.4), 1.1);
  CHECK(max_abs_diff(composed, linear_flow(h, 1.5)) / max_abs(h) < 1e-12);
}

TEST_CASE("strang step basics") {
  const auto g = make_grid(20.0, 1024);
  CHECK(max_abs(strang_step(RadialField(g), 1e-3)) == 0.0);

  const auto f = gaussian(g, 4.0);
  const double m0 = mass(f);
  const SplitStepper st(g, 2e-3);
  auto w = f;
  for (int i = 0; i < 1000; ++i) {
    st.strang_step(w);
    if (i == 0) CHECK(rel_diff(mass(w), m0) < 1e-12);
  }
  CHECK(rel_diff(mass(w), m0) < 1e-10);

  // dt then -dt
  auto back = strang_step(f, 1e-2);
  SplitStepper(g, -1e-2).strang_step(back);
  CHECK(max_abs_diff(back, f) / max_abs(f) < 1e-12);

  CHECK(error_code_of([&] { SplitStepper(g, std::nan("")); }) ==
        ErrorCode::invalid_parameter);
}

TEST_CASE("strang step converges at second order") {
  const auto g = make_grid(20.0, 1024);
  const auto f = gaussian(g, 4.0);
  const auto a = evolve(f, 0.01, 1.0), b = evolve(f, 0.005, 1.0), c = evolve(f, 0.0025, 1.0);
  const double ratio = lebesgue_norm(a - b, 2.0) / lebesgue_norm(b - c, 2.0);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);

  double d1 = 0.0, d2 = 0.0;
  evolve(f, 1e-3, 1.0, &d1);
  evolve(f, 5e-4, 1.0, &d2);
  CHECK(d1 <= 1e-5);
  CHECK(d1 / d2 >= 3.5);
  CHECK(d1 / d2 <= 4.5);
}

TEST_CASE("forced step") {
  const auto g = make_grid(pi, 64);
  const auto u = random_field(g, 4, 8);

  SUBCASE("zero forcing keeps v at zero") {
    RadialField v(g);
    for (int i = 0; i < 10; ++i) v = forced_strang_step(v, u, u, 1e-2);
    CHECK(max_abs(v) == 0.0);
  }

  SUBCASE("single mode against variation of constants") {
    // i v_t - (-Delta) v = F with F frozen: on mode k,
    // v(t) = e^{-i l t} v0 - F (1 - e^{-i l t}) / l.
    const int k = 3;
    const double l = 1.0 + k * k;
    const Complex v0(0.2, -0.1), F(0.7, 0.3);
    std::vector<Complex> forcing(g.size());
    const auto fm = sine_mode(g, k, F);
    std::copy(fm.values().begin(), fm.values().end(), forcing.begin());

    double prev = 0.0;
    for (double dt : {1e-2, 1e-3, 1e-4}) {
      auto v = sine_mode(g, k, v0);
      SplitStepper(g, dt).forced_step(v, forcing);
      const Complex exact = std::exp(Complex(0, -l * dt)) * v0 -
                            F * (1.0 - std::exp(Complex(0, -l * dt))) / l;
      const Complex numeric = transform(v)[k - 1] * (2.0 / g.intervals());
      const double dq = std::abs((numeric - v0) / dt - (exact - v0) / dt);
      if (prev > 0.0) CHECK(dq < prev / 50);  // difference quotients agree to O(dt^2)
      prev = dq;
      // other modes are untouched
      auto other = transform(v);
      other[k - 1] = 0.0;
      double rest = 0.0;
      for (std::size_t q = 0; q < other.size(); ++q) rest = std::max(rest, std::abs(other[q]));
      CHECK(rest < 1e-12);
    }
    CHECK(prev < 1e-6);
  }

  SUBCASE("free function builds the cubic forcing in the w representation") {
    const auto phi = random_field(g, 5, 8);
    RadialField v(g);
    const auto stepped = forced_strang_step(v, u, phi, 1e-3);
    std::vector<Complex> forcing(g.size());
    for (std::size_t j = 0; j < forcing.size(); ++j) {
      const double sh = std::sinh(g.node(j));
      const Complex uj = u[j] / sh, pj = phi[j] / sh;
      forcing[j] = (std::norm(uj) * uj - std::norm(pj) * pj) * sh;
    }
    auto ref = v;
    SplitStepper(g, 1e-3).forced_step(ref, forcing);
    CHECK(max_abs_diff(stepped, ref) <= 1e-13 * max_abs(ref));
  }

  SUBCASE("grid mismatch") {
    const auto other = random_field(make_grid(4.0, 64), 1);
    CHECK(error_code_of([&] { forced_strang_step(other, u, u, 1e-3); }) ==
          ErrorCode::invalid_argument);
  }
}

TEST_CASE("forced integrator agrees with the residual definition at second order") {
  const auto g = make_grid(20.0, 512);
  const auto u0 = gaussian(g, 2.0);
  const auto phi0 = project(u0, Projection::low, 0.5);
  const auto psi0 = u0 - phi0;

  auto run = [&](double dt) {
    const SplitStepper full(g, dt), half(g, dt / 2);
    auto u = u0, phi = phi0, psi = psi0;
    RadialField v(g);
    const auto n = std::llround(1.0 / dt);
    for (long long i = 0; i < n; ++i) {
      auto um = u, pm = phi;
      half.strang_step(um);
      half.strang_step(pm);
      v = forced_strang_step(v, um, pm, dt);
      full.strang_step(u);
      full.strang_step(phi);
      full.linear_step(psi);
    }
    return lebesgue_norm(v - (u - psi - phi), 2.0);
  };
  const double e1 = run(0.01), e2 = run(0.005);
  CHECK(e1 > 0.0);
  CHECK(e1 / e2 >= 3.0);
  CHECK(e1 / e2 <= 5.0);
}

TEST_CASE("co-evolution windows") {
  const auto g = make_grid(20.0, 512);
  StepperConfig cfg;
  cfg.dt = 1e-2;
  cfg.retain_every = 5;

  SUBCASE("identity horizon") {
    Decomposition d{gaussian(g, 1.0), RadialField(g), RadialField(g), gaussian(g, 1.0), 0.0};
    auto [out, hist] = evolve_window(d, 0.5, 0.5, cfg);
    CHECK(out.u == d.u);
    CHECK(out.psi == d.psi);
    CHECK(hist.empty());
    CHECK(error_code_of([&] { evolve_window(d, 0.5, 0.4, cfg); }) ==
          ErrorCode::invalid_parameter);
  }

  SUBCASE("tiny data stays linear") {
    const auto u0 = gen_data(0.95, 3, 1e-6, g);
    Decomposition d{u0, RadialField(g), RadialField(g), u0, 0.0};
    auto [out, hist] = evolve_window(d, 0.0, 1.0, cfg);
    CHECK(lebesgue_norm(out.v, 2.0) <= 1e-14);
  }

  SUBCASE("reconstruction at every sample") {
    const auto u0 = gen_data(0.95, 4, 5.0, g);
    const auto phi0 = project(u0, Projection::low, 1.0 / 64);
    Decomposition d{u0 - phi0, phi0, RadialField(g), u0, 0.0};
    auto [out, hist] = evolve_window(d, 0.0, 0.5, cfg);
    REQUIRE(hist.samples.size() == 51);
    REQUIRE(hist.snapshots.size() == 11);
    for (const auto& s : hist.snapshots) {
      const auto v = s.u - s.psi - s.phi;
      const auto rebuilt = s.psi + s.phi + v;
      CHECK(lebesgue_norm(s.u - rebuilt, 2.0) <= 1e-13 * lebesgue_norm(s.u, 2.0));
    }
    const auto csv = history_csv(hist);
    CHECK(csv.rfind("t,mass_u,energy_u,energy_phi,L4x_u,L4x_zeta,shell_mass\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 52);
  }
}
