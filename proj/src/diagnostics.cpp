#include "h3nls/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "h3nls/data_gen.hpp"

namespace h3nls {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

void require_snapshots(const EvolutionHistory& history, std::size_t minimum, const char* what) {
  if (history.snapshots.empty())
    fail(ErrorCode::unsupported_retention,
         std::string(what) + " needs retained full fields (retain_every > 0)");
  if (history.snapshots.size() < minimum)
    fail(ErrorCode::invalid_argument, std::string(what) + " needs at least " +
                                          std::to_string(minimum) + " retained snapshots");
}

// Trapezoid weights for the sample times t.
std::vector<double> trapezoid_weights(std::span<const double> t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double half = 0.5 * (t[i] - t[i - 1]);
    w[i - 1] += half;
    w[i] += half;
  }
  return w;
}

double dot_norm2(std::span<const Complex> x) {
  double s = 0.0;
  for (const auto z : x) s += std::norm(z);
  return s;
}

}  // namespace

AuditVerdict make_verdict(std::string name, double lhs, double rhs, double threshold,
                          std::string provenance) {
  AuditVerdict v;
  v.name = std::move(name);
  v.lhs = lhs;
  v.rhs = rhs;
  if (rhs > 0.0)
    v.ratio = lhs / rhs;
  else
    v.ratio = lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  v.threshold = threshold;
  v.pass = v.ratio <= threshold;
  v.provenance = std::move(provenance);
  return v;
}

nlohmann::json verdict_to_json(const AuditVerdict& v) {
  auto finite_or_string = [](double x) -> nlohmann::json {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    return x;
  };
  return {{"name", v.name},
          {"lhs", finite_or_string(v.lhs)},
          {"rhs", finite_or_string(v.rhs)},
          {"ratio", finite_or_string(v.ratio)},
          {"threshold", finite_or_string(v.threshold)},
          {"pass", v.pass},
          {"provenance", v.provenance}};
}

Decomposition snapshot_state(const Snapshot& snap) {
  auto v = snap.u - snap.psi - snap.phi;
  return {snap.psi, snap.phi, std::move(v), snap.u, snap.t};
}

StrichartzTable strichartz_report(const EvolutionHistory& history, FieldSelector field,
                                  double sigma, const PairSet& pairs) {
  if (history.snapshots.empty() && history.samples.empty())
    fail(ErrorCode::invalid_argument, "strichartz_report needs a nonempty history");
  require_snapshots(history, 2, "strichartz_report");
  const auto& snaps = history.snapshots;
  StrichartzAccumulator acc(snaps.front().u.grid(), field, sigma, pairs);
  acc.reset(snapshot_state(snaps.front()));
  for (std::size_t i = 1; i < snaps.size(); ++i) acc.observe(snapshot_state(snaps[i]));
  return acc.table();
}

MorawetzReport morawetz_audit(const EvolutionHistory& history, double c_cal) {
  require_snapshots(history, 2, "morawetz_audit");
  const auto& snaps = history.snapshots;
  const auto& grid = snaps.front().u.grid();
  const LebesgueNorm l4(grid, 4.0);
  const std::size_t n = grid.size();

  std::vector<double> t, zeta4, psi4, nz, ngz;
  MorawetzReport rep;
  std::vector<double> d1(n), d2(n);
  for (const auto& snap : snaps) {
    const auto zeta = snap.u - snap.psi;
    const auto u = to_physical(snap.u);
    const auto z = to_physical(zeta);
    const auto gz = radial_gradient(zeta);
    for (std::size_t j = 0; j < n; ++j) {
      const Complex nl = std::norm(u[j]) * u[j] - std::norm(z[j]) * z[j];
      const double an = std::abs(nl);
      rep.n_sup = std::max(rep.n_sup, an);
      d1[j] = an * std::abs(z[j]);
      d2[j] = an * std::abs(gz[j]);
    }
    t.push_back(snap.t);
    zeta4.push_back(l4.integral(zeta.values()));
    psi4.push_back(l4.integral(snap.psi.values()));
    nz.push_back(volume_integral(grid, d1));
    ngz.push_back(volume_integral(grid, d2));
    rep.zeta_sup_l2 = std::max(rep.zeta_sup_l2, lebesgue_norm(zeta, 2.0));
    rep.zeta_sup_h1 = std::max(rep.zeta_sup_h1, sobolev_norm(zeta, 1.0));
  }
  rep.zeta_l4_4 = time_norm(t, zeta4, 1.0);
  rep.psi_l4_4 = time_norm(t, psi4, 1.0);
  rep.n_zeta = time_norm(t, nz, 1.0);
  rep.n_grad_zeta = time_norm(t, ngz, 1.0);
  const double rhs = rep.zeta_sup_l2 * rep.zeta_sup_h1 + rep.n_zeta + rep.n_grad_zeta;
  rep.verdict = make_verdict("morawetz", rep.zeta_l4_4, rhs, c_cal, "calibrated");
  return rep;
}

namespace {

// Applies the smoothing Gram operator: d -> (2/N) sum_t omega_t
// E_t^* L S W S L E_t d with L = lambda^{1/4}, E_t = e^{-i lambda t},
// S the sine sum and W the squared spatial weight.
class SmoothingForm {
 public:
  SmoothingForm(const RadialGrid& grid, const SmoothingOptions& opts) : grid_(grid) {
    if (!(opts.T > 0.0) || !std::isfinite(opts.T))
      fail(ErrorCode::invalid_parameter, "smoothing horizon must be positive");
    if (!(opts.delta > 0.0))
      fail(ErrorCode::invalid_parameter, "smoothing delta must be positive");
    if (opts.time_samples < 2)
      fail(ErrorCode::invalid_parameter, "smoothing needs at least two time samples");
    const auto lambda = grid.eigenvalues();
    const auto r = grid.nodes();
    quarter_.resize(lambda.size());
    for (std::size_t k = 0; k < lambda.size(); ++k) quarter_[k] = std::pow(lambda[k], 0.25);
    weight_.resize(r.size());
    for (std::size_t j = 0; j < r.size(); ++j)
      weight_[j] = std::pow(1.0 + r[j] * r[j], -0.5 - opts.delta);
    for (int i = 0; i < opts.time_samples; ++i)
      times_.push_back(opts.T * i / (opts.time_samples - 1));
    omega_ = trapezoid_weights(times_);
  }

  // Returns sum_t omega_t ||W^{1/2} S L E_t d||^2 and, when out is given,
  // the Gram operator applied to d.
  double apply(std::span<const Complex> d, std::vector<Complex>* out) const {
    const auto lambda = grid_.eigenvalues();
    std::vector<Complex> x(d.size());
    if (out) out->assign(d.size(), Complex{});
    double total = 0.0;
    for (std::size_t i = 0; i < times_.size(); ++i) {
      const double t = times_[i];
      for (std::size_t k = 0; k < d.size(); ++k)
        x[k] = d[k] * quarter_[k] * std::polar(1.0, -lambda[k] * t);
      grid_.sine_sum(x);
      double s = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        s += weight_[j] * std::norm(x[j]);
        x[j] *= weight_[j];
      }
      total += omega_[i] * s;
      if (out) {
        grid_.sine_sum(x);
        for (std::size_t k = 0; k < d.size(); ++k)
          (*out)[k] += omega_[i] * quarter_[k] * std::polar(1.0, lambda[k] * t) * x[k];
      }
    }
    return total;
  }

  // (ratio)^2 = (2/N) * apply(d) / ||d||^2 for d = lambda^{1/4} c.
  double scale() const { return 2.0 / grid_.intervals(); }

 private:
  RadialGrid grid_;
  std::vector<double> quarter_;
  std::vector<double> weight_;
  std::vector<double> times_;
  std::vector<double> omega_;
};

}  // namespace

AuditVerdict smoothing_audit(const RadialField& f, const SmoothingOptions& opts,
                             double c_cal) {
  const auto& grid = f.grid();
  const SmoothingForm form(grid, opts);
  // lhs^2 = 4 pi h (2/N)^2 sum_t omega_t ||W^{1/2} S L E_t (L c)||^2,
  // rhs^2 = 4 pi h (2/N) ||L c||^2.
  auto c = transform(f);
  const auto lambda = grid.eigenvalues();
  std::vector<Complex> d(c.coefficients().begin(), c.coefficients().end());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] *= std::pow(lambda[k], 0.25);
  const double base = kFourPi * grid.spacing();
  const double lhs = std::sqrt(base * form.scale() * form.scale() * form.apply(d, nullptr));
  const double rhs = sobolev_norm(c, 0.5);
  return make_verdict("smoothing", lhs, rhs, c_cal, "calibrated");
}

double smoothing_constant(const RadialGrid& grid, const SmoothingOptions& opts,
                          int max_iterations, double rel_tol) {
  const SmoothingForm form(grid, opts);
  // Deterministic generic start vector.
  PhaseEngine engine(12345);
  std::vector<Complex> d(grid.size());
  for (auto& z : d) z = std::polar(1.0, 2.0 * std::numbers::pi * next_unit(engine));
  std::vector<Complex> next;
  double estimate = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    const double nd = std::sqrt(dot_norm2(d));
    for (auto& z : d) z /= nd;
    const double rq = form.apply(d, &next);
    const bool converged = it > 0 && std::abs(rq - estimate) <= rel_tol * rq;
    estimate = rq;
    if (converged) break;
    d.swap(next);
  }
  return std::sqrt(form.scale() * estimate);
}

std::vector<BernsteinRow> bernstein_audit(const RadialGrid& grid,
                                          const std::vector<double>& s_list) {
  const auto lambda = grid.eigenvalues();
  const double bound1 = 1.0 / std::sqrt(2.0 * std::numbers::e);
  std::vector<BernsteinRow> rows;
  for (const double s : s_list) {
    if (!(s > 0.0) || !std::isfinite(s))
      fail(ErrorCode::invalid_parameter, "Bernstein heat times must be positive");
    BernsteinRow row;
    row.s = s;
    for (const double l : lambda) {
      row.n1 = std::max(row.n1, std::sqrt(l) * std::exp(-s * l));
      row.n2 = std::max(row.n2, -std::expm1(-s * l) / std::sqrt(l));
      row.band = std::max(row.band, s * l * std::exp(-s * l));
    }
    row.n1_applies = s <= 1.0 / (2.0 * grid.min_eigenvalue());
    const double rs = std::sqrt(s);
    if (row.n1_applies)
      row.verdicts.push_back(
          make_verdict("bernstein_gradient_low", rs * row.n1, 1.0, bound1 + 1e-10, "analytic"));
    row.verdicts.push_back(
        make_verdict("bernstein_high", row.n2 / rs, 1.0, 1.0 + 1e-10, "analytic"));
    row.verdicts.push_back(make_verdict("band_projection", row.band, 1.0,
                                        1.0 / std::numbers::e + 1e-12, "analytic"));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

void require_alpha(double alpha) {
  if (!(alpha >= 0.26 && alpha <= 1.0))
    fail(ErrorCode::invalid_parameter, "radial Sobolev exponent must lie in [0.26, 1]");
}

}  // namespace

double radial_sobolev_ratio(const RadialField& f, double alpha) {
  require_alpha(alpha);
  const double top = weighted_sup(f);
  if (top == 0.0) return 0.0;
  const double theta = 1.0 / (4.0 * alpha);
  const auto c = transform(f);
  const double a = sobolev_norm(c, 0.0);
  const double b = sobolev_norm(c, 2.0 * alpha);
  return top / (std::pow(a, 1.0 - theta) * std::pow(b, theta));
}

double radial_sobolev_constant(const RadialGrid& grid, double alpha) {
  require_alpha(alpha);
  // For fixed mu, ||f||^{2(1-theta)} ||(-Delta)^a f||^{2 theta} is the minimum
  // over mu of sum m_k(mu) |c_k|^2 (times the quadrature constant), with
  // m_k = (1-theta) mu^theta + theta mu^{theta-1} lambda_k^{2a}. Cauchy-Schwarz
  // then gives sup |w_j|^2 / Q_mu = (2/N)^2 sum_k sin^2(pi j k/N) / m_k / c,
  // so the supremum is a maximum over j and mu of that sum.
  const double theta = 1.0 / (4.0 * alpha);
  const auto lambda = grid.eigenvalues();
  const int N = grid.intervals();
  const std::size_t n = grid.size();
  std::vector<double> l2a(n);
  for (std::size_t k = 0; k < n; ++k) l2a[k] = std::pow(lambda[k], 2.0 * alpha);
  const double c = kFourPi * grid.spacing() * (2.0 / N);
  const double pref = (2.0 / N) * (2.0 / N) / c;

  std::vector<Complex> folded(n), cos_sum(n);
  auto objective = [&](double log_mu) {
    const double mu = std::exp(log_mu);
    const double a = (1.0 - theta) * std::pow(mu, theta);
    const double b = theta * std::pow(mu, theta - 1.0);
    // sin^2 = (1 - cos(2 pi j k / N)) / 2; fold the doubled index into
    // cosine_sum's range, handling the k = N/2 term separately.
    std::fill(folded.begin(), folded.end(), Complex{});
    double total = 0.0;
    double middle = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int k = static_cast<int>(i) + 1;
      const double g = 1.0 / (a + b * l2a[i]);
      total += g;
      int m = 2 * k;
      if (m > N) m = 2 * N - m;
      if (m == N)
        middle += g;
      else
        folded[static_cast<std::size_t>(m - 1)] += g;
    }
    grid.cosine_sum(folded, cos_sum);
    double best = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double sign = ((j + 1) % 2 == 0) ? 1.0 : -1.0;
      const double s2 = 0.5 * (total - cos_sum[j].real() - sign * middle);
      best = std::max(best, s2);
    }
    return pref * best;
  };

  const double lo = std::log(l2a.front());
  const double hi = std::log(l2a.back());
  const int scan = 400;
  int best_i = 0;
  double best = -1.0;
  for (int i = 0; i <= scan; ++i) {
    const double v = objective(lo + (hi - lo) * i / scan);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  double a = lo + (hi - lo) * std::max(best_i - 1, 0) / scan;
  double b = lo + (hi - lo) * std::min(best_i + 1, scan) / scan;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = objective(x2);
    }
  }
  best = std::max({best, f1, f2});
  return std::sqrt(best);
}

std::vector<RadialSobolevRow> radial_sobolev_audit(const RadialGrid& grid, int samples,
                                                   const std::vector<double>& alphas,
                                                   std::uint64_t seed,
                                                   const std::map<double, double>& c_cal) {
  for (const double a : alphas) require_alpha(a);
  if (samples < 1) fail(ErrorCode::invalid_parameter, "battery needs at least one field");
  std::vector<RadialField> battery;
  battery.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i)
    battery.push_back(gen_data(0.6, seed + static_cast<std::uint64_t>(i), 1.0, grid));
  const auto mode = sine_mode(grid, 1);

  std::vector<RadialSobolevRow> rows;
  for (const double alpha : alphas) {
    RadialSobolevRow row;
    row.alpha = alpha;
    for (const auto& f : battery) {
      const double r = radial_sobolev_ratio(f, alpha);
      const double r17 = radial_sobolev_ratio(17.0 * f, alpha);
      row.max_ratio = std::max(row.max_ratio, r);
      row.scale_defect = std::max(row.scale_defect, std::abs(r17 - r) / r);
    }
    row.single_mode_ratio = radial_sobolev_ratio(mode, alpha);
    const auto it = c_cal.find(alpha);
    if (it == c_cal.end())
      fail(ErrorCode::config, "no radial Sobolev calibration for alpha = " +
                                  std::to_string(alpha));
    row.verdict = make_verdict("radial_sobolev", row.max_ratio, 1.0, it->second, "calibrated");
    rows.push_back(std::move(row));
  }
  return rows;
}

ScatteringReport scattering_diagnostic(const EvolutionHistory& history, double sigma,
                                       double threshold) {
  require_snapshots(history, 4, "scattering_diagnostic");
  const auto& snaps = history.snapshots;
  const auto& grid = snaps.front().u.grid();
  const double t0 = snaps.front().t;
  const double t1 = snaps.back().t;
  const double mid = t0 + 0.5 * (t1 - t0);
  const double late = t0 + 0.75 * (t1 - t0);

  ScatteringReport rep;
  rep.sigma = sigma;
  const auto lambda = grid.eigenvalues();
  std::vector<double> mult(lambda.size());
  for (std::size_t k = 0; k < lambda.size(); ++k) mult[k] = std::pow(lambda[k], 0.5 * sigma);

  // Pull-backs in weighted spectral form: a_k = lambda^{sigma/2} e^{i lambda t} c_k(t).
  std::vector<std::vector<Complex>> pulled;
  for (const auto& snap : snaps) {
    if (snap.t < mid) continue;
    auto c = transform(snap.u);
    std::vector<Complex> a(c.coefficients().begin(), c.coefficients().end());
    for (std::size_t k = 0; k < a.size(); ++k)
      a[k] *= mult[k] * std::polar(1.0, lambda[k] * snap.t);
    pulled.push_back(std::move(a));
    rep.times.push_back(snap.t);
  }
  const double norm = kFourPi * grid.spacing() * (2.0 / grid.intervals());
  const std::size_t n = pulled.size();
  rep.decrements.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < pulled[i].size(); ++k) s += std::norm(pulled[i][k] - pulled[j][k]);
      running = std::max(running, std::sqrt(norm * s));
    }
    rep.decrements[i] = running;
  }
  for (std::size_t i = 1; i < n; ++i)
    if (rep.decrements[i] > rep.decrements[i - 1]) rep.monotone = false;
  rep.d_initial = n ? rep.decrements.front() : 0.0;
  rep.d_final = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (rep.times[i] >= late) {
      rep.d_final = rep.decrements[i];
      break;
    }
  rep.verdict = make_verdict("scattering", rep.d_final, rep.d_initial, threshold, "calibrated");
  rep.ratio = rep.verdict.ratio;
  rep.verdict.pass = rep.verdict.pass && rep.monotone;
  return rep;
}

ConservationReport conservation_audit(const EvolutionHistory& history, double mass_tol,
                                      double energy_tol) {
  if (history.samples.size() < 2)
    fail(ErrorCode::invalid_argument, "conservation_audit needs at least two samples");
  const auto& s = history.samples;
  const double m0 = s.front().mass_u;
  const double e0 = s.front().energy_u;
  double dm = 0.0, de = 0.0;
  for (const auto& x : s) {
    dm = std::max(dm, std::abs(x.mass_u - m0));
    de = std::max(de, std::abs(x.energy_u - e0));
  }
  const double mass_drift = m0 != 0.0 ? dm / std::abs(m0) : 0.0;
  const double energy_drift = e0 != 0.0 ? de / std::abs(e0) : 0.0;
  return {make_verdict("mass_drift", mass_drift, 1.0, mass_tol, "analytic"),
          make_verdict("energy_drift", energy_drift, 1.0, energy_tol, "analytic")};
}

PowerFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2)
    fail(ErrorCode::invalid_argument, "power-law fit needs at least two points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y))
      fail(ErrorCode::invalid_argument, "power-law fit needs positive finite points");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  if (sxx == 0.0) fail(ErrorCode::invalid_argument, "power-law fit needs distinct abscissae");
  PowerFit fit;
  fit.points = points.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (const auto& [x, y] : points)
    fit.max_residual = std::max(
        fit.max_residual, std::abs(std::log(y) - (fit.intercept + fit.slope * std::log(x))));
  return fit;
}

double Calibration::get(const std::string& name) const {
  const auto it = constants.find(name);
  if (it == constants.end()) fail(ErrorCode::config, "calibration lacks '" + name + "'");
  return it->second;
}

nlohmann::json Calibration::to_json() const {
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [k, v] : constants) c[k] = v;
  return {{"grid", {{"R", R}, {"N", N}}}, {"seed", seed}, {"constants", std::move(c)}};
}

Calibration Calibration::from_json(const nlohmann::json& j) {
  try {
    Calibration cal;
    cal.R = j.at("grid").at("R").get<double>();
    cal.N = j.at("grid").at("N").get<int>();
    cal.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("constants").items()) cal.constants[k] = v.get<double>();
    return cal;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("malformed calibration: ") + e.what());
  }
}

Calibration Calibration::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read calibration file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, "calibration file " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void Calibration::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write calibration file " + path);
  out << to_json().dump(2) << '\n';
}

}  // namespace h3nls
