#include "h3nls/calculus.hpp"

#include <algorithm>
#include <charconv>
#include <numbers>

namespace h3nls {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

void require_exponent(double p) {
  if (!(p >= 1.0))
    fail(ErrorCode::invalid_parameter, "Lebesgue exponent must be >= 1");
}

// |w|^p from |w|^2, avoiding pow() for the exponents used by the audits.
double abs_pow(double abs2, double p) {
  if (p == 2.0) return abs2;
  if (p == 3.0) return abs2 * std::sqrt(abs2);
  if (p == 4.0) return abs2 * abs2;
  if (p == 6.0) return abs2 * abs2 * abs2;
  if (p == 8.0) return (abs2 * abs2) * (abs2 * abs2);
  return std::pow(std::sqrt(abs2), p);
}

std::string format_number(double x) {
  if (std::isinf(x)) return "inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

double parse_number(std::string_view text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return kInfinity;
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    fail(ErrorCode::config, "bad number in norm spec: '" + std::string(text) + "'");
  return value;
}

}  // namespace

double projection_multiplier(Projection which, double s, double lambda) {
  switch (which) {
    case Projection::low: return std::exp(-s * lambda);
    case Projection::high: return -std::expm1(-s * lambda);
    case Projection::band: return s * lambda * std::exp(-s * lambda);
  }
  return 0.0;
}

RadialField fractional_derivative(const RadialField& f, double sigma) {
  if (sigma == 0.0) return f;
  const double half = 0.5 * sigma;
  return inverse_transform(
      apply_multiplier(transform(f), [half](double lambda) { return std::pow(lambda, half); }));
}

RadialField project(const RadialField& f, Projection which, double s) {
  if (!(s >= 0.0) || !std::isfinite(s))
    fail(ErrorCode::invalid_parameter, "heat time s must be nonnegative");
  if (which == Projection::band && s == 0.0)
    fail(ErrorCode::invalid_parameter, "band projection needs s > 0");
  if (s == 0.0) return which == Projection::low ? f : RadialField(f.grid());
  // high is formed as f - low so that low + high reproduces f exactly.
  auto low = inverse_transform(apply_multiplier(
      transform(f), [s](double lambda) { return std::exp(-s * lambda); }));
  switch (which) {
    case Projection::low: return low;
    case Projection::high: return f - low;
    case Projection::band:
      return inverse_transform(apply_multiplier(transform(f), [s](double lambda) {
        return s * lambda * std::exp(-s * lambda);
      }));
  }
  return low;
}

LebesgueNorm::LebesgueNorm(const RadialGrid& grid, double p) : p_(p) {
  require_exponent(p);
  if (std::isinf(p))
    fail(ErrorCode::invalid_parameter, "LebesgueNorm needs a finite exponent");
  const auto sh = grid.sinh_nodes();
  const double base = kFourPi * grid.spacing();
  weight_.resize(sh.size());
  for (std::size_t j = 0; j < sh.size(); ++j)
    weight_[j] = p == 2.0 ? base : base * std::pow(sh[j], 2.0 - p);
}

double LebesgueNorm::integral(std::span<const Complex> w) const {
  double sum = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j)
    sum += weight_[j] * abs_pow(std::norm(w[j]), p_);
  return sum;
}

double LebesgueNorm::operator()(std::span<const Complex> w) const {
  const double I = integral(w);
  return p_ == 2.0 ? std::sqrt(I) : std::pow(I, 1.0 / p_);
}

double lebesgue_norm(std::span<const Complex> w, const RadialGrid& grid, double p) {
  require_exponent(p);
  if (w.size() != grid.size())
    fail(ErrorCode::invalid_argument, "lebesgue_norm size mismatch");
  if (std::isinf(p)) {
    const auto sh = grid.sinh_nodes();
    double m = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) m = std::max(m, std::abs(w[j]) / sh[j]);
    return m;
  }
  return LebesgueNorm(grid, p)(w);
}

double lebesgue_norm(const RadialField& f, double p) {
  return lebesgue_norm(f.values(), f.grid(), p);
}

double sobolev_norm(const SpectralField& F, double sigma) {
  const auto lambda = F.grid().eigenvalues();
  const auto c = F.coefficients();
  double sum = 0.0;
  if (sigma == 0.0) {
    for (const auto z : c) sum += std::norm(z);
  } else if (sigma == 1.0) {
    for (std::size_t i = 0; i < c.size(); ++i) sum += lambda[i] * std::norm(c[i]);
  } else {
    for (std::size_t i = 0; i < c.size(); ++i)
      sum += std::pow(lambda[i], sigma) * std::norm(c[i]);
  }
  const auto& g = F.grid();
  return std::sqrt(kFourPi * g.spacing() * (2.0 / g.intervals()) * sum);
}

double sobolev_norm(const RadialField& f, double sigma) {
  return sobolev_norm(transform(f), sigma);
}

double weighted_sup(const RadialField& f) {
  double m = 0.0;
  for (const auto z : f.values()) m = std::max(m, std::abs(z));
  return m;
}

double weighted_norm(const RadialField& f, double a, double p) {
  require_exponent(p);
  if (a == 0.0) return lebesgue_norm(f, p);
  const auto r = f.grid().nodes();
  std::vector<Complex> weighted(f.values().begin(), f.values().end());
  for (std::size_t j = 0; j < weighted.size(); ++j)
    weighted[j] *= std::pow(1.0 + r[j] * r[j], 0.5 * a);
  return lebesgue_norm(weighted, f.grid(), p);
}

double mass(const RadialField& f) {
  const double n = lebesgue_norm(f, 2.0);
  return n * n;
}

double energy(const RadialField& f) {
  const double kinetic = sobolev_norm(f, 1.0);
  return 0.5 * kinetic * kinetic + 0.25 * LebesgueNorm(f.grid(), 4.0).integral(f.values());
}

std::vector<Complex> radial_gradient(const RadialField& f) {
  const auto& g = f.grid();
  auto c = transform(f);
  const double scale = 2.0 / g.intervals();
  const double dk = std::numbers::pi / g.radius();
  auto coeffs = c.coefficients();
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    coeffs[i] *= scale * dk * static_cast<double>(i + 1);
  std::vector<Complex> dw(g.size());
  g.cosine_sum(coeffs, dw);
  // u = w / sinh r  =>  u' = (w' - coth(r) w) / sinh r.
  const auto r = g.nodes();
  const auto sh = g.sinh_nodes();
  std::vector<Complex> du(g.size());
  for (std::size_t j = 0; j < du.size(); ++j) {
    const double coth = 1.0 / std::tanh(r[j]);
    du[j] = (dw[j] - coth * f[j]) / sh[j];
  }
  return du;
}

double volume_integral(const RadialGrid& grid, std::span<const double> density) {
  if (density.size() != grid.size())
    fail(ErrorCode::invalid_argument, "volume_integral size mismatch");
  const auto sh = grid.sinh_nodes();
  double sum = 0.0;
  for (std::size_t j = 0; j < density.size(); ++j) sum += density[j] * sh[j] * sh[j];
  return kFourPi * grid.spacing() * sum;
}

NormSpec NormSpec::parse(std::string_view text) {
  NormSpec spec;
  if (text == "WsupSinh") {
    spec.kind = Kind::weighted_sup;
    return spec;
  }
  if (text.size() >= 2 && text.front() == 'L') {
    spec.kind = Kind::lebesgue;
    spec.p = parse_number(text.substr(1));
    require_exponent(spec.p);
    return spec;
  }
  if (text.size() >= 2 && text.front() == 'H') {
    spec.kind = Kind::sobolev;
    spec.sigma = parse_number(text.substr(1));
    return spec;
  }
  if (text.size() >= 6 && text.substr(0, 2) == "W(" && text.back() == ')') {
    const auto inner = text.substr(2, text.size() - 3);
    const auto comma = inner.find(',');
    if (comma == std::string_view::npos)
      fail(ErrorCode::config, "weighted norm spec needs W(a,p)");
    spec.kind = Kind::weighted;
    spec.a = parse_number(inner.substr(0, comma));
    spec.p = parse_number(inner.substr(comma + 1));
    require_exponent(spec.p);
    return spec;
  }
  fail(ErrorCode::config, "unknown norm spec '" + std::string(text) + "'");
}

std::string NormSpec::to_string() const {
  switch (kind) {
    case Kind::lebesgue: return "L" + format_number(p);
    case Kind::sobolev: return "H" + format_number(sigma);
    case Kind::weighted_sup: return "WsupSinh";
    case Kind::weighted: return "W(" + format_number(a) + "," + format_number(p) + ")";
  }
  return {};
}

double evaluate(const RadialField& f, const NormSpec& spec) {
  switch (spec.kind) {
    case NormSpec::Kind::lebesgue: return lebesgue_norm(f, spec.p);
    case NormSpec::Kind::sobolev: return sobolev_norm(f, spec.sigma);
    case NormSpec::Kind::weighted_sup: return weighted_sup(f);
    case NormSpec::Kind::weighted: return weighted_norm(f, spec.a, spec.p);
  }
  return 0.0;
}

}  // namespace h3nls
