#include "h3nls/strichartz.hpp"

#include <algorithm>
#include <cmath>

namespace h3nls {

PairSet default_pairs() {
  return {{kInfinity, 2.0}, {2.0, 6.0}, {4.0, 3.0}, {8.0, 4.0}, {4.0, 4.0}};
}

bool is_admissible(const SpaceTimePair& pair) noexcept {
  if (!(pair.p >= 2.0 && pair.q >= 2.0)) return false;
  const double lhs = (std::isinf(pair.p) ? 0.0 : 2.0 / pair.p) +
                     (std::isinf(pair.q) ? 0.0 : 3.0 / pair.q);
  return std::abs(lhs - 1.5) < 1e-12;
}

const char* to_string(FieldSelector f) noexcept {
  switch (f) {
    case FieldSelector::u: return "u";
    case FieldSelector::psi: return "psi";
    case FieldSelector::phi: return "phi";
    case FieldSelector::v: return "v";
    case FieldSelector::zeta: return "zeta";
  }
  return "?";
}

FieldSelector parse_field_selector(const std::string& name) {
  if (name == "u") return FieldSelector::u;
  if (name == "psi") return FieldSelector::psi;
  if (name == "phi") return FieldSelector::phi;
  if (name == "v") return FieldSelector::v;
  if (name == "zeta") return FieldSelector::zeta;
  fail(ErrorCode::invalid_argument, "unknown field selector '" + name + "'");
}

RadialField select_field(const Decomposition& state, FieldSelector which) {
  switch (which) {
    case FieldSelector::u: return state.u;
    case FieldSelector::psi: return state.psi;
    case FieldSelector::phi: return state.phi;
    case FieldSelector::v: return state.v;
    case FieldSelector::zeta: return state.zeta();
  }
  return state.u;
}

double time_norm(std::span<const double> t, std::span<const double> x, double p) {
  if (t.size() != x.size() || t.empty())
    fail(ErrorCode::invalid_argument, "time_norm needs matching nonempty samples");
  if (std::isinf(p)) return *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i)
    sum += 0.5 * (t[i] - t[i - 1]) * (std::pow(x[i - 1], p) + std::pow(x[i], p));
  return std::pow(sum, 1.0 / p);
}

StrichartzAccumulator::StrichartzAccumulator(const RadialGrid& grid, FieldSelector field,
                                             double sigma, PairSet pairs)
    : field_(field), sigma_(sigma), pairs_(std::move(pairs)) {
  for (const auto& pr : pairs_) {
    if (!(pr.q >= 1.0) || std::isinf(pr.q))
      fail(ErrorCode::invalid_parameter, "space exponent must be finite and >= 1");
    norms_.emplace_back(grid, pr.q);
  }
  prev_.assign(pairs_.size(), 0.0);
  sums_.assign(pairs_.size(), 0.0);
}

std::vector<double> StrichartzAccumulator::spatial_norms(const Decomposition& state) const {
  auto f = select_field(state, field_);
  if (sigma_ != 0.0) f = fractional_derivative(f, sigma_);
  std::vector<double> x(pairs_.size());
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const double norm = norms_[i](f.values());
    x[i] = std::isinf(pairs_[i].p) ? norm : std::pow(norm, pairs_[i].p);
  }
  return x;
}

void StrichartzAccumulator::reset(const Decomposition& start) {
  prev_ = spatial_norms(start);
  prev_t_ = start.t;
  started_ = true;
  for (std::size_t i = 0; i < pairs_.size(); ++i)
    sums_[i] = std::isinf(pairs_[i].p) ? prev_[i] : 0.0;
}

void StrichartzAccumulator::observe(const Decomposition& state) {
  if (!started_) {
    reset(state);
    return;
  }
  const auto x = spatial_norms(state);
  const double dt = state.t - prev_t_;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (std::isinf(pairs_[i].p))
      sums_[i] = std::max(sums_[i], x[i]);
    else
      sums_[i] += 0.5 * dt * (prev_[i] + x[i]);
  }
  prev_ = x;
  prev_t_ = state.t;
}

StrichartzTable StrichartzAccumulator::table() const {
  StrichartzTable table;
  table.field = field_;
  table.sigma = sigma_;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& pr = pairs_[i];
    const double value = std::isinf(pr.p) ? sums_[i] : std::pow(sums_[i], 1.0 / pr.p);
    const bool adm = is_admissible(pr);
    table.rows.push_back({pr, value, adm});
    if (adm) table.surrogate = std::max(table.surrogate, value);
  }
  return table;
}

std::vector<double> StrichartzAccumulator::state() const {
  std::vector<double> s;
  s.push_back(started_ ? 1.0 : 0.0);
  s.push_back(prev_t_);
  s.insert(s.end(), prev_.begin(), prev_.end());
  s.insert(s.end(), sums_.begin(), sums_.end());
  return s;
}

void StrichartzAccumulator::restore(std::span<const double> s) {
  if (s.size() != 2 + 2 * pairs_.size())
    fail(ErrorCode::corrupt, "strichartz accumulator state has wrong size");
  started_ = s[0] != 0.0;
  prev_t_ = s[1];
  std::copy(s.begin() + 2, s.begin() + 2 + pairs_.size(), prev_.begin());
  std::copy(s.begin() + 2 + pairs_.size(), s.end(), sums_.begin());
}

}  // namespace h3nls
