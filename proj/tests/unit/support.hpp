#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "h3nls/calculus.hpp"
#include "h3nls/radial_core.hpp"

namespace h3nls::testing {

// Gaussian coefficients on modes 1..kmax (all modes when kmax == 0), with a
// mild decay so norms stay moderate; synthesized through the inverse DST.
inline RadialField random_field(const RadialGrid& g, std::uint64_t seed, std::size_t kmax = 0,
                                double decay = 0.5) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::vector<Complex> c(g.size());
  const std::size_t top = kmax == 0 ? c.size() : std::min(kmax, c.size());
  for (std::size_t k = 0; k < top; ++k)
    c[k] = Complex(normal(gen), normal(gen)) * std::pow(double(k + 1), -decay);
  return inverse_transform(SpectralField(g, std::move(c)));
}

// Same band-limited function sampled on a grid `factor` times finer.
inline RadialField refine(const RadialField& f, int factor) {
  const auto fine = make_grid(f.grid().radius(), f.grid().intervals() * factor);
  const auto coarse = transform(f);
  std::vector<Complex> c(fine.size());
  for (std::size_t k = 0; k < coarse.size(); ++k) c[k] = coarse[k] * double(factor);
  return inverse_transform(SpectralField(fine, std::move(c)));
}

inline double max_abs_diff(const RadialField& a, const RadialField& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

inline double max_abs(const RadialField& a) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j]));
  return m;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

template <class F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL_CHECK("expected an h3nls::Error");
  return ErrorCode::numeric_fatal;
}

}  // namespace h3nls::testing
