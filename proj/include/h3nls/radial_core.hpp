#pragma once

// Radial grid and the sinh-conjugated field representation.
//
// A radial function u on H^3 is stored as w = sinh(r) u sampled at the
// interior nodes r_j = j h, j = 1..N-1, of [0, R] with w(0) = w(R) = 0.
// In this representation the radial Laplacian acts as d^2/dr^2 - 1, so the
// Dirichlet sine modes sin(pi k r / R) are eigenfunctions of -Laplacian with
// eigenvalue 1 + (pi k / R)^2.

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "h3nls/errors.hpp"
#include "json.hpp"

namespace h3nls {

using Complex = std::complex<double>;

namespace detail {
struct GridData;
}

class RadialGrid {
 public:
  RadialGrid(double radius, int intervals);

  double radius() const noexcept;
  int intervals() const noexcept;
  /// Number of stored interior nodes, N - 1.
  std::size_t size() const noexcept;
  double spacing() const noexcept;

  /// Node r_{j+1} for storage index j in [0, size()).
  double node(std::size_t j) const;
  std::span<const double> nodes() const noexcept;
  std::span<const double> sinh_nodes() const noexcept;
  /// 1 / sinh^2(r_j); converts |w|^2 into |u|^2.
  std::span<const double> inv_sinh_squared() const noexcept;
  /// lambda_k = 1 + (pi k / R)^2 for k = 1..N-1, stored at index k-1.
  std::span<const double> eigenvalues() const noexcept;
  double min_eigenvalue() const noexcept;
  double max_eigenvalue() const noexcept;

  /// Unnormalized DST-I in place: out_k = sum_j in_j sin(pi j k / N).
  void sine_sum(std::span<Complex> values) const;
  /// out_j = sum_k c_k cos(pi j k / N) at interior nodes j = 1..N-1.
  void cosine_sum(std::span<const Complex> coeffs, std::span<Complex> out) const;

  friend bool operator==(const RadialGrid& a, const RadialGrid& b) noexcept {
    return a.radius() == b.radius() && a.intervals() == b.intervals();
  }

 private:
  std::shared_ptr<const detail::GridData> data_;
};

RadialGrid make_grid(double radius, int intervals);

/// Field in the conjugated representation w = sinh(r) u.
class RadialField {
 public:
  explicit RadialField(RadialGrid grid);
  RadialField(RadialGrid grid, std::vector<Complex> w);

  const RadialGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return w_.size(); }
  std::span<const Complex> values() const noexcept { return w_; }
  std::span<Complex> values() noexcept { return w_; }
  Complex operator[](std::size_t j) const { return w_[j]; }
  Complex& operator[](std::size_t j) { return w_[j]; }

  bool all_finite() const noexcept;

  RadialField& operator+=(const RadialField& other);
  RadialField& operator-=(const RadialField& other);
  RadialField& operator*=(Complex c) noexcept;

  friend bool operator==(const RadialField& a, const RadialField& b) {
    return a.grid_ == b.grid_ && a.w_ == b.w_;
  }

 private:
  RadialGrid grid_;
  std::vector<Complex> w_;
};

RadialField operator+(RadialField a, const RadialField& b);
RadialField operator-(RadialField a, const RadialField& b);
RadialField operator*(Complex c, RadialField a);

/// Sine coefficients of a RadialField.
class SpectralField {
 public:
  SpectralField(RadialGrid grid, std::vector<Complex> coeffs);

  const RadialGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return c_.size(); }
  std::span<const Complex> coefficients() const noexcept { return c_; }
  std::span<Complex> coefficients() noexcept { return c_; }
  Complex operator[](std::size_t i) const { return c_[i]; }
  Complex& operator[](std::size_t i) { return c_[i]; }

 private:
  RadialGrid grid_;
  std::vector<Complex> c_;
};

/// Forward: c_k = sum_j w_j sin(pi j k / N).
SpectralField transform(const RadialField& f);
/// Inverse: w_j = (2/N) sum_k c_k sin(pi j k / N).
RadialField inverse_transform(const SpectralField& F);

void require_same_grid(const RadialGrid& a, const RadialGrid& b, const char* what);

/// c_k <- m(lambda_k) c_k. m may return a real or complex factor.
template <class Multiplier>
SpectralField apply_multiplier(SpectralField F, Multiplier&& m) {
  const auto lambda = F.grid().eigenvalues();
  auto c = F.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto factor = m(lambda[i]);
    if (!std::isfinite(std::real(factor)) || !std::isfinite(std::imag(factor)))
      fail(ErrorCode::numeric_domain, "multiplier is not finite at lambda = " +
                                          std::to_string(lambda[i]));
    c[i] *= factor;
  }
  return F;
}

/// Physical samples u_j = w_j / sinh(r_j).
std::vector<Complex> to_physical(const RadialField& f);
RadialField from_physical(std::span<const Complex> u, const RadialGrid& grid);

/// Pure sine mode w = amplitude * sin(pi k r / R), k >= 1.
RadialField sine_mode(const RadialGrid& grid, int k, Complex amplitude = 1.0);

nlohmann::json field_to_json(const RadialField& f);
RadialField field_from_json(const nlohmann::json& j);

}  // namespace h3nls
