#pragma once

// Norms, functionals and heat-flow frequency projections on radial fields.
//
// All spatial integrals are trapezoid sums over the interior nodes against
// the H^3 volume element 4 pi sinh^2(r) dr; boundary values vanish.
// Fractional powers of -Laplacian act on the exact sine spectrum.

#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "h3nls/radial_core.hpp"

namespace h3nls {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Projection {
  low,   // e^{s Delta}: frequencies below ~ s^{-1/2}
  high,  // 1 - e^{s Delta}
  band,  // (-s Delta) e^{s Delta}
};

/// |nabla|^sigma realized as the multiplier lambda^{sigma/2}.
RadialField fractional_derivative(const RadialField& f, double sigma);

RadialField project(const RadialField& f, Projection which, double s);
double projection_multiplier(Projection which, double s, double lambda);

/// L^p(H^3) norm; p = kInfinity gives max |u|.
double lebesgue_norm(const RadialField& f, double p);
double lebesgue_norm(std::span<const Complex> w, const RadialGrid& grid, double p);

/// ||lambda^{sigma/2} f||_{L^2}, evaluated spectrally.
double sobolev_norm(const RadialField& f, double sigma);
double sobolev_norm(const SpectralField& F, double sigma);

/// sup |sinh(r) u| = max |w|.
double weighted_sup(const RadialField& f);

/// ||<r>^a u||_{L^p} with <r> = (1 + r^2)^{1/2}.
double weighted_norm(const RadialField& f, double a, double p);

double mass(const RadialField& f);
double energy(const RadialField& f);

/// Physical radial derivative d/dr u at the nodes, via the cosine series of w.
std::vector<Complex> radial_gradient(const RadialField& f);

/// 4 pi sum_j g_j sinh^2(r_j) h for a physical density g sampled at nodes.
double volume_integral(const RadialGrid& grid, std::span<const double> density);

/// Precomputed weights for repeated L^p evaluation at a fixed finite p.
class LebesgueNorm {
 public:
  LebesgueNorm(const RadialGrid& grid, double p);
  /// Returns the p-th power of the norm, integral of |u|^p.
  double integral(std::span<const Complex> w) const;
  double operator()(std::span<const Complex> w) const;
  double exponent() const noexcept { return p_; }

 private:
  double p_;
  std::vector<double> weight_;  // 4 pi h sinh^{2-p}(r_j)
};

struct NormSpec {
  enum class Kind { lebesgue, sobolev, weighted_sup, weighted };

  Kind kind = Kind::lebesgue;
  double p = 2.0;
  double sigma = 0.0;
  double a = 0.0;

  /// Accepts "L2", "L4", "Linf", "H0.5", "H1", "WsupSinh", "W(a,p)".
  static NormSpec parse(std::string_view text);
  std::string to_string() const;
};

double evaluate(const RadialField& f, const NormSpec& spec);

}  // namespace h3nls
