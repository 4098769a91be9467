#include "h3nls/data_gen.hpp"

#include <numbers>

#include "h3nls/calculus.hpp"

namespace h3nls {

double next_unit(PhaseEngine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

RadialField gen_data(double s, std::uint64_t seed, double amplitude, const RadialGrid& grid,
                     double delta_spec) {
  if (!(s > 0.0 && s < 1.0))
    fail(ErrorCode::invalid_parameter, "data regularity s must lie in (0,1)");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    fail(ErrorCode::invalid_parameter, "amplitude must be finite and nonnegative");
  if (!(delta_spec >= 0.0) || !std::isfinite(delta_spec))
    fail(ErrorCode::invalid_parameter, "spectral margin must be nonnegative");

  const double beta = s + 0.5 + delta_spec;
  const auto lambda = grid.eigenvalues();
  PhaseEngine engine(seed);
  std::vector<Complex> c(grid.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double theta = 2.0 * std::numbers::pi * next_unit(engine);
    c[i] = std::polar(std::pow(lambda[i], -0.5 * beta), theta);
  }
  SpectralField unit(grid, std::move(c));
  const double factor = amplitude / sobolev_norm(unit, s);
  for (auto& z : unit.coefficients()) z *= factor;
  return inverse_transform(unit);
}

}  // namespace h3nls
