#pragma once

// Seeded rough radial data of prescribed Sobolev regularity.
//
// Sine coefficients are c_k = A xi_k lambda_k^{-beta/2} with
// beta = s + 1/2 + delta_spec and unit-modulus phases xi_k = e^{i theta_k}.
// The phases come from the 64-bit LCG
//     x_{n+1} = 6364136223846793005 x_n + 1442695040888963407  (mod 2^64),
// x_0 = seed, theta_k = 2 pi (x_k >> 11) 2^{-53} for k = 1, 2, ...
// The field is then scaled so that sobolev_norm(., s) equals A.

#include <cstdint>
#include <random>

#include "h3nls/radial_core.hpp"

namespace h3nls {

using PhaseEngine = std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL,
                                                    1442695040888963407ULL, 0ULL>;

/// Uniform double in [0, 1) from the top 53 bits of the next LCG state.
double next_unit(PhaseEngine& engine);

RadialField gen_data(double s, std::uint64_t seed, double amplitude, const RadialGrid& grid,
                     double delta_spec = 0.01);

}  // namespace h3nls
