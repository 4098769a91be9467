#pragma once

// Mixed space-time norms ||<nabla>^sigma f||_{L^p_t L^q_x} over a finite set
// of exponent pairs, accumulated with the trapezoid rule in time.

#include <span>
#include <string>
#include <vector>

#include "h3nls/propagators.hpp"

namespace h3nls {

struct SpaceTimePair {
  double p;  // time exponent, may be kInfinity
  double q;  // space exponent
};

using PairSet = std::vector<SpaceTimePair>;

/// (inf,2), (2,6), (4,3) plus the reporting pairs (8,4) and (4,4).
PairSet default_pairs();
/// p, q >= 2 and 2/p + 3/q = 3/2.
bool is_admissible(const SpaceTimePair& pair) noexcept;

enum class FieldSelector { u, psi, phi, v, zeta };

const char* to_string(FieldSelector f) noexcept;
FieldSelector parse_field_selector(const std::string& name);
RadialField select_field(const Decomposition& state, FieldSelector which);

struct StrichartzRow {
  SpaceTimePair pair;
  double value;
  bool admissible;
};

struct StrichartzTable {
  FieldSelector field = FieldSelector::u;
  double sigma = 0.0;
  std::vector<StrichartzRow> rows;
  /// Max over the admissible rows; the finite-pair stand-in for S^sigma.
  double surrogate = 0.0;
};

/// (integral of x^p dt)^{1/p} by trapezoid, or max x when p is infinite.
double time_norm(std::span<const double> t, std::span<const double> x, double p);

class StrichartzAccumulator final : public Accumulator {
 public:
  StrichartzAccumulator(const RadialGrid& grid, FieldSelector field, double sigma,
                        PairSet pairs = default_pairs());

  /// Restarts accumulation with `start` as the first time sample.
  void reset(const Decomposition& start);
  void observe(const Decomposition& state) override;
  StrichartzTable table() const;

  /// Flat state vector for checkpointing.
  std::vector<double> state() const;
  void restore(std::span<const double> state);

 private:
  std::vector<double> spatial_norms(const Decomposition& state) const;

  FieldSelector field_;
  double sigma_;
  PairSet pairs_;
  std::vector<LebesgueNorm> norms_;  // one per pair; sup norms handled inline
  bool started_ = false;
  double prev_t_ = 0.0;
  std::vector<double> prev_;  // x^p at the previous sample (x for p = inf)
  std::vector<double> sums_;
};

}  // namespace h3nls
