#pragma once

// Inequality audits over fields and evolution histories.
//
// Every audit returns lhs, rhs and their ratio against a threshold. Thresholds
// are either analytic or calibration constants measured once on a frozen
// reference configuration.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "h3nls/highlow.hpp"
#include "h3nls/strichartz.hpp"
#include "json.hpp"

namespace h3nls {

struct AuditVerdict {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string provenance;  // "calibrated" or "analytic"
};

/// ratio = lhs / rhs with 0/0 := 0; pass iff ratio <= threshold.
AuditVerdict make_verdict(std::string name, double lhs, double rhs, double threshold,
                          std::string provenance);
nlohmann::json verdict_to_json(const AuditVerdict& v);

/// Rebuilds the decomposition stored in a snapshot (v = u - psi - phi).
Decomposition snapshot_state(const Snapshot& snap);

/// Mixed norms of the selected field over the retained snapshots.
StrichartzTable strichartz_report(const EvolutionHistory& history, FieldSelector field,
                                  double sigma, const PairSet& pairs = default_pairs());

struct MorawetzReport {
  AuditVerdict verdict;
  double zeta_l4_4 = 0.0;      // ||zeta||^4_{L^4_{t,x}}
  double zeta_sup_l2 = 0.0;    // ||zeta||_{L^inf_t L^2_x}
  double zeta_sup_h1 = 0.0;    // ||zeta||_{L^inf_t H^1_x}
  double n_zeta = 0.0;         // ||N zeta||_{L^1_{t,x}}
  double n_grad_zeta = 0.0;    // ||N grad zeta||_{L^1_{t,x}}
  double psi_l4_4 = 0.0;       // ||psi||^4_{L^4_{t,x}}
  double n_sup = 0.0;          // max |N| over all samples and nodes
};

/// zeta = u - psi, N = |u|^2 u - |zeta|^2 zeta. Threshold is c_cal.
MorawetzReport morawetz_audit(const EvolutionHistory& history, double c_cal);

/// Weighted local smoothing at weight <r>^{-1/2-delta} over [0, T] sampled
/// with `time_samples` trapezoid nodes.
struct SmoothingOptions {
  double T = 1.0;
  double delta = 0.01;
  int time_samples = 201;
};

AuditVerdict smoothing_audit(const RadialField& f, const SmoothingOptions& opts,
                             double c_cal);
/// Supremum over all data of the smoothing ratio on this grid and time
/// sampling, by power iteration on the discrete quadratic form.
double smoothing_constant(const RadialGrid& grid, const SmoothingOptions& opts,
                          int max_iterations = 400, double rel_tol = 1e-10);

struct BernsteinRow {
  double s = 0.0;
  double n1 = 0.0;    // max_k lambda_k^{1/2} e^{-s lambda_k}
  double n2 = 0.0;    // max_k (1 - e^{-s lambda_k}) lambda_k^{-1/2}
  double band = 0.0;  // max_k s lambda_k e^{-s lambda_k}
  bool n1_applies = false;  // s <= 1 / (2 lambda_min)
  std::vector<AuditVerdict> verdicts;
};

std::vector<BernsteinRow> bernstein_audit(const RadialGrid& grid,
                                          const std::vector<double>& s_list);

/// |w|_inf / (||f||_2^{1-1/(4a)} ||(-Delta)^a f||_2^{1/(4a)}).
double radial_sobolev_ratio(const RadialField& f, double alpha);
/// Exact supremum of radial_sobolev_ratio over all fields on the grid.
double radial_sobolev_constant(const RadialGrid& grid, double alpha);

struct RadialSobolevRow {
  double alpha = 0.0;
  double max_ratio = 0.0;
  double single_mode_ratio = 0.0;
  double scale_defect = 0.0;  // max |ratio(17 f) - ratio(f)| / ratio(f)
  AuditVerdict verdict;
};

/// Seeded battery: field i uses gen_data with seed + i at regularity 0.6.
std::vector<RadialSobolevRow> radial_sobolev_audit(const RadialGrid& grid, int samples,
                                                   const std::vector<double>& alphas,
                                                   std::uint64_t seed,
                                                   const std::map<double, double>& c_cal);

struct ScatteringReport {
  double sigma = 0.5;
  std::vector<double> times;         // tail sample times
  std::vector<double> decrements;    // D_k for each tail start index
  double d_initial = 0.0;            // diameter over the tail half
  double d_final = 0.0;              // diameter over the last quarter
  double ratio = 0.0;
  bool monotone = true;
  AuditVerdict verdict;
};

/// Pull-backs p(t) = e^{-it Delta} u(t) at the retained snapshots; the tail
/// is the second half of the horizon. Threshold is the allowed ratio.
ScatteringReport scattering_diagnostic(const EvolutionHistory& history, double sigma,
                                       double threshold);

struct ConservationReport {
  AuditVerdict mass;
  AuditVerdict energy;
};

ConservationReport conservation_audit(const EvolutionHistory& history,
                                      double mass_tol = 1e-10, double energy_tol = 1e-4);

struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
  std::size_t points = 0;
};

PowerFit fit_power_law(const std::vector<std::pair<double, double>>& points);

/// Named calibration constants with the configuration that produced them.
struct Calibration {
  double R = 40.0;
  int N = 4096;
  std::uint64_t seed = 7;
  std::map<std::string, double> constants;

  double get(const std::string& name) const;
  nlohmann::json to_json() const;
  static Calibration from_json(const nlohmann::json& j);
  static Calibration load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace h3nls
