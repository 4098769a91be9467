#include "h3nls/radial_core.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <numbers>
#include <string>

namespace h3nls {

namespace {

// The FFTW planner is not reentrant; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Plans are created in place on interleaved complex storage: two real
// transforms (re, im) with stride 2.
fftw_plan plan_interleaved(int n, fftw_r2r_kind kind) {
  std::lock_guard lock(planner_mutex());
  double* scratch = fftw_alloc_real(static_cast<std::size_t>(2 * n));
  fftw_plan plan = fftw_plan_many_r2r(1, &n, 2, scratch, nullptr, 2, 1, scratch,
                                      nullptr, 2, 1, &kind,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(scratch);
  if (plan == nullptr) fail(ErrorCode::numeric_fatal, "fftw planning failed");
  return plan;
}

}  // namespace

namespace detail {

struct GridData {
  double radius;
  int intervals;
  double spacing;
  std::vector<double> nodes;
  std::vector<double> sinh_nodes;
  std::vector<double> inv_sinh2;
  std::vector<double> eigenvalues;
  fftw_plan sine_plan = nullptr;
  fftw_plan cosine_plan = nullptr;

  GridData(double R, int N) : radius(R), intervals(N), spacing(R / N) {
    const auto n = static_cast<std::size_t>(N - 1);
    nodes.resize(n);
    sinh_nodes.resize(n);
    inv_sinh2.resize(n);
    eigenvalues.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      nodes[j] = static_cast<double>(j + 1) * R / N;
      sinh_nodes[j] = std::sinh(nodes[j]);
      inv_sinh2[j] = 1.0 / (sinh_nodes[j] * sinh_nodes[j]);
      const double kappa = std::numbers::pi * static_cast<double>(j + 1) / R;
      eigenvalues[j] = 1.0 + kappa * kappa;
    }
    sine_plan = plan_interleaved(N - 1, FFTW_RODFT00);
    cosine_plan = plan_interleaved(N + 1, FFTW_REDFT00);
  }

  ~GridData() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(sine_plan);
    fftw_destroy_plan(cosine_plan);
  }

  GridData(const GridData&) = delete;
  GridData& operator=(const GridData&) = delete;
};

}  // namespace detail

RadialGrid::RadialGrid(double radius, int intervals) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    fail(ErrorCode::invalid_parameter, "grid radius must be positive");
  if (intervals < 2)
    fail(ErrorCode::invalid_parameter, "grid needs at least 2 subintervals");
  data_ = std::make_shared<const detail::GridData>(radius, intervals);
}

double RadialGrid::radius() const noexcept { return data_->radius; }
int RadialGrid::intervals() const noexcept { return data_->intervals; }
std::size_t RadialGrid::size() const noexcept { return data_->nodes.size(); }
double RadialGrid::spacing() const noexcept { return data_->spacing; }
double RadialGrid::node(std::size_t j) const { return data_->nodes.at(j); }
std::span<const double> RadialGrid::nodes() const noexcept { return data_->nodes; }
std::span<const double> RadialGrid::sinh_nodes() const noexcept {
  return data_->sinh_nodes;
}
std::span<const double> RadialGrid::inv_sinh_squared() const noexcept {
  return data_->inv_sinh2;
}
std::span<const double> RadialGrid::eigenvalues() const noexcept {
  return data_->eigenvalues;
}
double RadialGrid::min_eigenvalue() const noexcept {
  return data_->eigenvalues.front();
}
double RadialGrid::max_eigenvalue() const noexcept {
  return data_->eigenvalues.back();
}

void RadialGrid::sine_sum(std::span<Complex> values) const {
  if (values.size() != size())
    fail(ErrorCode::invalid_argument, "sine transform size mismatch");
  // FFTW's RODFT00 computes 2 * sum_j x_j sin(...).
  auto* raw = reinterpret_cast<double*>(values.data());
  fftw_execute_r2r(data_->sine_plan, raw, raw);
  for (auto& v : values) v *= 0.5;
}

void RadialGrid::cosine_sum(std::span<const Complex> coeffs,
                            std::span<Complex> out) const {
  if (coeffs.size() != size() || out.size() != size())
    fail(ErrorCode::invalid_argument, "cosine synthesis size mismatch");
  // REDFT00 on N+1 points k = 0..N with zero end coefficients:
  // Y_j = 2 sum_{k=1}^{N-1} c_k cos(pi j k / N).
  std::vector<Complex> buf(size() + 2, Complex{});
  std::copy(coeffs.begin(), coeffs.end(), buf.begin() + 1);
  auto* raw = reinterpret_cast<double*>(buf.data());
  fftw_execute_r2r(data_->cosine_plan, raw, raw);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = 0.5 * buf[j + 1];
}

RadialGrid make_grid(double radius, int intervals) {
  return RadialGrid(radius, intervals);
}

void require_same_grid(const RadialGrid& a, const RadialGrid& b,
                       const char* what) {
  if (!(a == b))
    fail(ErrorCode::invalid_argument, std::string(what) + ": grid mismatch");
}

RadialField::RadialField(RadialGrid grid)
    : grid_(std::move(grid)), w_(grid_.size(), Complex{}) {}

RadialField::RadialField(RadialGrid grid, std::vector<Complex> w)
    : grid_(std::move(grid)), w_(std::move(w)) {
  if (w_.size() != grid_.size())
    fail(ErrorCode::invalid_argument,
         "field has " + std::to_string(w_.size()) + " values, grid has " +
             std::to_string(grid_.size()) + " nodes");
  if (!all_finite())
    fail(ErrorCode::numeric_domain, "field contains non-finite values");
}

bool RadialField::all_finite() const noexcept {
  return std::all_of(w_.begin(), w_.end(), [](Complex z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

RadialField& RadialField::operator+=(const RadialField& other) {
  require_same_grid(grid_, other.grid_, "field addition");
  for (std::size_t j = 0; j < w_.size(); ++j) w_[j] += other.w_[j];
  return *this;
}

RadialField& RadialField::operator-=(const RadialField& other) {
  require_same_grid(grid_, other.grid_, "field subtraction");
  for (std::size_t j = 0; j < w_.size(); ++j) w_[j] -= other.w_[j];
  return *this;
}

RadialField& RadialField::operator*=(Complex c) noexcept {
  for (auto& z : w_) z *= c;
  return *this;
}

RadialField operator+(RadialField a, const RadialField& b) { return a += b; }
RadialField operator-(RadialField a, const RadialField& b) { return a -= b; }
RadialField operator*(Complex c, RadialField a) { return a *= c; }

SpectralField::SpectralField(RadialGrid grid, std::vector<Complex> coeffs)
    : grid_(std::move(grid)), c_(std::move(coeffs)) {
  if (c_.size() != grid_.size())
    fail(ErrorCode::invalid_argument, "spectral field size mismatch");
}

SpectralField transform(const RadialField& f) {
  std::vector<Complex> c(f.values().begin(), f.values().end());
  f.grid().sine_sum(c);
  return SpectralField(f.grid(), std::move(c));
}

RadialField inverse_transform(const SpectralField& F) {
  std::vector<Complex> w(F.coefficients().begin(), F.coefficients().end());
  F.grid().sine_sum(w);
  const double scale = 2.0 / F.grid().intervals();
  for (auto& z : w) z *= scale;
  RadialField out(F.grid());
  std::copy(w.begin(), w.end(), out.values().begin());
  return out;
}

std::vector<Complex> to_physical(const RadialField& f) {
  const auto sh = f.grid().sinh_nodes();
  std::vector<Complex> u(f.size());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = f[j] / sh[j];
  return u;
}

RadialField from_physical(std::span<const Complex> u, const RadialGrid& grid) {
  if (u.size() != grid.size())
    fail(ErrorCode::invalid_argument, "physical sample count mismatch");
  const auto sh = grid.sinh_nodes();
  std::vector<Complex> w(u.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = u[j] * sh[j];
  return RadialField(grid, std::move(w));
}

RadialField sine_mode(const RadialGrid& grid, int k, Complex amplitude) {
  if (k < 1 || static_cast<std::size_t>(k) > grid.size())
    fail(ErrorCode::invalid_parameter, "mode index out of range");
  RadialField f(grid);
  const int N = grid.intervals();
  for (std::size_t j = 0; j < f.size(); ++j) {
    // Reduce j*k mod 2N so the argument stays small and the mode is exact
    // at nodes where it vanishes.
    const long long jk = static_cast<long long>(j + 1) * k % (2LL * N);
    f[j] = amplitude * std::sin(std::numbers::pi * static_cast<double>(jk) / N);
  }
  return f;
}

nlohmann::json field_to_json(const RadialField& f) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (const auto z : f.values()) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  return {{"R", f.grid().radius()},
          {"N", f.grid().intervals()},
          {"w_re", std::move(re)},
          {"w_im", std::move(im)}};
}

RadialField field_from_json(const nlohmann::json& j) {
  try {
    const auto grid = make_grid(j.at("R").get<double>(), j.at("N").get<int>());
    const auto& re = j.at("w_re");
    const auto& im = j.at("w_im");
    if (re.size() != grid.size() || im.size() != grid.size())
      fail(ErrorCode::invalid_argument,
           "snapshot arrays must have length N-1");
    std::vector<Complex> w(grid.size());
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = {re[i].get<double>(), im[i].get<double>()};
    return RadialField(grid, std::move(w));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("bad field snapshot: ") + e.what());
  }
}

}  // namespace h3nls
