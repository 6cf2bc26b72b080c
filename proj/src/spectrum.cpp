#include "upconv/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "upconv/error.hpp"

namespace upconv {
namespace {
constexpr double kFourLn2 = 2.772588722239781;
}

std::string_view to_string(SpectrumUnit unit) noexcept {
  switch (unit) {
    case SpectrumUnit::watts_per_nm: return "W/nm";
    case SpectrumUnit::counts_per_s: return "counts/s";
    case SpectrumUnit::counts: return "counts";
  }
  return "?";
}

std::string_view column_name(SpectrumUnit unit) noexcept {
  switch (unit) {
    case SpectrumUnit::watts_per_nm: return "power_w_per_nm";
    case SpectrumUnit::counts_per_s: return "rate_cps";
    case SpectrumUnit::counts: return "counts";
  }
  return "?";
}

SpectrumUnit unit_from_column_name(std::string_view name) {
  for (auto u : {SpectrumUnit::watts_per_nm, SpectrumUnit::counts_per_s, SpectrumUnit::counts}) {
    if (column_name(u) == name) return u;
  }
  throw InputError("unknown spectrum value column '" + std::string(name) + "'");
}

void Spectrum::validate() const {
  if (grid_nm.size() != values.size()) {
    throw DomainError("spectrum grid and values differ in length");
  }
  if (grid_nm.empty()) throw DomainError("spectrum is empty");
  for (std::size_t i = 0; i < grid_nm.size(); ++i) {
    if (!std::isfinite(grid_nm[i])) throw DomainError("spectrum grid has a non-finite entry");
    if (i > 0 && !(grid_nm[i] > grid_nm[i - 1])) {
      throw DomainError("spectrum grid is not strictly ascending at index " + std::to_string(i));
    }
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw DomainError("spectrum value at " + std::to_string(grid_nm[i]) +
                        " nm is negative or non-finite");
    }
  }
}

double Spectrum::interpolate(double nm) const {
  if (grid_nm.empty() || nm < grid_nm.front() || nm > grid_nm.back()) return 0.0;
  const auto it = std::lower_bound(grid_nm.begin(), grid_nm.end(), nm);
  const auto hi = static_cast<std::size_t>(it - grid_nm.begin());
  if (grid_nm[hi] == nm) return values[hi];
  const std::size_t lo = hi - 1;
  const double t = (nm - grid_nm[lo]) / (grid_nm[hi] - grid_nm[lo]);
  return values[lo] + t * (values[hi] - values[lo]);
}

Spectrum Spectrum::resampled(std::span<const double> grid) const {
  Spectrum out{{grid.begin(), grid.end()}, {}, unit};
  out.values.reserve(grid.size());
  for (double nm : grid) out.values.push_back(interpolate(nm));
  return out;
}

double Spectrum::integral() const {
  const auto w = trapezoid_weights(grid_nm);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * values[i];
  return acc;
}

std::vector<double> trapezoid_weights(std::span<const double> grid_nm) {
  const std::size_t n = grid_nm.size();
  std::vector<double> w(n, 0.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double half = 0.5 * (grid_nm[i + 1] - grid_nm[i]);
    w[i] += half;
    w[i + 1] += half;
  }
  return w;
}

std::vector<double> uniform_grid(double lo_nm, double hi_nm, double step_nm) {
  if (!(step_nm > 0.0) || !(hi_nm >= lo_nm)) {
    throw DomainError("uniform grid needs step > 0 and hi >= lo");
  }
  const auto n = static_cast<std::size_t>(std::floor((hi_nm - lo_nm) / step_nm + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo_nm + static_cast<double>(i) * step_nm;
  g.back() = std::min(g.back(), hi_nm);
  return g;
}

std::vector<double> ModeComb::mode_centers_nm() const {
  std::vector<double> centers;
  for (int m = 0; m < mode_count; ++m) {
    centers.push_back(center_nm + (m - 0.5 * (mode_count - 1)) * mode_spacing_nm);
  }
  return centers;
}

Spectrum synthesize_mode_comb(const ModeComb& comb, std::span<const double> grid_nm) {
  if (comb.mode_count < 1 || !(comb.mode_fwhm_nm > 0.0) || !(comb.envelope_fwhm_nm > 0.0) ||
      !(comb.total_power_w >= 0.0)) {
    throw DomainError("invalid mode comb parameters");
  }
  Spectrum s{{grid_nm.begin(), grid_nm.end()}, std::vector<double>(grid_nm.size(), 0.0),
             SpectrumUnit::watts_per_nm};
  for (double c : comb.mode_centers_nm()) {
    const double env = (c - comb.center_nm) / comb.envelope_fwhm_nm;
    const double weight = std::exp(-kFourLn2 * env * env);
    for (std::size_t i = 0; i < grid_nm.size(); ++i) {
      const double x = (grid_nm[i] - c) / comb.mode_fwhm_nm;
      s.values[i] += weight * std::exp(-kFourLn2 * x * x);
    }
  }
  const double norm = s.integral();
  if (norm > 0.0) {
    for (double& v : s.values) v *= comb.total_power_w / norm;
  }
  return s;
}

Spectrum synthesize_line(double center_nm, double fwhm_nm, double total_power_w,
                         std::span<const double> grid_nm) {
  ModeComb single;
  single.center_nm = center_nm;
  single.mode_count = 1;
  single.mode_fwhm_nm = fwhm_nm;
  single.total_power_w = total_power_w;
  return synthesize_mode_comb(single, grid_nm);
}

}  // namespace upconv
