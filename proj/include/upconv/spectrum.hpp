#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace upconv {

enum class SpectrumUnit {
  watts_per_nm,  // input power spectral density
  counts_per_s,  // count rates
  counts,
};

[[nodiscard]] std::string_view to_string(SpectrumUnit unit) noexcept;
/// Column header used in CSV files, e.g. "power_w_per_nm".
[[nodiscard]] std::string_view column_name(SpectrumUnit unit) noexcept;
[[nodiscard]] SpectrumUnit unit_from_column_name(std::string_view name);

/// Sampled spectrum on a strictly ascending wavelength grid (nm).
struct Spectrum {
  std::vector<double> grid_nm;
  std::vector<double> values;
  SpectrumUnit unit = SpectrumUnit::watts_per_nm;

  /// Throws DomainError unless the grid is strictly ascending, sizes match
  /// and every value is finite and >= 0.
  void validate() const;

  /// Linear interpolation; zero outside the grid.
  [[nodiscard]] double interpolate(double nm) const;

  /// Resampled onto `grid` by linear interpolation.
  [[nodiscard]] Spectrum resampled(std::span<const double> grid) const;

  /// Trapezoidal integral over the grid.
  [[nodiscard]] double integral() const;
};

/// Trapezoid quadrature weights (nm) for an ascending grid.
[[nodiscard]] std::vector<double> trapezoid_weights(std::span<const double> grid_nm);

/// Uniform grid from `lo` to `hi` inclusive (last point clamped to `hi`).
[[nodiscard]] std::vector<double> uniform_grid(double lo_nm, double hi_nm, double step_nm);

/// Multimode laser-diode stand-in: `mode_count` gaussian modes spaced
/// `mode_spacing_nm` around `center_nm`, weighted by a gaussian envelope,
/// normalised so the trapezoidal integral equals `total_power_w`.
struct ModeComb {
  double center_nm = 1550.0;
  double mode_spacing_nm = 0.5;
  int mode_count = 5;
  double mode_fwhm_nm = 0.2;
  double envelope_fwhm_nm = 1.5;
  double total_power_w = 0.0;

  [[nodiscard]] std::vector<double> mode_centers_nm() const;
};

[[nodiscard]] Spectrum synthesize_mode_comb(const ModeComb& comb, std::span<const double> grid_nm);

/// Single gaussian line of integrated power `total_power_w`.
[[nodiscard]] Spectrum synthesize_line(double center_nm, double fwhm_nm, double total_power_w,
                                       std::span<const double> grid_nm);

}  // namespace upconv
