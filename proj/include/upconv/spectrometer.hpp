#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "upconv/components.hpp"
#include "upconv/conversion.hpp"
#include "upconv/dispersion.hpp"
#include "upconv/spectrum.hpp"

namespace upconv {

enum class VbgTracking { fixed, tracked };
/// `vbg_only` drops the QPM lineshape from the kernel, leaving the grating
/// response as the only spectral filter.
enum class KernelMode { full, vbg_only };

[[nodiscard]] std::string_view to_string(VbgTracking t) noexcept;
[[nodiscard]] std::string_view to_string(KernelMode m) noexcept;
[[nodiscard]] VbgTracking vbg_tracking_from_string(std::string_view name);
[[nodiscard]] KernelMode kernel_mode_from_string(std::string_view name);

struct ScanPlan {
  double pump_start_nm = 1920.0;
  double pump_stop_nm = 1980.0;
  double pump_step_nm = 0.05;
  double dwell_s = 1.0;
  double pump_power_mw = 30.0;
  VbgTracking tracking = VbgTracking::tracked;
  std::uint64_t seed = 20131015;

  void validate() const;
  [[nodiscard]] std::vector<double> pump_grid() const;
  [[nodiscard]] double center_pump_nm() const { return 0.5 * (pump_start_nm + pump_stop_nm); }
};

/// Everything between the input fiber and the detector that shapes the
/// spectral response: waveguide, fixed filter stack and the tunable grating.
struct Instrument {
  WaveguideSpec waveguide;
  std::vector<FilterElement> chain;  // fixed filters, grating excluded
  VbgState vbg = VbgState::nominal(863.5714285714286);
  KernelMode mode = KernelMode::full;
};

struct TrackingSchedule {
  std::vector<double> pump_nm;
  std::vector<double> mapped_signal_nm;  // phase-matched signal per point
  std::vector<double> sfg_nm;            // upconverted wavelength at phase match
  std::vector<double> vbg_centers_nm;    // setpoints used
  double sfg_drift_nm = 0.0;             // max - min of sfg_nm
  bool tracking_required = false;        // drift exceeds the grating FWHM
};

/// Per-point grating setpoints. Tracked mode follows the phase-matched
/// upconverted wavelength; fixed mode holds the scan-center value. Throws
/// RangeError if a setpoint leaves the grating's tuning range.
[[nodiscard]] TrackingSchedule vbg_tracking_schedule(const ScanPlan& plan,
                                                     const Instrument& instrument);

struct FixedVbgSpan {
  double signal_span_nm;
  double signal_lo_nm;
  double signal_hi_nm;
  double sfg_drift_per_signal_nm;  // |d lambda_SFG / d lambda_s| at the center
};

/// Widest contiguous signal interval around `center_pump_nm` over which the
/// phase-matched upconverted wavelength stays within one grating FWHM
/// (max - min), searched on a 0.01 nm pump grid inside [pump_lo, pump_hi].
[[nodiscard]] FixedVbgSpan fixed_vbg_usable_span(const Instrument& instrument,
                                                 double center_pump_nm, double pump_lo_nm,
                                                 double pump_hi_nm);

/// Expected count rate per watt of monochromatic input at `signal` with the
/// pump at `pump` and the grating at `vbg_center_nm`:
///
///   eta * sinc^2(dk L / 2) * T(l_SFG) / (T(vbg_center) * h nu_s)
///
/// where T is the filter stack times the grating response, so a tracked,
/// phase-matched input yields exactly eta photons counted per photon in.
[[nodiscard]] double response(const Instrument& instrument, double efficiency, Wavelength signal,
                              Wavelength pump, double vbg_center_nm);

/// Dense pump x signal response matrix in counts/s per W. Rows are stored
/// with their nonzero band [row_begin, row_end); entries below 1e-14 of the
/// row maximum are stored as exact zeros.
class ResponseKernel {
 public:
  ResponseKernel() = default;
  ResponseKernel(std::vector<double> pump_grid, std::vector<double> signal_grid,
                 std::vector<double> values);

  [[nodiscard]] std::size_t rows() const noexcept { return pump_grid_.size(); }
  [[nodiscard]] std::size_t cols() const noexcept { return signal_grid_.size(); }
  [[nodiscard]] const std::vector<double>& pump_grid() const noexcept { return pump_grid_; }
  [[nodiscard]] const std::vector<double>& signal_grid() const noexcept { return signal_grid_; }
  [[nodiscard]] const std::vector<double>& bin_widths() const noexcept { return bin_widths_; }
  [[nodiscard]] double at(std::size_t row, std::size_t col) const noexcept {
    return values_[row * cols() + col];
  }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols(), cols()};
  }
  [[nodiscard]] std::size_t row_begin(std::size_t r) const noexcept { return row_begin_[r]; }
  [[nodiscard]] std::size_t row_end(std::size_t r) const noexcept { return row_end_[r]; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

  // Provenance; empty when the kernel was read from a file.
  std::vector<double> mapped_signal_nm;
  std::vector<double> vbg_centers_nm;
  double efficiency = 0.0;

 private:
  std::vector<double> pump_grid_;
  std::vector<double> signal_grid_;
  std::vector<double> bin_widths_;
  std::vector<double> values_;
  std::vector<std::size_t> row_begin_;
  std::vector<std::size_t> row_end_;
};

/// Signal grid covering the plan's mapped signal range plus `margin_nm` on
/// each side.
[[nodiscard]] std::vector<double> default_signal_grid(const ScanPlan& plan,
                                                      const Instrument& instrument,
                                                      double step_nm = 0.02,
                                                      double margin_nm = 1.0);

/// Throws CoverageError if `signal_grid` does not cover the mapped range.
[[nodiscard]] ResponseKernel build_kernel(const Instrument& instrument, double efficiency,
                                          const ScanPlan& plan,
                                          std::span<const double> signal_grid,
                                          unsigned threads = 0);

[[nodiscard]] ResponseKernel build_kernel(const Instrument& instrument,
                                          const ConversionModel& conversion, const ScanPlan& plan,
                                          std::span<const double> signal_grid,
                                          unsigned threads = 0);

struct ScanResult {
  std::vector<double> pump_nm;
  std::vector<double> mapped_signal_nm;
  std::vector<double> expected_rate_cps;
  std::vector<std::uint64_t> counts;
  std::vector<double> dwell_s;
  std::vector<double> vbg_centers_nm;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t size() const noexcept { return pump_nm.size(); }
  /// counts / dwell per point.
  [[nodiscard]] std::vector<double> measured_rate_cps() const;
};

/// Signal-only expected rates sum_j K[i][j] S(l_j) dl_j. `input` must be in
/// W/nm; it is interpolated onto the kernel grid.
[[nodiscard]] std::vector<double> signal_rates(const Spectrum& input, const ResponseKernel& kernel);

/// expected = signal_rates + noise; counts ~ Poisson(expected * dwell) with
/// the per-point seed path (plan.seed, i), so results do not depend on
/// `threads`. Throws DomainError for negative spectrum values.
[[nodiscard]] ScanResult forward_scan(const Spectrum& input, const ResponseKernel& kernel,
                                      double noise_cps, const ScanPlan& plan,
                                      unsigned threads = 0);

[[nodiscard]] ScanResult forward_scan(const Spectrum& input, const ResponseKernel& kernel,
                                      const NoiseModel& noise, const ScanPlan& plan,
                                      unsigned threads = 0);

/// Grating FWHM referred to the signal band at fixed pump:
/// dl_s = dl_vbg (l_s / l_SFG)^2.
[[nodiscard]] double analytic_resolution(double vbg_fwhm_nm, double sfg_nm, double signal_nm);

/// FWHM (nm, signal axis) of kernel column `col` plotted against the rows'
/// mapped signal wavelengths. Needs kernel provenance.
[[nodiscard]] double kernel_column_fwhm(const ResponseKernel& kernel, std::size_t col);

struct ResolutionReport {
  double analytic_nm = 0.0;
  double numeric_nm = 0.0;
  bool tracked = true;
  std::string warning;
};

/// Both resolution estimates at `signal_nm`. The numeric path samples the
/// monochromatic response on a 0.001 nm pump grid.
[[nodiscard]] ResolutionReport resolution(const Instrument& instrument, const ScanPlan& plan,
                                          double signal_nm);

}  // namespace upconv
