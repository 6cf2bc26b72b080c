#include "upconv/spectrometer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "upconv/counting.hpp"
#include "upconv/parallel.hpp"

namespace upconv {
namespace {

constexpr double kBandTruncation = 1e-14;

double fixed_chain(const Instrument& instrument, Wavelength w) {
  return instrument.chain.empty() ? 1.0 : chain_transmission(instrument.chain, w);
}

// FWHM of a single-peaked profile sampled at ascending x, by linear
// interpolation of the half-maximum crossings either side of the maximum.
double profile_fwhm(std::span<const double> x, std::span<const double> y) {
  const auto peak_it = std::max_element(y.begin(), y.end());
  const auto peak = static_cast<std::size_t>(peak_it - y.begin());
  const double half = 0.5 * *peak_it;
  if (!(half > 0.0)) throw DomainError("profile has no positive peak");
  std::size_t left = peak;
  while (left > 0 && y[left - 1] >= half) --left;
  std::size_t right = peak;
  while (right + 1 < y.size() && y[right + 1] >= half) ++right;
  if (left == 0 || right + 1 == y.size()) {
    throw DomainError("half-maximum crossing lies outside the sampled profile");
  }
  const auto cross = [&](std::size_t outside, std::size_t inside) {
    const double t = (half - y[outside]) / (y[inside] - y[outside]);
    return x[outside] + t * (x[inside] - x[outside]);
  };
  return cross(right + 1, right) - cross(left - 1, left);
}

std::string describe_range(double lo, double hi) {
  std::ostringstream os;
  os.precision(8);
  os << "[" << lo << ", " << hi << "] nm";
  return os.str();
}

}  // namespace

std::string_view to_string(VbgTracking t) noexcept {
  return t == VbgTracking::tracked ? "tracked" : "fixed";
}

std::string_view to_string(KernelMode m) noexcept {
  return m == KernelMode::full ? "full" : "vbg_only";
}

VbgTracking vbg_tracking_from_string(std::string_view name) {
  if (name == "tracked") return VbgTracking::tracked;
  if (name == "fixed") return VbgTracking::fixed;
  throw DomainError("unknown VBG tracking mode '" + std::string(name) + "'");
}

KernelMode kernel_mode_from_string(std::string_view name) {
  if (name == "full") return KernelMode::full;
  if (name == "vbg_only") return KernelMode::vbg_only;
  throw DomainError("unknown kernel mode '" + std::string(name) + "'");
}

void ScanPlan::validate() const {
  if (!(pump_start_nm < pump_stop_nm)) throw DomainError("scan plan needs pump start < stop");
  if (!(pump_step_nm > 0.0)) throw DomainError("scan plan needs pump step > 0");
  if (!(dwell_s > 0.0)) throw DomainError("scan plan needs dwell > 0 s");
  if (!(pump_power_mw >= 0.0)) throw DomainError("scan plan needs pump power >= 0 mW");
  (void)Wavelength(pump_start_nm);
  (void)Wavelength(pump_stop_nm);
}

std::vector<double> ScanPlan::pump_grid() const {
  validate();
  return uniform_grid(pump_start_nm, pump_stop_nm, pump_step_nm);
}

TrackingSchedule vbg_tracking_schedule(const ScanPlan& plan, const Instrument& instrument) {
  TrackingSchedule out;
  out.pump_nm = plan.pump_grid();
  const auto& wg = instrument.waveguide;
  for (double p : out.pump_nm) {
    const Wavelength pump(p);
    const Wavelength signal = phase_matched_signal(pump, wg);
    out.mapped_signal_nm.push_back(signal.nm());
    out.sfg_nm.push_back(sfg_wavelength(signal, pump).nm());
  }
  const auto [lo, hi] = std::minmax_element(out.sfg_nm.begin(), out.sfg_nm.end());
  out.sfg_drift_nm = *hi - *lo;
  out.tracking_required = out.sfg_drift_nm > instrument.vbg.fwhm_nm();

  if (plan.tracking == VbgTracking::tracked) {
    out.vbg_centers_nm = out.sfg_nm;
  } else {
    const Wavelength center_pump(plan.center_pump_nm());
    const Wavelength center_signal = phase_matched_signal(center_pump, wg);
    out.vbg_centers_nm.assign(out.pump_nm.size(),
                              sfg_wavelength(center_signal, center_pump).nm());
  }
  for (double c : out.vbg_centers_nm) {
    (void)instrument.vbg.tuned_to(c);  // throws RangeError
  }
  return out;
}

FixedVbgSpan fixed_vbg_usable_span(const Instrument& instrument, double center_pump_nm,
                                   double pump_lo_nm, double pump_hi_nm) {
  const auto pumps = uniform_grid(pump_lo_nm, pump_hi_nm, 0.01);
  std::vector<double> signal(pumps.size());
  std::vector<double> sfg(pumps.size());
  for (std::size_t i = 0; i < pumps.size(); ++i) {
    const Wavelength p(pumps[i]);
    const Wavelength s = phase_matched_signal(p, instrument.waveguide);
    signal[i] = s.nm();
    sfg[i] = sfg_wavelength(s, p).nm();
  }
  const auto nearest = std::min_element(pumps.begin(), pumps.end(), [&](double a, double b) {
    return std::abs(a - center_pump_nm) < std::abs(b - center_pump_nm);
  });
  std::size_t lo = static_cast<std::size_t>(nearest - pumps.begin());
  std::size_t hi = lo;
  double sfg_min = sfg[lo];
  double sfg_max = sfg[lo];
  const double limit = instrument.vbg.fwhm_nm();
  // Grow one point at a time on whichever side keeps the drift smaller.
  for (;;) {
    double best_range = std::numeric_limits<double>::infinity();
    int side = 0;
    if (lo > 0) {
      const double r = std::max(sfg_max, sfg[lo - 1]) - std::min(sfg_min, sfg[lo - 1]);
      if (r <= limit && r < best_range) {
        best_range = r;
        side = -1;
      }
    }
    if (hi + 1 < pumps.size()) {
      const double r = std::max(sfg_max, sfg[hi + 1]) - std::min(sfg_min, sfg[hi + 1]);
      if (r <= limit && r < best_range) {
        best_range = r;
        side = +1;
      }
    }
    if (side == 0) break;
    const std::size_t added = side < 0 ? --lo : ++hi;
    sfg_min = std::min(sfg_min, sfg[added]);
    sfg_max = std::max(sfg_max, sfg[added]);
  }
  const std::size_t c = static_cast<std::size_t>(nearest - pumps.begin());
  const std::size_t a = c > 0 ? c - 1 : c;
  const std::size_t b = c + 1 < pumps.size() ? c + 1 : c;
  const double rate = b > a ? std::abs((sfg[b] - sfg[a]) / (signal[b] - signal[a])) : 0.0;
  return {std::abs(signal[hi] - signal[lo]), std::min(signal[lo], signal[hi]),
          std::max(signal[lo], signal[hi]), rate};
}

double response(const Instrument& instrument, double efficiency, Wavelength signal,
                Wavelength pump, double vbg_center_nm) {
  const Wavelength out = sfg_wavelength(signal, pump);
  const double qpm = instrument.mode == KernelMode::full
                         ? qpm_mismatch(signal, pump, instrument.waveguide).efficiency_factor
                         : 1.0;
  FilterElement grating = instrument.vbg.element();
  grating.center_nm = vbg_center_nm;
  const Wavelength center(vbg_center_nm);
  const double reference = fixed_chain(instrument, center) * grating.peak;
  if (!(reference > 0.0)) {
    throw DomainError("filter stack blocks the grating center wavelength");
  }
  const double through = fixed_chain(instrument, out) * transmission(grating, out);
  return efficiency * qpm * through / reference / signal.photon_energy_j();
}

ResponseKernel::ResponseKernel(std::vector<double> pump_grid, std::vector<double> signal_grid,
                               std::vector<double> values)
    : pump_grid_(std::move(pump_grid)),
      signal_grid_(std::move(signal_grid)),
      values_(std::move(values)) {
  if (values_.size() != pump_grid_.size() * signal_grid_.size()) {
    throw InputError("kernel matrix size does not match its grids");
  }
  for (std::size_t j = 1; j < signal_grid_.size(); ++j) {
    if (!(signal_grid_[j] > signal_grid_[j - 1])) {
      throw InputError("kernel signal grid is not strictly ascending");
    }
  }
  bin_widths_ = trapezoid_weights(signal_grid_);
  row_begin_.assign(rows(), 0);
  row_end_.assign(rows(), 0);
  for (std::size_t r = 0; r < rows(); ++r) {
    double* row = values_.data() + r * cols();
    double peak = 0.0;
    for (std::size_t c = 0; c < cols(); ++c) {
      if (!(row[c] >= 0.0) || !std::isfinite(row[c])) {
        throw InputError("kernel entries must be finite and >= 0");
      }
      peak = std::max(peak, row[c]);
    }
    std::size_t first = cols();
    std::size_t last = 0;
    for (std::size_t c = 0; c < cols(); ++c) {
      if (row[c] < kBandTruncation * peak) row[c] = 0.0;
      if (row[c] > 0.0) {
        first = std::min(first, c);
        last = c + 1;
      }
    }
    row_begin_[r] = first < last ? first : 0;
    row_end_[r] = first < last ? last : 0;
  }
}

std::vector<double> default_signal_grid(const ScanPlan& plan, const Instrument& instrument,
                                        double step_nm, double margin_nm) {
  const auto pumps = plan.pump_grid();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double p : {pumps.front(), pumps.back(), plan.center_pump_nm()}) {
    const double s = phase_matched_signal(Wavelength(p), instrument.waveguide).nm();
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  // Round outward to the step so grids from different plans line up.
  lo = std::floor((lo - margin_nm) / step_nm + 1e-9) * step_nm;
  hi = std::ceil((hi + margin_nm) / step_nm - 1e-9) * step_nm;
  return uniform_grid(lo, hi, step_nm);
}

ResponseKernel build_kernel(const Instrument& instrument, double efficiency, const ScanPlan& plan,
                            std::span<const double> signal_grid, unsigned threads) {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
    throw DomainError("kernel efficiency must lie in [0, 1]");
  }
  const TrackingSchedule schedule = vbg_tracking_schedule(plan, instrument);
  if (signal_grid.size() < 2) throw CoverageError("signal grid needs at least 2 points");
  const auto [mapped_lo, mapped_hi] =
      std::minmax_element(schedule.mapped_signal_nm.begin(), schedule.mapped_signal_nm.end());
  if (signal_grid.front() > *mapped_lo || signal_grid.back() < *mapped_hi) {
    std::string gap;
    if (signal_grid.front() > *mapped_lo) gap += describe_range(*mapped_lo, signal_grid.front());
    if (signal_grid.back() < *mapped_hi) {
      if (!gap.empty()) gap += " and ";
      gap += describe_range(signal_grid.back(), *mapped_hi);
    }
    throw CoverageError("signal grid " + describe_range(signal_grid.front(), signal_grid.back()) +
                        " does not cover the mapped signal range " +
                        describe_range(*mapped_lo, *mapped_hi) + "; missing " + gap);
  }

  const std::size_t n_rows = schedule.pump_nm.size();
  const std::size_t n_cols = signal_grid.size();
  std::vector<double> values(n_rows * n_cols);
  parallel_for(n_rows, threads, [&](std::size_t i) {
    const Wavelength pump(schedule.pump_nm[i]);
    for (std::size_t j = 0; j < n_cols; ++j) {
      values[i * n_cols + j] = response(instrument, efficiency, Wavelength(signal_grid[j]), pump,
                                        schedule.vbg_centers_nm[i]);
    }
  });
  ResponseKernel kernel(schedule.pump_nm, {signal_grid.begin(), signal_grid.end()},
                        std::move(values));
  kernel.mapped_signal_nm = schedule.mapped_signal_nm;
  kernel.vbg_centers_nm = schedule.vbg_centers_nm;
  kernel.efficiency = efficiency;
  return kernel;
}

ResponseKernel build_kernel(const Instrument& instrument, const ConversionModel& conversion,
                            const ScanPlan& plan, std::span<const double> signal_grid,
                            unsigned threads) {
  return build_kernel(instrument, detection_efficiency(conversion, plan.pump_power_mw), plan,
                      signal_grid, threads);
}

std::vector<double> ScanResult::measured_rate_cps() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    out[i] = static_cast<double>(counts[i]) / dwell_s[i];
  }
  return out;
}

std::vector<double> signal_rates(const Spectrum& input, const ResponseKernel& kernel) {
  input.validate();
  if (input.unit != SpectrumUnit::watts_per_nm) {
    throw DomainError("forward model input must be a power spectral density in W/nm");
  }
  const auto& grid = kernel.signal_grid();
  const bool same_grid = input.grid_nm == grid;
  const Spectrum on_grid = same_grid ? input : input.resampled(grid);
  const auto& w = kernel.bin_widths();
  std::vector<double> weighted(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) weighted[j] = on_grid.values[j] * w[j];

  std::vector<double> rates(kernel.rows(), 0.0);
  for (std::size_t i = 0; i < kernel.rows(); ++i) {
    const auto row = kernel.row(i);
    double acc = 0.0;
    for (std::size_t j = kernel.row_begin(i); j < kernel.row_end(i); ++j) {
      acc += row[j] * weighted[j];
    }
    rates[i] = acc;
  }
  return rates;
}

ScanResult forward_scan(const Spectrum& input, const ResponseKernel& kernel, double noise_cps,
                        const ScanPlan& plan, unsigned threads) {
  if (!(noise_cps >= 0.0)) throw DomainError("noise rate must be >= 0");
  if (!(plan.dwell_s > 0.0)) throw DomainError("dwell must be > 0 s");
  ScanResult out;
  out.pump_nm = kernel.pump_grid();
  out.expected_rate_cps = signal_rates(input, kernel);
  for (double& r : out.expected_rate_cps) r += noise_cps;
  out.dwell_s.assign(out.pump_nm.size(), plan.dwell_s);
  out.vbg_centers_nm = kernel.vbg_centers_nm;
  out.mapped_signal_nm = kernel.mapped_signal_nm;
  out.seed = plan.seed;
  out.counts.assign(out.pump_nm.size(), 0);
  const SeedPath root{plan.seed, {}};
  parallel_for(out.pump_nm.size(), threads, [&](std::size_t i) {
    out.counts[i] = sample_counts(out.expected_rate_cps[i], plan.dwell_s, root.child(i)).counts;
  });
  return out;
}

ScanResult forward_scan(const Spectrum& input, const ResponseKernel& kernel,
                        const NoiseModel& noise, const ScanPlan& plan, unsigned threads) {
  return forward_scan(input, kernel, noise_rate(noise, plan.pump_power_mw), plan, threads);
}

double analytic_resolution(double vbg_fwhm_nm, double sfg_nm, double signal_nm) {
  const double ratio = signal_nm / sfg_nm;
  return vbg_fwhm_nm * ratio * ratio;
}

double kernel_column_fwhm(const ResponseKernel& kernel, std::size_t col) {
  if (col >= kernel.cols()) throw InputError("kernel column out of range");
  if (kernel.mapped_signal_nm.size() != kernel.rows()) {
    throw InputError("kernel has no mapped-signal provenance");
  }
  std::vector<std::size_t> order(kernel.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return kernel.mapped_signal_nm[a] < kernel.mapped_signal_nm[b];
  });
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t r : order) {
    x.push_back(kernel.mapped_signal_nm[r]);
    y.push_back(kernel.at(r, col));
  }
  return profile_fwhm(x, y);
}

ResolutionReport resolution(const Instrument& instrument, const ScanPlan& plan, double signal_nm) {
  ResolutionReport report;
  report.tracked = plan.tracking == VbgTracking::tracked;
  const auto& wg = instrument.waveguide;
  const Wavelength signal(signal_nm);
  const Wavelength pump0 = phase_matched_pump(signal, wg);
  report.analytic_nm =
      analytic_resolution(instrument.vbg.fwhm_nm(), sfg_wavelength(signal, pump0).nm(), signal_nm);

  double fixed_center = 0.0;
  if (!report.tracked) {
    const Wavelength cp(plan.center_pump_nm());
    fixed_center = sfg_wavelength(phase_matched_signal(cp, wg), cp).nm();
    report.warning =
        "grating is not tracked: resolution and throughput depend on position in the scan";
  }

  const auto pumps = uniform_grid(pump0.nm() - 1.5, pump0.nm() + 1.5, 0.001);
  std::vector<double> x(pumps.size());
  std::vector<double> y(pumps.size());
  for (std::size_t i = 0; i < pumps.size(); ++i) {
    const Wavelength p(pumps[i]);
    const Wavelength mapped = phase_matched_signal(p, wg);
    const double center = report.tracked ? sfg_wavelength(mapped, p).nm() : fixed_center;
    x[i] = mapped.nm();
    y[i] = response(instrument, 1.0, signal, p, center);
  }
  // The tuning map is decreasing in pump; profile_fwhm wants ascending x.
  if (x.front() > x.back()) {
    std::reverse(x.begin(), x.end());
    std::reverse(y.begin(), y.end());
  }
  report.numeric_nm = profile_fwhm(x, y);
  return report;
}

}  // namespace upconv
