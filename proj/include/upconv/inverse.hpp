#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "upconv/conversion.hpp"
#include "upconv/spectrometer.hpp"
#include "upconv/spectrum.hpp"

namespace upconv {

enum class DeconvolutionAlgorithm { richardson_lucy, tikhonov };
enum class StopReason { discrepancy_reached, max_iterations, stagnation };

[[nodiscard]] std::string_view to_string(DeconvolutionAlgorithm a) noexcept;
[[nodiscard]] std::string_view to_string(StopReason r) noexcept;
[[nodiscard]] DeconvolutionAlgorithm deconvolution_algorithm_from_string(std::string_view name);

struct DeconvolutionOptions {
  DeconvolutionAlgorithm algorithm = DeconvolutionAlgorithm::richardson_lucy;
  int max_iterations = 500;
  /// Stop once the Poisson deviance of the raw counts falls to this value.
  /// `auto_discrepancy` sets it to N + 2 sqrt(2N) for N scan points (the
  /// expected deviance plus two standard deviations); with neither, only
  /// max_iterations / stagnation stop. Ignored for expected-rate input.
  std::optional<double> discrepancy_target;
  bool auto_discrepancy = true;
  double stagnation_tolerance = 1e-12;  // relative L1 change per iteration
  /// Pedestal subtracted before the iteration; estimated from the scan when
  /// absent.
  std::optional<double> background_cps;
  /// Deconvolve expected rates instead of sampled counts (noiseless input).
  bool use_expected_rates = false;
  /// Signal band (nm) that must be recoverable; defaults to the range
  /// spanned by the kernel's mapped signal (or the whole grid).
  std::optional<std::pair<double, double>> support_nm;
  double tikhonov_alpha = 1e-6;  // relative to the largest column norm squared
  bool record_trace = false;
};

struct DeconvolutionResult {
  Spectrum estimate;  // W/nm on the kernel's signal grid
  int iterations_used = 0;
  double residual_norm = 0.0;  // ||d - A x|| / ||d|| on background-subtracted counts
  StopReason stop_reason = StopReason::max_iterations;
  double background_cps = 0.0;
  double discrepancy = 0.0;       // Poisson deviance at the final estimate
  double discrepancy_target = 0.0;
  double flux_ratio = 0.0;        // predicted / measured clamped background-subtracted counts
  /// Richardson-Lucy objective sum(d ln mu - mu) before each update (when
  /// record_trace is set).
  std::vector<double> log_likelihood_trace;
};

/// Recovers the input spectrum from a scan. Richardson-Lucy by default
/// (multiplicative, nonnegative, flux conserving); Tikhonov-regularised
/// least squares (conjugate gradients, clamped at zero) as an alternative.
///
/// Throws InputError for fewer than 3 scan points or mismatched grids, and
/// UnrecoverableBandError when a kernel column inside the support is all zero.
[[nodiscard]] DeconvolutionResult deconvolve(const ScanResult& raw, const ResponseKernel& kernel,
                                             const DeconvolutionOptions& options = {});

/// Robust pedestal estimate (cps): median of the lowest decile seeds an
/// iterative +-4 sigma Poisson clip whose mean is returned. Throws
/// EstimationError if fewer than 5 points survive or the survivors are
/// over-dispersed (no signal-free region).
[[nodiscard]] double estimate_background(const ScanResult& raw);

/// Declared-model variant: the modelled noise rate at `pump_mw`.
[[nodiscard]] double estimate_background(const ScanResult& raw, const NoiseModel& model,
                                         double pump_mw);

}  // namespace upconv
