#pragma once

#include <span>
#include <string>
#include <vector>

#include "upconv/units.hpp"

namespace upconv {

struct PumpState {
  double wavelength_nm = 1950.0;
  double power_mw = 0.0;  // measured just after the waveguide
  double source_max_power_mw = 800.0;

  void validate() const;
};

/// Lumped end-to-end detection efficiency eta(P) = eta_max sin^2(u sqrt(P)).
/// eta_max absorbs coupling, filter and detector losses.
struct ConversionModel {
  double eta_max = 0.0;
  double coupling_u = 0.0;  // mW^-1/2

  /// Pump power of full conversion, (pi / 2u)^2 in mW.
  [[nodiscard]] double full_conversion_power_mw() const;
};

/// Pump-induced noise rate D(P) = floor + amplitude * P^exponent.
struct NoiseModel {
  double floor_cps = 0.0;
  double amplitude = 0.0;  // cps / mW^exponent
  double exponent = 1.0;

  /// A pump-independent rate (e.g. an operating point quoted as one number).
  static NoiseModel constant(double rate_cps) { return {rate_cps, 0.0, 1.0}; }
};

struct CalibrationPoint {
  double pump_mw;
  double value;
};

struct FitResidual {
  double pump_mw;
  double measured;
  double model;
  double residual;  // measured - model
};

struct ConversionFit {
  ConversionModel model;
  std::vector<FitResidual> residuals;
  double max_abs_residual = 0.0;
  bool exact = false;  // two-point solve
};

struct NoiseFit {
  NoiseModel model;
  std::vector<FitResidual> residuals;
  double max_abs_residual = 0.0;
  bool exact = false;
  bool degenerate = false;  // constant data, exponent pinned to 0
  std::string note;
};

/// Throws DomainError for negative power.
[[nodiscard]] double detection_efficiency(const ConversionModel& model, double pump_mw);
[[nodiscard]] double noise_rate(const NoiseModel& model, double pump_mw);

/// Two points: exact solve of sin^2(u sqrt(P2)) / sin^2(u sqrt(P1)) = e2 / e1
/// by bisection with u in (0, pi / (2 sqrt(P_max))). More points: least
/// squares over the same bracket. Throws FitError when no root exists or the
/// powers are not distinct, DomainError for efficiencies outside (0, 1).
[[nodiscard]] ConversionFit fit_conversion(std::span<const CalibrationPoint> points);

/// Two points: exact power law through both with the floor held at
/// `floor_cps`. Three or more: least squares with floor >= `floor_cps`,
/// amplitude >= 0, exponent in [0, 6]. Throws DomainError when a rate minus
/// the floor is not positive in the two-point case.
[[nodiscard]] NoiseFit fit_noise(std::span<const CalibrationPoint> points, double floor_cps = 0.0);

}  // namespace upconv
