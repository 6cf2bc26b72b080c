#pragma once

#include <array>
#include <span>
#include <vector>

#include "upconv/units.hpp"

namespace upconv {

/// Temperature-dependent extraordinary-index Sellmeier equation
///
///   n^2 = a1 + b1 f + (a2 + b2 f) / (l^2 - (a3 + b3 f)^2)
///            + (a4 + b4 f) / (l^2 - a5^2) - a6 l^2
///
/// with l in micrometres and f = (T - t_ref)(T + t_offset), T in Celsius.
struct SellmeierCoefficients {
  std::array<double, 6> a{};
  std::array<double, 4> b{};
  double t_ref_c = 24.5;
  double t_offset_c = 570.82;
  double valid_min_nm = 400.0;
  double valid_max_nm = 5000.0;

  /// Jundt, Opt. Lett. 22, 1553 (1997): congruent LiNbO3, extraordinary axis.
  static SellmeierCoefficients congruent_lithium_niobate();
};

/// Waveguide effective-index correction on top of the bulk index:
///
///   n_eff(l) = n_bulk(l) + l * sum_k c_k l^k        (l in micrometres)
///
/// The correction is an offset to n/l, so every coefficient contributes to
/// the phase mismatch (a bare constant index offset would cancel by energy
/// conservation).
struct DispersionCorrection {
  std::vector<double> coefficients;

  /// sum_k c_k l^k, l in micrometres.
  [[nodiscard]] double offset_per_um(double wavelength_um) const noexcept;
  friend bool operator==(const DispersionCorrection&, const DispersionCorrection&) = default;
};

struct WaveguideSpec {
  double length_mm = 52.0;
  double qpm_period_um = 19.6;
  double temperature_c = 56.0;
  double pigtail_loss_db = 0.7;
  double facet_throughput_loss_db = 1.5;
  SellmeierCoefficients medium = SellmeierCoefficients::congruent_lithium_niobate();
  DispersionCorrection correction;
  // Nominal operating point; seeds root-bracket guesses only.
  double nominal_pump_nm = 1950.0;
  double nominal_signal_nm = 1550.0;

  /// Throws DomainError if a field violates its invariant.
  void validate() const;
  [[nodiscard]] double length_um() const noexcept { return length_mm * 1e3; }
};

struct PhaseMatchState {
  double delta_k_rad_per_um = 0.0;
  double efficiency_factor = 1.0;  // sinc^2(dk L / 2)
};

struct TuningAnchor {
  double pump_nm;
  double signal_nm;
};

struct AcceptanceBandwidth {
  double signal_fwhm_nm;  // FWHM of sinc^2 versus signal wavelength at fixed pump
  double sfg_fwhm_nm;     // same width mapped to the upconverted band at fixed pump
  double signal_center_nm;
  double sfg_center_nm;
};

/// sin(x)^2 / x^2 with the removable singularity filled in.
[[nodiscard]] double sinc_squared(double x) noexcept;

[[nodiscard]] double refractive_index(Wavelength wavelength, double temperature_c,
                                      const SellmeierCoefficients& medium,
                                      const DispersionCorrection& correction = {});

[[nodiscard]] double effective_index(Wavelength wavelength, const WaveguideSpec& wg);

/// Energy conservation: 1/l_out = 1/l_signal + 1/l_pump.
[[nodiscard]] Wavelength sfg_wavelength(Wavelength signal, Wavelength pump);

/// First-order QPM mismatch dk = 2 pi (n3/l3 - n1/l1 - n2/l2 - 1/period).
[[nodiscard]] PhaseMatchState qpm_mismatch(Wavelength signal, Wavelength pump,
                                           const WaveguideSpec& wg);

/// Signal wavelength phase matched to `pump` (bisection on dk, bracket
/// +-20 nm around a constant-SFG guess). Throws TuningError without a root.
[[nodiscard]] Wavelength phase_matched_signal(Wavelength pump, const WaveguideSpec& wg);

/// Inverse of phase_matched_signal.
[[nodiscard]] Wavelength phase_matched_pump(Wavelength signal, const WaveguideSpec& wg);

[[nodiscard]] AcceptanceBandwidth acceptance_bandwidth(const WaveguideSpec& wg, Wavelength pump);

/// Fits wg.correction so that each anchor is phase matched. The polynomial
/// degree is anchors - 1, capped at 2; more than three anchors are fit in
/// the least-squares sense. The existing correction is ignored, so
/// recalibrating with the same anchors is a fixed point.
[[nodiscard]] WaveguideSpec calibrate_operating_point(WaveguideSpec wg,
                                                      std::span<const TuningAnchor> anchors);

/// QPM period (um) phase matching (signal, pump) at `temperature_c` in the
/// medium of `wg`. Throws DesignError if the period is outside (5, 50) um.
[[nodiscard]] double design_qpm_period(Wavelength signal, Wavelength pump, double temperature_c,
                                       const WaveguideSpec& wg);

}  // namespace upconv
