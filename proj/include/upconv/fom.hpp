#pragma once

#include <string_view>

#include "upconv/conversion.hpp"
#include "upconv/units.hpp"

namespace upconv {

enum class NepConvention {
  paper_sqrt_d,  // h nu sqrt(D) / eta
  shot_sqrt_2d,  // h nu sqrt(2 D) / eta
};

/// Which constant multiplies nu. The printed formula uses hbar, which puts
/// the result ~8 dB below the quoted -142 dBm; h is the default.
enum class PhotonEnergyConstant { planck_h, reduced_hbar };

/// Whether D is the total pump-on noise or the detector dark rate alone.
/// Carried through to reports only; it does not change the arithmetic.
enum class NoiseLabel { total_noise, dark_only };

[[nodiscard]] std::string_view to_string(NepConvention c) noexcept;
[[nodiscard]] std::string_view to_string(PhotonEnergyConstant c) noexcept;
[[nodiscard]] std::string_view to_string(NoiseLabel l) noexcept;
[[nodiscard]] NepConvention nep_convention_from_string(std::string_view name);
[[nodiscard]] PhotonEnergyConstant photon_energy_from_string(std::string_view name);
[[nodiscard]] NoiseLabel noise_label_from_string(std::string_view name);

struct OperatingPoint {
  double efficiency = 0.0;
  double noise_cps = 0.0;
  double signal_nm = 1550.0;
  NoiseLabel noise_label = NoiseLabel::total_noise;
};

struct NepOptions {
  NepConvention convention = NepConvention::paper_sqrt_d;
  PhotonEnergyConstant energy = PhotonEnergyConstant::planck_h;
};

struct NepValue {
  double watts;
  /// -infinity for a noiseless detector.
  double dbm;
};

/// Throws DomainError when efficiency <= 0 or noise < 0.
[[nodiscard]] NepValue nep(const OperatingPoint& op, const NepOptions& options = {});

[[nodiscard]] OperatingPoint operating_point(const ConversionModel& conversion,
                                             const NoiseModel& noise, double pump_mw,
                                             double signal_nm);

}  // namespace upconv
