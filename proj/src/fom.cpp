#include "upconv/fom.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace upconv {

std::string_view to_string(NepConvention c) noexcept {
  return c == NepConvention::paper_sqrt_d ? "paper_sqrtD" : "shot_sqrt2D";
}

std::string_view to_string(PhotonEnergyConstant c) noexcept {
  return c == PhotonEnergyConstant::planck_h ? "h" : "hbar";
}

std::string_view to_string(NoiseLabel l) noexcept {
  return l == NoiseLabel::total_noise ? "total_noise" : "dark_only";
}

NepConvention nep_convention_from_string(std::string_view name) {
  if (name == "paper_sqrtD") return NepConvention::paper_sqrt_d;
  if (name == "shot_sqrt2D") return NepConvention::shot_sqrt_2d;
  throw DomainError("unknown NEP convention '" + std::string(name) + "'");
}

PhotonEnergyConstant photon_energy_from_string(std::string_view name) {
  if (name == "h") return PhotonEnergyConstant::planck_h;
  if (name == "hbar") return PhotonEnergyConstant::reduced_hbar;
  throw DomainError("unknown photon-energy constant '" + std::string(name) + "'");
}

NoiseLabel noise_label_from_string(std::string_view name) {
  if (name == "total_noise") return NoiseLabel::total_noise;
  if (name == "dark_only") return NoiseLabel::dark_only;
  throw DomainError("unknown noise label '" + std::string(name) + "'");
}

NepValue nep(const OperatingPoint& op, const NepOptions& options) {
  if (!(op.efficiency > 0.0)) {
    throw DomainError("NEP undefined for detection efficiency <= 0");
  }
  if (!(op.noise_cps >= 0.0)) {
    throw DomainError("NEP undefined for negative noise rate");
  }
  const Wavelength w(op.signal_nm);
  const double constant = options.energy == PhotonEnergyConstant::planck_h
                              ? constants::planck_h
                              : constants::reduced_planck;
  const double energy = constant * w.frequency_hz();
  const double rate = options.convention == NepConvention::paper_sqrt_d ? op.noise_cps
                                                                        : 2.0 * op.noise_cps;
  const double watts = energy * std::sqrt(rate) / op.efficiency;
  const double dbm = watts > 0.0 ? watts_to_dbm(watts) : -std::numeric_limits<double>::infinity();
  return {watts, dbm};
}

OperatingPoint operating_point(const ConversionModel& conversion, const NoiseModel& noise,
                               double pump_mw, double signal_nm) {
  return {detection_efficiency(conversion, pump_mw), noise_rate(noise, pump_mw), signal_nm,
          NoiseLabel::total_noise};
}

}  // namespace upconv
