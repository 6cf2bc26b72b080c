#pragma once

#include <cmath>

#include "upconv/error.hpp"

namespace upconv {

namespace constants {
inline constexpr double planck_h = 6.62607015e-34;       // J s (exact, SI 2019)
inline constexpr double reduced_planck = 1.054571817e-34;  // J s
inline constexpr double speed_of_light = 299792458.0;      // m/s (exact)
inline constexpr double pi = 3.14159265358979323846;
}  // namespace constants

/// Vacuum wavelength of an optical field. Stored in nanometres; valid in the
/// open interval (100 nm, 20000 nm).
class Wavelength {
 public:
  static constexpr double min_nm = 100.0;
  static constexpr double max_nm = 20000.0;

  explicit Wavelength(double nm) : nm_(nm) {
    if (!(nm > min_nm && nm < max_nm)) {
      throw DomainError("wavelength " + std::to_string(nm) + " nm outside (100, 20000) nm");
    }
  }

  static Wavelength from_frequency(double hz) {
    return Wavelength(constants::speed_of_light / hz * 1e9);
  }

  [[nodiscard]] double nm() const noexcept { return nm_; }
  [[nodiscard]] double um() const noexcept { return nm_ * 1e-3; }
  [[nodiscard]] double m() const noexcept { return nm_ * 1e-9; }
  [[nodiscard]] double frequency_hz() const noexcept { return constants::speed_of_light / m(); }
  /// h*nu in joules.
  [[nodiscard]] double photon_energy_j() const noexcept {
    return constants::planck_h * frequency_hz();
  }

  friend bool operator==(const Wavelength&, const Wavelength&) = default;

 private:
  double nm_;
};

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

inline double watts_to_dbm(double watts) {
  if (!(watts > 0.0)) {
    throw DomainError("dBm undefined for non-positive power");
  }
  return 10.0 * std::log10(watts / 1e-3);
}

inline double db_to_linear_loss(double db) { return std::pow(10.0, -db / 10.0); }

}  // namespace upconv
