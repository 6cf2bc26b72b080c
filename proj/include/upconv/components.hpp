#pragma once

#include <span>
#include <string>
#include <string_view>

#include "upconv/units.hpp"

namespace upconv {

enum class FilterKind { short_pass, band_pass, reflective_grating, broadband_loss };
enum class Lineshape { gaussian, top_hat };

[[nodiscard]] std::string_view to_string(FilterKind kind) noexcept;
[[nodiscard]] std::string_view to_string(Lineshape shape) noexcept;
/// Throws DomainError on an unknown name.
[[nodiscard]] FilterKind filter_kind_from_string(std::string_view name);
[[nodiscard]] Lineshape lineshape_from_string(std::string_view name);

/// Parametric filter in the upconverted-light path.
///
/// `center_nm` is the band center for band kinds and the cut-off edge for
/// short-pass filters. `peak` is the in-band transmission (or reflection, for
/// a grating). Short-pass edges roll off as an error function of width
/// `edge_width_nm`.
struct FilterElement {
  std::string name;
  FilterKind kind = FilterKind::broadband_loss;
  double center_nm = 0.0;
  double fwhm_nm = 0.0;
  double peak = 1.0;
  Lineshape lineshape = Lineshape::gaussian;
  double edge_width_nm = 1.0;

  void validate() const;

  static FilterElement short_pass(std::string name, double edge_nm, double peak = 1.0,
                                  double edge_width_nm = 1.0);
  static FilterElement band_pass(std::string name, double center_nm, double fwhm_nm,
                                 double peak = 1.0, Lineshape shape = Lineshape::gaussian);
  static FilterElement grating(std::string name, double center_nm, double fwhm_nm, double peak,
                               Lineshape shape = Lineshape::gaussian);
  static FilterElement loss(std::string name, double loss_db);
};

/// Angle-tuned volume Bragg grating: a reflective grating whose resonance
/// sits at `center_setpoint_nm`. Retuning yields a new value.
class VbgState {
 public:
  static constexpr double default_tuning_min_nm = 850.0;
  static constexpr double default_tuning_max_nm = 880.0;

  VbgState(FilterElement base, double center_setpoint_nm,
           double tuning_min_nm = default_tuning_min_nm,
           double tuning_max_nm = default_tuning_max_nm);

  /// 0.05 nm FWHM, 95 % peak reflection, gaussian.
  static VbgState nominal(double center_setpoint_nm);

  /// Throws RangeError if `center_nm` is outside the tuning range.
  [[nodiscard]] VbgState tuned_to(double center_nm) const;

  [[nodiscard]] const FilterElement& element() const noexcept { return element_; }
  [[nodiscard]] double center_nm() const noexcept { return element_.center_nm; }
  [[nodiscard]] double fwhm_nm() const noexcept { return element_.fwhm_nm; }
  [[nodiscard]] double peak() const noexcept { return element_.peak; }
  [[nodiscard]] double tuning_min_nm() const noexcept { return tuning_min_nm_; }
  [[nodiscard]] double tuning_max_nm() const noexcept { return tuning_max_nm_; }

 private:
  FilterElement element_;
  double tuning_min_nm_;
  double tuning_max_nm_;
};

struct ApdSpec {
  double dark_rate_cps = 25.0;
  double quantum_efficiency = 0.65;
  // Off by default; the modelled rates are far below saturation.
  double dead_time_s = 0.0;
  double afterpulse_probability = 0.0;

  void validate() const;
};

[[nodiscard]] double transmission(const FilterElement& filter, Wavelength wavelength) noexcept;
[[nodiscard]] double transmission(const VbgState& vbg, Wavelength wavelength) noexcept;

/// Product of element transmissions. Throws InputError on an empty chain.
[[nodiscard]] double chain_transmission(std::span<const FilterElement> chain, Wavelength wavelength);

}  // namespace upconv
