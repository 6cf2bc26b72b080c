#include "upconv/components.hpp"

#include <cmath>
#include <utility>

namespace upconv {
namespace {

constexpr double kFourLn2 = 2.772588722239781;  // 4 ln 2

double band_shape(Lineshape shape, double detuning_nm, double fwhm_nm) noexcept {
  switch (shape) {
    case Lineshape::gaussian: {
      const double x = detuning_nm / fwhm_nm;
      return std::exp(-kFourLn2 * x * x);
    }
    case Lineshape::top_hat: {
      const double half = 0.5 * fwhm_nm;
      const double d = std::abs(detuning_nm);
      if (d < half) return 1.0;
      if (d == half) return 0.5;
      return 0.0;
    }
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(FilterKind kind) noexcept {
  switch (kind) {
    case FilterKind::short_pass: return "short_pass";
    case FilterKind::band_pass: return "band_pass";
    case FilterKind::reflective_grating: return "reflective_grating";
    case FilterKind::broadband_loss: return "broadband_loss";
  }
  return "unknown";
}

std::string_view to_string(Lineshape shape) noexcept {
  return shape == Lineshape::gaussian ? "gaussian" : "top_hat";
}

FilterKind filter_kind_from_string(std::string_view name) {
  for (auto k : {FilterKind::short_pass, FilterKind::band_pass, FilterKind::reflective_grating,
                 FilterKind::broadband_loss}) {
    if (to_string(k) == name) return k;
  }
  throw DomainError("unknown filter kind '" + std::string(name) + "'");
}

Lineshape lineshape_from_string(std::string_view name) {
  if (name == "gaussian") return Lineshape::gaussian;
  if (name == "top_hat") return Lineshape::top_hat;
  throw DomainError("unknown lineshape '" + std::string(name) + "'");
}

void FilterElement::validate() const {
  if (!(peak >= 0.0 && peak <= 1.0)) {
    throw DomainError("filter '" + name + "': peak must be in [0, 1]");
  }
  switch (kind) {
    case FilterKind::band_pass:
    case FilterKind::reflective_grating:
      if (!(fwhm_nm > 0.0)) throw DomainError("filter '" + name + "': fwhm must be > 0");
      if (!(center_nm > 0.0)) throw DomainError("filter '" + name + "': center must be > 0");
      break;
    case FilterKind::short_pass:
      if (!(edge_width_nm > 0.0)) throw DomainError("filter '" + name + "': edge width must be > 0");
      if (!(center_nm > 0.0)) throw DomainError("filter '" + name + "': edge must be > 0");
      break;
    case FilterKind::broadband_loss:
      break;
  }
}

FilterElement FilterElement::short_pass(std::string name, double edge_nm, double peak,
                                        double edge_width_nm) {
  FilterElement f{std::move(name), FilterKind::short_pass, edge_nm, 0.0, peak,
                  Lineshape::gaussian, edge_width_nm};
  f.validate();
  return f;
}

FilterElement FilterElement::band_pass(std::string name, double center_nm, double fwhm_nm,
                                       double peak, Lineshape shape) {
  FilterElement f{std::move(name), FilterKind::band_pass, center_nm, fwhm_nm, peak, shape, 1.0};
  f.validate();
  return f;
}

FilterElement FilterElement::grating(std::string name, double center_nm, double fwhm_nm,
                                     double peak, Lineshape shape) {
  FilterElement f{std::move(name), FilterKind::reflective_grating, center_nm, fwhm_nm, peak, shape,
                  1.0};
  f.validate();
  return f;
}

FilterElement FilterElement::loss(std::string name, double loss_db) {
  if (!(loss_db >= 0.0)) throw DomainError("filter '" + name + "': loss must be >= 0 dB");
  FilterElement f{std::move(name), FilterKind::broadband_loss, 0.0, 0.0,
                  db_to_linear_loss(loss_db), Lineshape::gaussian, 1.0};
  return f;
}

VbgState::VbgState(FilterElement base, double center_setpoint_nm, double tuning_min_nm,
                   double tuning_max_nm)
    : element_(std::move(base)), tuning_min_nm_(tuning_min_nm), tuning_max_nm_(tuning_max_nm) {
  if (element_.kind != FilterKind::reflective_grating) {
    throw DomainError("VBG base element must be a reflective_grating");
  }
  if (!(tuning_min_nm_ < tuning_max_nm_)) {
    throw DomainError("VBG tuning range is empty");
  }
  element_.validate();
  if (center_setpoint_nm < tuning_min_nm_ || center_setpoint_nm > tuning_max_nm_) {
    throw RangeError("VBG setpoint " + std::to_string(center_setpoint_nm) +
                     " nm outside tuning range [" + std::to_string(tuning_min_nm_) + ", " +
                     std::to_string(tuning_max_nm_) + "] nm");
  }
  element_.center_nm = center_setpoint_nm;
}

VbgState VbgState::nominal(double center_setpoint_nm) {
  return VbgState(FilterElement::grating("vbg", center_setpoint_nm, 0.05, 0.95),
                  center_setpoint_nm);
}

VbgState VbgState::tuned_to(double center_nm) const {
  return VbgState(element_, center_nm, tuning_min_nm_, tuning_max_nm_);
}

void ApdSpec::validate() const {
  if (!(dark_rate_cps >= 0.0)) throw DomainError("APD dark rate must be >= 0");
  if (!(quantum_efficiency >= 0.0 && quantum_efficiency <= 1.0)) {
    throw DomainError("APD quantum efficiency must be in [0, 1]");
  }
  if (!(dead_time_s >= 0.0) || !(afterpulse_probability >= 0.0 && afterpulse_probability < 1.0)) {
    throw DomainError("APD dead time / afterpulsing out of range");
  }
}

double transmission(const FilterElement& filter, Wavelength wavelength) noexcept {
  const double nm = wavelength.nm();
  switch (filter.kind) {
    case FilterKind::short_pass:
      return filter.peak * 0.5 * std::erfc((nm - filter.center_nm) / filter.edge_width_nm);
    case FilterKind::band_pass:
    case FilterKind::reflective_grating:
      return filter.peak * band_shape(filter.lineshape, nm - filter.center_nm, filter.fwhm_nm);
    case FilterKind::broadband_loss:
      return filter.peak;
  }
  return 0.0;
}

double transmission(const VbgState& vbg, Wavelength wavelength) noexcept {
  return transmission(vbg.element(), wavelength);
}

double chain_transmission(std::span<const FilterElement> chain, Wavelength wavelength) {
  if (chain.empty()) {
    throw InputError("chain_transmission requires a nonempty chain");
  }
  double t = 1.0;
  for (const auto& f : chain) t *= transmission(f, wavelength);
  return t;
}

}  // namespace upconv
