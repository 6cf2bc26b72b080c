#include "upconv/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace upconv {
namespace {

constexpr double kTwoPi = 2.0 * constants::pi;
constexpr double kSignalBracketNm = 20.0;
constexpr double kPumpBracketNm = 40.0;
constexpr double kDeltaKTolerance = 1e-9;  // rad/um

std::string format_nm(double nm) {
  std::ostringstream os;
  os.precision(10);
  os << nm << " nm";
  return os.str();
}

// k / 2 pi in rad-free units of 1/um.
double wavenumber_per_um(Wavelength w, const WaveguideSpec& wg) {
  return effective_index(w, wg) / w.um();
}

double bulk_mismatch(Wavelength signal, Wavelength pump, const WaveguideSpec& wg) {
  const Wavelength out = sfg_wavelength(signal, pump);
  const auto k = [&](Wavelength w) {
    return refractive_index(w, wg.temperature_c, wg.medium) / w.um();
  };
  return kTwoPi * (k(out) - k(signal) - k(pump) - 1.0 / wg.qpm_period_um);
}

// Bisection for f(x) = 0 on [lo, hi] with f(lo), f(hi) of opposite sign.
template <class F>
double bisect(F&& f, double lo, double hi, double f_lo) {
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (f_mid == 0.0 || hi - lo < 1e-13) {
      return mid;
    }
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Solves dk(x) = 0 where x is the free wavelength, bracketed at guess +- half_width.
template <class F>
double solve_tuning(F&& delta_k, double guess, double half_width, const char* what) {
  const double lo = guess - half_width;
  const double hi = guess + half_width;
  const double f_lo = delta_k(lo);
  const double f_hi = delta_k(hi);
  if ((f_lo < 0.0) == (f_hi < 0.0)) {
    throw TuningError(std::string("no phase-matched ") + what + " in [" + format_nm(lo) + ", " +
                      format_nm(hi) + "]");
  }
  const double root = bisect(delta_k, lo, hi, f_lo);
  if (std::abs(delta_k(root)) >= kDeltaKTolerance) {
    throw TuningError(std::string("bisection for ") + what + " did not reach |dk| < 1e-9 rad/um");
  }
  return root;
}

}  // namespace

SellmeierCoefficients SellmeierCoefficients::congruent_lithium_niobate() {
  SellmeierCoefficients c;
  c.a = {5.35583, 0.100473, 0.20692, 100.0, 11.34927, 1.5334e-2};
  c.b = {4.629e-7, 3.862e-8, -0.89e-8, 2.657e-5};
  c.t_ref_c = 24.5;
  c.t_offset_c = 570.82;
  c.valid_min_nm = 400.0;
  c.valid_max_nm = 5000.0;
  return c;
}

double DispersionCorrection::offset_per_um(double wavelength_um) const noexcept {
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
    acc = acc * wavelength_um + *it;
  }
  return acc;
}

void WaveguideSpec::validate() const {
  if (!(length_mm > 0.0)) throw DomainError("waveguide length must be > 0");
  if (!(qpm_period_um > 0.0)) throw DomainError("QPM period must be > 0");
  if (!(pigtail_loss_db >= 0.0) || !(facet_throughput_loss_db >= 0.0)) {
    throw DomainError("waveguide losses must be >= 0 dB");
  }
  if (!(medium.valid_min_nm < medium.valid_max_nm)) {
    throw DomainError("Sellmeier validity window is empty");
  }
}

double sinc_squared(double x) noexcept {
  if (std::abs(x) < 1e-8) {
    return 1.0 - x * x / 3.0;
  }
  const double s = std::sin(x) / x;
  return s * s;
}

double refractive_index(Wavelength wavelength, double temperature_c,
                        const SellmeierCoefficients& m, const DispersionCorrection& correction) {
  const double nm = wavelength.nm();
  if (nm < m.valid_min_nm || nm > m.valid_max_nm) {
    throw DomainError("wavelength " + format_nm(nm) + " outside Sellmeier validity window [" +
                      format_nm(m.valid_min_nm) + ", " + format_nm(m.valid_max_nm) + "]");
  }
  const double l = wavelength.um();
  const double l2 = l * l;
  const double f = (temperature_c - m.t_ref_c) * (temperature_c + m.t_offset_c);
  const double uv_pole = m.a[2] + m.b[2] * f;
  const double n2 = m.a[0] + m.b[0] * f + (m.a[1] + m.b[1] * f) / (l2 - uv_pole * uv_pole) +
                    (m.a[3] + m.b[3] * f) / (l2 - m.a[4] * m.a[4]) - m.a[5] * l2;
  return std::sqrt(n2) + l * correction.offset_per_um(l);
}

double effective_index(Wavelength wavelength, const WaveguideSpec& wg) {
  return refractive_index(wavelength, wg.temperature_c, wg.medium, wg.correction);
}

Wavelength sfg_wavelength(Wavelength signal, Wavelength pump) {
  // Product form keeps 1/l_out = 1/l_s + 1/l_p to the last ulp or so.
  return Wavelength(signal.nm() * pump.nm() / (signal.nm() + pump.nm()));
}

PhaseMatchState qpm_mismatch(Wavelength signal, Wavelength pump, const WaveguideSpec& wg) {
  const Wavelength out = sfg_wavelength(signal, pump);
  const double dk = kTwoPi * (wavenumber_per_um(out, wg) - wavenumber_per_um(signal, wg) -
                              wavenumber_per_um(pump, wg) - 1.0 / wg.qpm_period_um);
  return {dk, sinc_squared(0.5 * dk * wg.length_um())};
}

Wavelength phase_matched_signal(Wavelength pump, const WaveguideSpec& wg) {
  const double nominal_sfg = wg.nominal_signal_nm * wg.nominal_pump_nm /
                             (wg.nominal_signal_nm + wg.nominal_pump_nm);
  const double guess = 1.0 / (1.0 / nominal_sfg - 1.0 / pump.nm());
  const auto dk = [&](double signal_nm) {
    return qpm_mismatch(Wavelength(signal_nm), pump, wg).delta_k_rad_per_um;
  };
  return Wavelength(solve_tuning(dk, guess, kSignalBracketNm, "signal"));
}

Wavelength phase_matched_pump(Wavelength signal, const WaveguideSpec& wg) {
  const double nominal_sfg = wg.nominal_signal_nm * wg.nominal_pump_nm /
                             (wg.nominal_signal_nm + wg.nominal_pump_nm);
  const double guess = 1.0 / (1.0 / nominal_sfg - 1.0 / signal.nm());
  const auto dk = [&](double pump_nm) {
    return qpm_mismatch(signal, Wavelength(pump_nm), wg).delta_k_rad_per_um;
  };
  return Wavelength(solve_tuning(dk, guess, kPumpBracketNm, "pump"));
}

AcceptanceBandwidth acceptance_bandwidth(const WaveguideSpec& wg, Wavelength pump) {
  const Wavelength center = phase_matched_signal(pump, wg);
  const auto excess = [&](double signal_nm) {
    return qpm_mismatch(Wavelength(signal_nm), pump, wg).efficiency_factor - 0.5;
  };
  // Walk out from the peak until the lineshape drops through half maximum,
  // then bisect inside the last step.
  const auto crossing = [&](double direction) {
    constexpr double step = 0.01;
    double inner = center.nm();
    for (int i = 0; i < 5000; ++i) {
      const double outer = inner + direction * step;
      if (excess(outer) < 0.0) {
        return bisect(excess, std::min(inner, outer), std::max(inner, outer),
                      excess(std::min(inner, outer)));
      }
      inner = outer;
    }
    throw TuningError("half-maximum crossing not found within 50 nm of " + format_nm(center.nm()));
  };
  const double fwhm = crossing(+1.0) - crossing(-1.0);
  const Wavelength sfg = sfg_wavelength(center, pump);
  const double ratio = sfg.nm() / center.nm();
  return {fwhm, fwhm * ratio * ratio, center.nm(), sfg.nm()};
}

WaveguideSpec calibrate_operating_point(WaveguideSpec wg, std::span<const TuningAnchor> anchors) {
  if (anchors.empty()) {
    throw CalibrationError("calibration needs at least one anchor");
  }
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    for (std::size_t j = i + 1; j < anchors.size(); ++j) {
      if (anchors[i].pump_nm == anchors[j].pump_nm) {
        throw CalibrationError("duplicate anchor pump wavelength " + format_nm(anchors[i].pump_nm) +
                               ": singular fit");
      }
    }
  }
  const std::size_t terms = std::min<std::size_t>(anchors.size(), 3);

  // Row i: 2 pi sum_e c_e (l3^e - ls^e - lp^e) = -dk_bulk_i
  std::vector<std::vector<double>> design(anchors.size(), std::vector<double>(terms));
  std::vector<double> rhs(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Wavelength s(anchors[i].signal_nm);
    const Wavelength p(anchors[i].pump_nm);
    const Wavelength out = sfg_wavelength(s, p);
    for (std::size_t e = 0; e < terms; ++e) {
      const auto pe = static_cast<double>(e);
      design[i][e] = kTwoPi * (std::pow(out.um(), pe) - std::pow(s.um(), pe) - std::pow(p.um(), pe));
    }
    rhs[i] = -bulk_mismatch(s, p, wg);
  }

  // Normal equations (identical to the square system when anchors <= 3).
  std::vector<std::vector<double>> m(terms, std::vector<double>(terms + 1, 0.0));
  for (std::size_t r = 0; r < terms; ++r) {
    for (std::size_t c = 0; c < terms; ++c) {
      for (std::size_t i = 0; i < anchors.size(); ++i) m[r][c] += design[i][r] * design[i][c];
    }
    for (std::size_t i = 0; i < anchors.size(); ++i) m[r][terms] += design[i][r] * rhs[i];
  }
  if (anchors.size() == terms) {
    // Square case: solve the anchor rows directly for better conditioning.
    for (std::size_t r = 0; r < terms; ++r) {
      for (std::size_t c = 0; c < terms; ++c) m[r][c] = design[r][c];
      m[r][terms] = rhs[r];
    }
  }

  double scale = 0.0;
  for (const auto& row : m) {
    for (std::size_t c = 0; c < terms; ++c) scale = std::max(scale, std::abs(row[c]));
  }
  for (std::size_t col = 0; col < terms; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < terms; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) <= 1e-14 * scale) {
      throw CalibrationError("singular calibration system (anchors not independent)");
    }
    std::swap(m[pivot], m[col]);
    for (std::size_t r = col + 1; r < terms; ++r) {
      const double factor = m[r][col] / m[col][col];
      for (std::size_t c = col; c <= terms; ++c) m[r][c] -= factor * m[col][c];
    }
  }
  std::vector<double> coeffs(terms);
  for (std::size_t r = terms; r-- > 0;) {
    double acc = m[r][terms];
    for (std::size_t c = r + 1; c < terms; ++c) acc -= m[r][c] * coeffs[c];
    coeffs[r] = acc / m[r][r];
  }

  wg.correction.coefficients = std::move(coeffs);
  if (anchors.size() <= 3) {
    for (const auto& a : anchors) {
      const double dk =
          qpm_mismatch(Wavelength(a.signal_nm), Wavelength(a.pump_nm), wg).delta_k_rad_per_um;
      if (std::abs(dk) >= kDeltaKTolerance) {
        throw CalibrationError("calibration residual at anchor pump " + format_nm(a.pump_nm) +
                               " exceeds 1e-9 rad/um");
      }
    }
  }
  return wg;
}

double design_qpm_period(Wavelength signal, Wavelength pump, double temperature_c,
                         const WaveguideSpec& wg) {
  WaveguideSpec at_temp = wg;
  at_temp.temperature_c = temperature_c;
  const Wavelength out = sfg_wavelength(signal, pump);
  const double inverse_period = wavenumber_per_um(out, at_temp) -
                                wavenumber_per_um(signal, at_temp) -
                                wavenumber_per_um(pump, at_temp);
  const double period = 1.0 / inverse_period;
  if (!(period > 5.0 && period < 50.0)) {
    throw DesignError("no first-order QPM period in (5, 50) um for signal " +
                      format_nm(signal.nm()) + ", pump " + format_nm(pump.nm()));
  }
  return period;
}

}  // namespace upconv
