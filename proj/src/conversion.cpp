#include "upconv/conversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace upconv {
namespace {

void require_nonnegative_power(double pump_mw) {
  if (!(pump_mw >= 0.0)) {
    throw DomainError("pump power must be >= 0 mW (got " + std::to_string(pump_mw) + ")");
  }
}

double sin2(double x) {
  const double s = std::sin(x);
  return s * s;
}

// Golden-section minimisation of a unimodal function on [lo, hi].
template <class F>
double golden_minimize(F&& f, double lo, double hi, int iterations = 200) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iterations && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

// Coarse scan then golden refinement in the best cell.
template <class F>
double scan_and_refine(F&& f, double lo, double hi, int cells) {
  double best_x = lo;
  double best_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= cells; ++i) {
    const double x = lo + (hi - lo) * i / cells;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  const double cell = (hi - lo) / cells;
  return golden_minimize(f, std::max(lo, best_x - cell), std::min(hi, best_x + cell));
}

template <class Model>
std::vector<FitResidual> residuals_of(std::span<const CalibrationPoint> points, Model&& model,
                                      double& max_abs) {
  std::vector<FitResidual> out;
  max_abs = 0.0;
  for (const auto& p : points) {
    const double m = model(p.pump_mw);
    out.push_back({p.pump_mw, p.value, m, p.value - m});
    max_abs = std::max(max_abs, std::abs(p.value - m));
  }
  return out;
}

std::size_t distinct_powers(std::span<const CalibrationPoint> points) {
  std::vector<double> powers;
  for (const auto& p : points) powers.push_back(p.pump_mw);
  std::sort(powers.begin(), powers.end());
  return static_cast<std::size_t>(std::unique(powers.begin(), powers.end()) - powers.begin());
}

}  // namespace

void PumpState::validate() const {
  if (!(power_mw >= 0.0 && power_mw <= source_max_power_mw)) {
    throw DomainError("pump power must lie in [0, source_max_power]");
  }
  (void)Wavelength(wavelength_nm);
}

double ConversionModel::full_conversion_power_mw() const {
  const double root = constants::pi / (2.0 * coupling_u);
  return root * root;
}

double detection_efficiency(const ConversionModel& model, double pump_mw) {
  require_nonnegative_power(pump_mw);
  return model.eta_max * sin2(model.coupling_u * std::sqrt(pump_mw));
}

double noise_rate(const NoiseModel& model, double pump_mw) {
  require_nonnegative_power(pump_mw);
  if (model.amplitude == 0.0) return model.floor_cps;
  return model.floor_cps + model.amplitude * std::pow(pump_mw, model.exponent);
}

ConversionFit fit_conversion(std::span<const CalibrationPoint> points) {
  if (points.size() < 2) {
    throw FitError("fit_conversion needs at least 2 points");
  }
  for (const auto& p : points) {
    if (!(p.pump_mw > 0.0)) throw DomainError("calibration pump power must be > 0 mW");
    if (!(p.value > 0.0 && p.value < 1.0)) {
      throw DomainError("calibration efficiency must lie in (0, 1)");
    }
  }
  if (distinct_powers(points) < 2) {
    throw FitError("rank-deficient conversion fit: pump powers are not distinct");
  }
  double p_max = 0.0;
  for (const auto& p : points) p_max = std::max(p_max, p.pump_mw);
  const double u_max = constants::pi / (2.0 * std::sqrt(p_max));

  ConversionFit fit;
  if (points.size() == 2) {
    const auto& lo = points[0].pump_mw < points[1].pump_mw ? points[0] : points[1];
    const auto& hi = points[0].pump_mw < points[1].pump_mw ? points[1] : points[0];
    const double target = hi.value / lo.value;
    const auto g = [&](double u) {
      return sin2(u * std::sqrt(hi.pump_mw)) / sin2(u * std::sqrt(lo.pump_mw)) - target;
    };
    double a = 1e-9 * u_max;
    double b = u_max;
    double g_a = g(a);
    const double g_b = g(b);
    if ((g_a < 0.0) == (g_b < 0.0)) {
      std::ostringstream os;
      os << "no sin^2-consistent coupling in u in (0, " << u_max << "] mW^-1/2: efficiency ratio "
         << target << " must lie in (" << (g_b + target) << ", " << (hi.pump_mw / lo.pump_mw)
         << ")";
      throw FitError(os.str());
    }
    for (int i = 0; i < 200 && b - a > 1e-17; ++i) {
      const double mid = 0.5 * (a + b);
      const double g_mid = g(mid);
      if ((g_mid < 0.0) == (g_a < 0.0)) {
        a = mid;
        g_a = g_mid;
      } else {
        b = mid;
      }
    }
    const double u = 0.5 * (a + b);
    fit.model = {hi.value / sin2(u * std::sqrt(hi.pump_mw)), u};
    fit.exact = true;
  } else {
    const auto best_eta = [&](double u) {
      double num = 0.0;
      double den = 0.0;
      for (const auto& p : points) {
        const double s = sin2(u * std::sqrt(p.pump_mw));
        num += p.value * s;
        den += s * s;
      }
      return num / den;
    };
    const auto sse = [&](double u) {
      const double eta = best_eta(u);
      double acc = 0.0;
      for (const auto& p : points) {
        const double r = p.value - eta * sin2(u * std::sqrt(p.pump_mw));
        acc += r * r;
      }
      return acc;
    };
    const double u = scan_and_refine(sse, 1e-6 * u_max, u_max, 4000);
    fit.model = {best_eta(u), u};
  }
  if (!(fit.model.eta_max > 0.0 && fit.model.eta_max <= 1.0)) {
    throw FitError("fitted eta_max " + std::to_string(fit.model.eta_max) + " outside (0, 1]");
  }
  fit.residuals = residuals_of(
      points, [&](double p) { return detection_efficiency(fit.model, p); }, fit.max_abs_residual);
  return fit;
}

NoiseFit fit_noise(std::span<const CalibrationPoint> points, double floor_cps) {
  if (points.size() < 2) {
    throw FitError("fit_noise needs at least 2 points");
  }
  if (!(floor_cps >= 0.0)) {
    throw DomainError("noise floor constraint must be >= 0 cps");
  }
  for (const auto& p : points) {
    if (!(p.value > 0.0)) throw DomainError("noise rates must be > 0 cps");
    if (!(p.pump_mw > 0.0)) throw DomainError("noise calibration pump power must be > 0 mW");
  }
  if (distinct_powers(points) < 2) {
    throw FitError("rank-deficient noise fit: pump powers are not distinct");
  }

  NoiseFit fit;
  const bool all_equal = std::all_of(points.begin(), points.end(),
                                     [&](const auto& p) { return p.value == points[0].value; });
  if (all_equal) {
    fit.model = {floor_cps, points[0].value - floor_cps, 0.0};
    fit.degenerate = true;
    fit.exact = true;
    fit.note = "constant rates: exponent pinned to 0";
    if (!(fit.model.amplitude >= 0.0)) {
      throw DomainError("noise rate below the floor constraint");
    }
  } else if (points.size() == 2) {
    const auto& lo = points[0].pump_mw < points[1].pump_mw ? points[0] : points[1];
    const auto& hi = points[0].pump_mw < points[1].pump_mw ? points[1] : points[0];
    const double r_lo = lo.value - floor_cps;
    const double r_hi = hi.value - floor_cps;
    if (!(r_lo > 0.0) || !(r_hi > 0.0)) {
      throw DomainError("noise rate minus floor (" + std::to_string(floor_cps) +
                        " cps) is not positive: additive-floor power law infeasible");
    }
    const double gamma = std::log(r_hi / r_lo) / std::log(hi.pump_mw / lo.pump_mw);
    fit.model = {floor_cps, r_lo / std::pow(lo.pump_mw, gamma), gamma};
    fit.exact = true;
    if (gamma < 0.0) fit.note = "negative exponent: noise decreases with pump power";
  } else {
    // For a fixed exponent the model is linear in (floor, amplitude).
    const auto solve_linear = [&](double gamma, double& d0, double& amp) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const auto n = static_cast<double>(points.size());
      for (const auto& p : points) {
        const double x = std::pow(p.pump_mw, gamma);
        sx += x;
        sy += p.value;
        sxx += x * x;
        sxy += x * p.value;
      }
      const double det = n * sxx - sx * sx;
      if (std::abs(det) > 1e-12 * n * sxx) {
        amp = (n * sxy - sx * sy) / det;
        d0 = (sy - amp * sx) / n;
      } else {
        amp = 0.0;
        d0 = sy / n;
      }
      if (d0 < floor_cps) {
        d0 = floor_cps;
        double num = 0.0;
        for (const auto& p : points) num += std::pow(p.pump_mw, gamma) * (p.value - d0);
        amp = num / sxx;
      }
      if (amp < 0.0) {
        amp = 0.0;
        d0 = std::max(floor_cps, sy / n);
      }
    };
    const auto sse = [&](double gamma) {
      double d0 = 0.0;
      double amp = 0.0;
      solve_linear(gamma, d0, amp);
      double acc = 0.0;
      for (const auto& p : points) {
        const double r = p.value - (d0 + amp * std::pow(p.pump_mw, gamma));
        acc += r * r;
      }
      return acc;
    };
    const double gamma = scan_and_refine(sse, 0.0, 6.0, 6000);
    double d0 = 0.0;
    double amp = 0.0;
    solve_linear(gamma, d0, amp);
    fit.model = {d0, amp, gamma};
  }

  fit.residuals = residuals_of(
      points, [&](double p) { return noise_rate(fit.model, p); }, fit.max_abs_residual);
  if (!fit.exact) {
    double scale = 0.0;
    for (const auto& p : points) scale = std::max(scale, p.value);
    fit.exact = fit.max_abs_residual <= 1e-9 * scale;
    if (!fit.exact) {
      std::ostringstream os;
      os << "no exact (floor >= " << floor_cps
         << ", amplitude, exponent) fit; least-squares max |residual| = " << fit.max_abs_residual
         << " cps";
      fit.note = os.str();
    }
  }
  return fit;
}

}  // namespace upconv
