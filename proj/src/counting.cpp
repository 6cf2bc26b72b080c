#include "upconv/counting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "upconv/inverse.hpp"

namespace upconv {
namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t poisson_inversion(double mean, CountingRng& rng) {
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf && k < 1000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

std::uint64_t poisson_ptrs(double mean, CountingRng& rng) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) {
      return static_cast<std::uint64_t>(k);
    }
    if (k < 0.0 || (us < 0.013 && v > us)) {
      continue;
    }
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace

SeedPath SeedPath::child(std::uint64_t index) const {
  SeedPath out = *this;
  out.path.push_back(index);
  return out;
}

std::uint64_t SeedPath::derive() const noexcept {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t p : path) {
    h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  }
  return h;
}

std::uint64_t poisson_variate(double mean, CountingRng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw DomainError("Poisson mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  return mean < 30.0 ? poisson_inversion(mean, rng) : poisson_ptrs(mean, rng);
}

CountSample sample_counts(double rate_cps, double dwell_s, const SeedPath& seed_path) {
  if (!(rate_cps >= 0.0)) {
    throw DomainError("count rate must be >= 0 (got " + std::to_string(rate_cps) + ")");
  }
  if (!(dwell_s > 0.0)) {
    throw DomainError("dwell time must be > 0 s");
  }
  CountingRng rng(seed_path.derive());
  return {rate_cps, dwell_s, poisson_variate(rate_cps * dwell_s, rng), seed_path};
}

double photon_rate(double power_w, Wavelength wavelength) {
  if (!(power_w >= 0.0)) {
    throw DomainError("optical power must be >= 0 W");
  }
  return power_w / wavelength.photon_energy_j();
}

DetectionReport detectability(const ScanResult& scan, double truth_peak_nm,
                              const DetectionOptions& options) {
  DetectionReport report;
  const std::size_t n = scan.size();
  if (n == 0 || scan.mapped_signal_nm.size() != n || scan.counts.size() != n ||
      scan.dwell_s.size() != n) {
    report.note = "empty or inconsistent scan";
    return report;
  }
  if (options.background_cps) {
    report.background_cps = *options.background_cps;
  } else {
    try {
      report.background_cps = estimate_background(scan);
    } catch (const Error& e) {
      report.note = std::string("background estimation failed: ") + e.what();
      return report;
    }
  }

  // Points per resolution element from the median mapped-signal spacing.
  std::vector<double> spacing;
  for (std::size_t i = 1; i < n; ++i) {
    spacing.push_back(std::abs(scan.mapped_signal_nm[i] - scan.mapped_signal_nm[i - 1]));
  }
  std::size_t window = 1;
  if (!spacing.empty()) {
    std::nth_element(spacing.begin(), spacing.begin() + spacing.size() / 2, spacing.end());
    const double step = spacing[spacing.size() / 2];
    if (step > 0.0) {
      window = std::max<std::size_t>(1, static_cast<std::size_t>(
                                            std::lround(options.resolution_nm / step)));
    }
  }
  window = std::min(window, n);
  report.window_points = window;

  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_start = 0;
  for (std::size_t start = 0; start + window <= n; ++start) {
    double excess = 0.0;
    double background = 0.0;
    for (std::size_t i = start; i < start + window; ++i) {
      const double b = report.background_cps * scan.dwell_s[i];
      excess += static_cast<double>(scan.counts[i]) - b;
      background += b;
    }
    const double sigma = std::sqrt(std::max(background, 1.0));
    if (excess / sigma > best) {
      best = excess / sigma;
      best_start = start;
    }
  }
  const std::size_t lo = best_start;
  const std::size_t hi = best_start + window - 1;
  report.peak_found_nm = 0.5 * (scan.mapped_signal_nm[lo] + scan.mapped_signal_nm[hi]);
  report.significance = best;
  const bool close = std::abs(report.peak_found_nm - truth_peak_nm) <=
                     options.position_tolerance_factor * options.resolution_nm;
  report.detected = report.significance >= options.threshold_sigma && close;
  if (!close) report.note = "strongest window is away from the expected peak";
  return report;
}

}  // namespace upconv
