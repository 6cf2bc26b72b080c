#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "upconv/spectrometer.hpp"
#include "upconv/units.hpp"

namespace upconv {

/// Hierarchical seed: a root seed plus a path of counters. Each path element
/// is folded in with SplitMix64, so the seed of scan point i depends only on
/// (root, i) and never on sampling order.
struct SeedPath {
  std::uint64_t root = 0;
  std::vector<std::uint64_t> path;

  [[nodiscard]] SeedPath child(std::uint64_t index) const;
  [[nodiscard]] std::uint64_t derive() const noexcept;
};

/// mt19937_64 with a portable double conversion (53-bit mantissa).
class CountingRng {
 public:
  explicit CountingRng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Poisson variate. Means below 30 use sequential inversion of the CDF;
/// larger means use Hormann's transformed rejection with squeeze (PTRS,
/// Insurance: Mathematics and Economics 12, 39 (1993)).
[[nodiscard]] std::uint64_t poisson_variate(double mean, CountingRng& rng);

struct CountSample {
  double expected_rate_cps = 0.0;
  double dwell_s = 0.0;
  std::uint64_t counts = 0;
  SeedPath seed_path;
};

/// Throws DomainError for a negative rate or non-positive dwell.
[[nodiscard]] CountSample sample_counts(double rate_cps, double dwell_s, const SeedPath& seed_path);

/// P / (h nu).
[[nodiscard]] double photon_rate(double power_w, Wavelength wavelength);

struct DetectionOptions {
  double resolution_nm = 0.161;
  double threshold_sigma = 5.0;
  double position_tolerance_factor = 2.0;  // in resolution elements
  std::optional<double> background_cps;    // estimated from the scan if absent
};

struct DetectionReport {
  double peak_found_nm = 0.0;
  double significance = 0.0;
  bool detected = false;
  double background_cps = 0.0;
  std::size_t window_points = 1;
  std::string note;
};

/// Boxcar-smooths the background-subtracted counts over one resolution
/// element and reports the strongest window. Significance is the window
/// excess over sqrt(background counts in the window). Never throws.
[[nodiscard]] DetectionReport detectability(const ScanResult& scan, double truth_peak_nm,
                                            const DetectionOptions& options = {});

}  // namespace upconv
