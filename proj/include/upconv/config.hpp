#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "upconv/components.hpp"
#include "upconv/conversion.hpp"
#include "upconv/counting.hpp"
#include "upconv/dispersion.hpp"
#include "upconv/fom.hpp"
#include "upconv/inverse.hpp"
#include "upconv/spectrometer.hpp"
#include "upconv/spectrum.hpp"

namespace upconv {

/// How the pump-on noise calibration points are read. `totals` treats them
/// as the whole count rate (floor 0); `additive_dark` holds the detector
/// dark rate as a fixed floor under the power law.
enum class NoiseFloorInterpretation { totals, additive_dark };

/// Where scan-time efficiency and noise come from: the explicit spectrometer
/// operating point, or the conversion/noise fits evaluated at the plan's
/// pump power.
enum class RateSource { operating_point, calibration_fit };

[[nodiscard]] std::string_view to_string(NoiseFloorInterpretation v) noexcept;
[[nodiscard]] std::string_view to_string(RateSource v) noexcept;

struct SpectrometerOperatingPoint {
  double pump_mw = 30.0;
  double efficiency = 0.20;
  double noise_cps = 60.0;
  double signal_nm = 1550.0;
};

struct SourceConfig {
  ModeComb comb{1550.0, 0.5, 5, 0.2, 1.5, 0.0};
  double comb_power_dbm = -98.9;
  double line_center_nm = 1550.0;
  double line_fwhm_nm = 0.02;
  double line_power_dbm = -135.0;
};

struct ExperimentConfig {
  WaveguideSpec waveguide;  // correction is filled by calibration
  std::string anchor_set = "single";
  std::map<std::string, std::vector<TuningAnchor>> anchor_sets{
      {"single", {{1950.0, 1550.0}}},
      {"three", {{1920.0, 1570.9}, {1950.0, 1550.0}, {1980.0, 1532.9}}},
  };
  std::vector<FilterElement> filters{
      FilterElement::short_pass("dichroic", 1200.0, 1.0, 1.0),
      FilterElement::short_pass("spf945", 945.0, 1.0, 1.0),
      FilterElement::band_pass("bpf857", 857.0, 20.0, 1.0),
  };
  FilterElement vbg = VbgState::nominal(863.5714285714286).element();
  double vbg_tuning_min_nm = VbgState::default_tuning_min_nm;
  double vbg_tuning_max_nm = VbgState::default_tuning_max_nm;
  ApdSpec detector;

  std::vector<CalibrationPoint> conversion_points{{20.0, 0.15}, {58.0, 0.286}};
  std::vector<CalibrationPoint> noise_points{{20.0, 25.0}, {58.0, 100.0}};
  NoiseFloorInterpretation noise_floor = NoiseFloorInterpretation::totals;
  double max_pump_mw = 800.0;  // pump source ceiling; bounds configured powers

  SpectrometerOperatingPoint operating_point;
  RateSource rate_source = RateSource::operating_point;
  NepOptions nep;
  NoiseLabel noise_label = NoiseLabel::total_noise;

  ScanPlan scan;
  KernelMode kernel_mode = KernelMode::full;
  double signal_step_nm = 0.02;
  double signal_margin_nm = 1.0;

  DeconvolutionAlgorithm algorithm = DeconvolutionAlgorithm::richardson_lucy;
  int max_iterations = 500;
  bool auto_discrepancy = true;
  double stagnation_tolerance = 1e-12;
  double tikhonov_alpha = 1e-6;

  double detection_threshold_sigma = 5.0;
  double detection_tolerance_factor = 2.0;

  SourceConfig source;
  unsigned threads = 0;
};

/// Full serialization; every field is written.
[[nodiscard]] nlohmann::json to_json(const ExperimentConfig& config);

/// Overlays `j` on the built-in defaults. Unknown keys, wrong types and
/// values violating a module invariant throw ConfigError naming the field.
[[nodiscard]] ExperimentConfig config_from_json(const nlohmann::json& j);

/// Reads and validates a JSON config file (ConfigError on any failure).
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks every module invariant; throws ConfigError with the field path.
void validate(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical JSON dump (thread count excluded), as 16 hex
/// digits.
[[nodiscard]] std::string config_hash(const ExperimentConfig& config);

/// Waveguide with the selected anchor set applied.
[[nodiscard]] WaveguideSpec calibrated_waveguide(const ExperimentConfig& config);

/// Calibrated waveguide, filter stack and grating.
[[nodiscard]] Instrument make_instrument(const ExperimentConfig& config);

[[nodiscard]] ConversionFit conversion_fit(const ExperimentConfig& config);
[[nodiscard]] NoiseFit noise_fit(const ExperimentConfig& config);

/// Efficiency and noise rate used for scans, per `rate_source`.
struct ScanRates {
  double efficiency;
  double noise_cps;
};
[[nodiscard]] ScanRates scan_rates(const ExperimentConfig& config);

[[nodiscard]] DeconvolutionOptions deconvolution_options(const ExperimentConfig& config);

}  // namespace upconv
