// Command-line front end: QPM design, figures of merit, forward scans and
// deconvolution driven by one JSON experiment config.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "upconv/config.hpp"
#include "upconv/counting.hpp"
#include "upconv/error.hpp"
#include "upconv/fom.hpp"
#include "upconv/inverse.hpp"
#include "upconv/io.hpp"
#include "upconv/spectrometer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace upconv;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string report_path;
};

// Scan-plan flags shared by kernel, scan and resolution.
struct PlanFlags {
  std::optional<double> start, stop, step, dwell, pump_power;
  std::optional<std::string> tracking, kernel_mode, anchors;
};

void add_plan_flags(CLI::App* cmd, PlanFlags& f) {
  cmd->add_option("--start", f.start, "first pump wavelength (nm)");
  cmd->add_option("--stop", f.stop, "last pump wavelength (nm)");
  cmd->add_option("--step", f.step, "pump step (nm)");
  cmd->add_option("--dwell", f.dwell, "dwell per scan point (s)");
  cmd->add_option("--pump-power", f.pump_power, "pump power (mW)");
  cmd->add_option("--tracking", f.tracking, "grating tracking: tracked | fixed");
  cmd->add_option("--kernel-mode", f.kernel_mode, "kernel: full | vbg_only");
  cmd->add_option("--anchors", f.anchors, "calibration anchor set name (e.g. single, three)");
}

struct Context {
  ExperimentConfig cfg;
  std::string hash;
};

// Applies a flag-level override, turning invariant violations into usage
// errors (the file itself was already validated).
template <class F>
void override_value(const char* flag, F&& apply) {
  try {
    apply();
  } catch (const Error& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

Context make_context(const Globals& g, const PlanFlags* plan) {
  Context ctx;
  ctx.cfg = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  auto& c = ctx.cfg;
  if (g.seed) c.scan.seed = *g.seed;
  if (g.threads) c.threads = *g.threads;
  if (plan) {
    if (plan->start) c.scan.pump_start_nm = *plan->start;
    if (plan->stop) c.scan.pump_stop_nm = *plan->stop;
    if (plan->step) c.scan.pump_step_nm = *plan->step;
    if (plan->dwell) c.scan.dwell_s = *plan->dwell;
    if (plan->pump_power) c.scan.pump_power_mw = *plan->pump_power;
    if (plan->tracking) {
      override_value("--tracking", [&] { c.scan.tracking = vbg_tracking_from_string(*plan->tracking); });
    }
    if (plan->kernel_mode) {
      override_value("--kernel-mode",
                     [&] { c.kernel_mode = kernel_mode_from_string(*plan->kernel_mode); });
    }
    if (plan->anchors) c.anchor_set = *plan->anchors;
  }
  try {
    validate(c);
  } catch (const ConfigError& e) {
    throw UsageError(std::string("invalid option value: ") + e.what());
  }
  ctx.hash = config_hash(c);
  return ctx;
}

FileHeader file_header(const Context& ctx, const std::string& command) {
  FileHeader h;
  h.add("generator", std::string("upconv ") + kVersion);
  h.add("command", command);
  h.add("config_hash", ctx.hash);
  h.add("seed", std::to_string(ctx.cfg.scan.seed));
  return h;
}

json report_base(const Context& ctx, const std::string& command) {
  return {{"command", command},
          {"generator", std::string("upconv ") + kVersion},
          {"config_hash", ctx.hash},
          {"seed", ctx.cfg.scan.seed}};
}

void emit_report(const Globals& g, const json& report, const std::optional<fs::path>& beside) {
  if (!g.report_path.empty()) {
    write_json(g.report_path, report);
  } else if (beside) {
    write_json(report_path_for(*beside), report);
  }
}

json anchors_json(const ExperimentConfig& c) {
  json out = json::array();
  for (const auto& a : c.anchor_sets.at(c.anchor_set)) {
    out.push_back({{"pump_nm", a.pump_nm}, {"signal_nm", a.signal_nm}});
  }
  return out;
}

json residuals_json(const std::vector<FitResidual>& residuals) {
  json out = json::array();
  for (const auto& r : residuals) {
    out.push_back({{"pump_mw", r.pump_mw},
                   {"measured", r.measured},
                   {"model", r.model},
                   {"residual", r.residual}});
  }
  return out;
}

// design-qpm ---------------------------------------------------------------

struct DesignFlags {
  double pump = 1950.0;
  double signal = 1550.0;
  std::optional<double> temp;
};

int run_design(const Globals& g, const DesignFlags& f) {
  const Context ctx = make_context(g, nullptr);
  WaveguideSpec wg = calibrated_waveguide(ctx.cfg);
  if (f.temp) wg.temperature_c = *f.temp;
  const Wavelength pump(f.pump);
  const Wavelength signal(f.signal);
  const double period = design_qpm_period(signal, pump, wg.temperature_c, wg);
  wg.qpm_period_um = period;
  const auto mismatch = qpm_mismatch(signal, pump, wg);
  const auto band = acceptance_bandwidth(wg, pump);
  const double sfg = sfg_wavelength(signal, pump).nm();
  const double vbg = ctx.cfg.vbg.fwhm_nm;

  std::printf("QPM design (anchor set '%s', %.6g C)\n", ctx.cfg.anchor_set.c_str(),
              wg.temperature_c);
  std::printf("  pump                      %.4f nm\n", f.pump);
  std::printf("  signal                    %.4f nm\n", f.signal);
  std::printf("  sfg                       %.4f nm\n", sfg);
  std::printf("  period                    %.6f um\n", period);
  std::printf("  residual dk               %.3e rad/um\n", mismatch.delta_k_rad_per_um);
  std::printf("  acceptance FWHM (signal)  %.4f nm  (%.2f x grating FWHM)\n", band.signal_fwhm_nm,
              band.signal_fwhm_nm / vbg);
  std::printf("  acceptance FWHM (sfg)     %.4f nm  (%.2f x grating FWHM)\n", band.sfg_fwhm_nm,
              band.sfg_fwhm_nm / vbg);

  json r = report_base(ctx, "design-qpm");
  r["pump_nm"] = f.pump;
  r["signal_nm"] = f.signal;
  r["temperature_c"] = wg.temperature_c;
  r["sfg_nm"] = sfg;
  r["qpm_period_um"] = period;
  r["residual_delta_k_rad_per_um"] = mismatch.delta_k_rad_per_um;
  r["acceptance_fwhm_signal_nm"] = band.signal_fwhm_nm;
  r["acceptance_fwhm_sfg_nm"] = band.sfg_fwhm_nm;
  r["vbg_fwhm_nm"] = vbg;
  r["anchor_set"] = ctx.cfg.anchor_set;
  r["anchors"] = anchors_json(ctx.cfg);
  r["dispersion_correction"] = wg.correction.coefficients;
  emit_report(g, r, std::nullopt);
  return 0;
}

// fom ----------------------------------------------------------------------

struct FomFlags {
  double pump_power = 0.0;
  std::optional<std::string> convention, energy, label, floor;
  std::optional<std::string> conversion_points, noise_points;
  std::optional<double> signal;
};

void apply_nep_flags(ExperimentConfig& c, const std::optional<std::string>& convention,
                     const std::optional<std::string>& energy,
                     const std::optional<std::string>& label) {
  if (convention) {
    override_value("--nep-convention",
                   [&] { c.nep.convention = nep_convention_from_string(*convention); });
  }
  if (energy) {
    override_value("--photon-energy", [&] { c.nep.energy = photon_energy_from_string(*energy); });
  }
  if (label) {
    override_value("--noise-label", [&] { c.noise_label = noise_label_from_string(*label); });
  }
}

int run_fom(const Globals& g, const FomFlags& f) {
  Context ctx = make_context(g, nullptr);
  auto& c = ctx.cfg;
  apply_nep_flags(c, f.convention, f.energy, f.label);
  if (f.floor) {
    if (*f.floor == "totals") {
      c.noise_floor = NoiseFloorInterpretation::totals;
    } else if (*f.floor == "additive_dark") {
      c.noise_floor = NoiseFloorInterpretation::additive_dark;
    } else {
      throw UsageError("--floor: expected 'totals' or 'additive_dark'");
    }
  }
  if (f.conversion_points) c.conversion_points = read_points(fs::path(*f.conversion_points));
  if (f.noise_points) c.noise_points = read_points(fs::path(*f.noise_points));
  if (f.signal) c.operating_point.signal_nm = *f.signal;
  try {
    validate(c);
  } catch (const ConfigError& e) {
    throw UsageError(std::string("invalid option value: ") + e.what());
  }
  ctx.hash = config_hash(c);

  const ConversionFit conv = conversion_fit(c);
  const NoiseFit noise = noise_fit(c);
  const OperatingPoint op =
      operating_point(conv.model, noise.model, f.pump_power, c.operating_point.signal_nm);

  std::printf("Figures of merit at %.6g mW pump, %.6g nm signal\n", f.pump_power, op.signal_nm);
  std::printf("  detection efficiency  %.6f (%.4f %%)\n", op.efficiency, 100.0 * op.efficiency);
  std::printf("  noise rate            %.6f cps (%s, floor %s)\n", op.noise_cps,
              std::string(to_string(c.noise_label)).c_str(),
              std::string(to_string(c.noise_floor)).c_str());
  std::printf("  conversion fit        eta_max %.6f, u %.6f mW^-1/2, %s, max |residual| %.2e\n",
              conv.model.eta_max, conv.model.coupling_u, conv.exact ? "exact" : "least squares",
              conv.max_abs_residual);
  std::printf("  noise fit             D0 %.4f cps, a %.6f, gamma %.6f, %s, max |residual| %.2e\n",
              noise.model.floor_cps, noise.model.amplitude, noise.model.exponent,
              noise.exact ? "exact" : "least squares", noise.max_abs_residual);
  if (!noise.note.empty()) std::printf("  note                  %s\n", noise.note.c_str());

  json r = report_base(ctx, "fom");
  r["pump_power_mw"] = f.pump_power;
  r["signal_nm"] = op.signal_nm;
  r["efficiency"] = op.efficiency;
  r["noise_cps"] = op.noise_cps;
  r["noise_label"] = to_string(c.noise_label);
  r["noise_floor_interpretation"] = to_string(c.noise_floor);
  r["conversion_fit"] = {{"eta_max", conv.model.eta_max},
                         {"coupling_u_per_sqrt_mw", conv.model.coupling_u},
                         {"exact", conv.exact},
                         {"max_abs_residual", conv.max_abs_residual},
                         {"residuals", residuals_json(conv.residuals)}};
  r["noise_fit"] = {{"floor_cps", noise.model.floor_cps},
                    {"amplitude", noise.model.amplitude},
                    {"exponent", noise.model.exponent},
                    {"exact", noise.exact},
                    {"degenerate", noise.degenerate},
                    {"note", noise.note},
                    {"max_abs_residual", noise.max_abs_residual},
                    {"residuals", residuals_json(noise.residuals)}};
  r["nep_convention"] = to_string(c.nep.convention);
  r["photon_energy_constant"] = to_string(c.nep.energy);

  int status = 0;
  try {
    const NepValue value = nep(op, c.nep);
    std::printf("  NEP                   %.4e W (%.3f dBm, %s, %s)\n", value.watts, value.dbm,
                std::string(to_string(c.nep.convention)).c_str(),
                std::string(to_string(c.nep.energy)).c_str());
    r["nep_w"] = value.watts;
    r["nep_dbm"] = std::isfinite(value.dbm) ? json(value.dbm) : json(nullptr);
  } catch (const Error& e) {
    std::printf("  NEP                   undefined: %s\n", e.what());
    std::fprintf(stderr, "error: NEP: %s\n", e.what());
    r["nep_w"] = nullptr;
    r["nep_dbm"] = nullptr;
    r["nep_error"] = e.what();
    status = static_cast<int>(e.exit_code());
  }
  emit_report(g, r, std::nullopt);
  return status;
}

// nep ----------------------------------------------------------------------

struct NepFlags {
  std::optional<double> efficiency, noise, signal;
  std::optional<std::string> convention, energy, label;
};

int run_nep(const Globals& g, const NepFlags& f) {
  Context ctx = make_context(g, nullptr);
  auto& c = ctx.cfg;
  apply_nep_flags(c, f.convention, f.energy, f.label);
  ctx.hash = config_hash(c);
  OperatingPoint op;
  op.efficiency = f.efficiency.value_or(c.operating_point.efficiency);
  op.noise_cps = f.noise.value_or(c.operating_point.noise_cps);
  op.signal_nm = f.signal.value_or(c.operating_point.signal_nm);
  op.noise_label = c.noise_label;
  const NepValue value = nep(op, c.nep);
  NepOptions other = c.nep;
  other.convention = c.nep.convention == NepConvention::paper_sqrt_d ? NepConvention::shot_sqrt_2d
                                                                     : NepConvention::paper_sqrt_d;
  const NepValue alt = nep(op, other);

  std::printf("NEP at efficiency %.6g, D %.6g cps (%s), %.6g nm\n", op.efficiency, op.noise_cps,
              std::string(to_string(op.noise_label)).c_str(), op.signal_nm);
  std::printf("  %-12s %.4e W  %.3f dBm\n", std::string(to_string(c.nep.convention)).c_str(),
              value.watts, value.dbm);
  std::printf("  %-12s %.4e W  %.3f dBm\n", std::string(to_string(other.convention)).c_str(),
              alt.watts, alt.dbm);
  std::printf("  photon energy constant: %s\n", std::string(to_string(c.nep.energy)).c_str());

  json r = report_base(ctx, "nep");
  r["efficiency"] = op.efficiency;
  r["noise_cps"] = op.noise_cps;
  r["noise_label"] = to_string(op.noise_label);
  r["signal_nm"] = op.signal_nm;
  r["photon_energy_constant"] = to_string(c.nep.energy);
  r["convention"] = to_string(c.nep.convention);
  r["nep_w"] = value.watts;
  r["nep_dbm"] = std::isfinite(value.dbm) ? json(value.dbm) : json(nullptr);
  r["alternate"] = {{"convention", to_string(other.convention)},
                    {"nep_w", alt.watts},
                    {"nep_dbm", std::isfinite(alt.dbm) ? json(alt.dbm) : json(nullptr)}};
  emit_report(g, r, std::nullopt);
  return 0;
}

// synth --------------------------------------------------------------------

struct SynthFlags {
  std::string kind = "comb";
  std::string out;
  std::optional<double> power_dbm, center;
  PlanFlags plan;
};

int run_synth(const Globals& g, const SynthFlags& f) {
  const Context ctx = make_context(g, &f.plan);
  const auto& c = ctx.cfg;
  const Instrument instrument = make_instrument(c);
  const auto grid = default_signal_grid(c.scan, instrument, c.signal_step_nm, c.signal_margin_nm);
  Spectrum s;
  json r = report_base(ctx, "synth");
  if (f.kind == "comb") {
    ModeComb comb = c.source.comb;
    if (f.center) comb.center_nm = *f.center;
    const double dbm = f.power_dbm.value_or(c.source.comb_power_dbm);
    comb.total_power_w = dbm_to_watts(dbm);
    s = synthesize_mode_comb(comb, grid);
    r["mode_centers_nm"] = comb.mode_centers_nm();
    r["power_dbm"] = dbm;
  } else if (f.kind == "line") {
    const double dbm = f.power_dbm.value_or(c.source.line_power_dbm);
    const double center = f.center.value_or(c.source.line_center_nm);
    s = synthesize_line(center, c.source.line_fwhm_nm, dbm_to_watts(dbm), grid);
    r["center_nm"] = center;
    r["power_dbm"] = dbm;
  } else if (f.kind == "zero") {
    s = Spectrum{grid, std::vector<double>(grid.size(), 0.0), SpectrumUnit::watts_per_nm};
    r["power_dbm"] = nullptr;
  } else {
    throw UsageError("--kind: expected comb, line or zero");
  }
  FileHeader h = file_header(ctx, "synth");
  h.add("source", f.kind);
  write_spectrum(fs::path(f.out), s, h);
  r["kind"] = f.kind;
  r["integrated_power_w"] = s.integral();
  r["points"] = s.grid_nm.size();
  emit_report(g, r, fs::path(f.out));
  std::printf("wrote %s (%zu points, %.4e W)\n", f.out.c_str(), s.grid_nm.size(), s.integral());
  return 0;
}

// kernel / scan ------------------------------------------------------------

ResponseKernel model_kernel(const ExperimentConfig& c, double efficiency) {
  const Instrument instrument = make_instrument(c);
  const auto grid = default_signal_grid(c.scan, instrument, c.signal_step_nm, c.signal_margin_nm);
  return build_kernel(instrument, efficiency, c.scan, grid, c.threads);
}

json plan_json(const ExperimentConfig& c) {
  return {{"pump_start_nm", c.scan.pump_start_nm},
          {"pump_stop_nm", c.scan.pump_stop_nm},
          {"pump_step_nm", c.scan.pump_step_nm},
          {"dwell_s", c.scan.dwell_s},
          {"dwell_assumed", true},
          {"pump_power_mw", c.scan.pump_power_mw},
          {"tracking", to_string(c.scan.tracking)},
          {"kernel_mode", to_string(c.kernel_mode)},
          {"anchor_set", c.anchor_set}};
}

void add_plan_header(FileHeader& h, const ExperimentConfig& c, const ScanRates& rates) {
  h.add("dwell_s", format_double(c.scan.dwell_s) + " (assumed per-point dwell)");
  h.add("pump_power_mw", format_double(c.scan.pump_power_mw));
  h.add("tracking", std::string(to_string(c.scan.tracking)));
  h.add("kernel_mode", std::string(to_string(c.kernel_mode)));
  h.add("efficiency", format_double(rates.efficiency));
  h.add("noise_cps", format_double(rates.noise_cps));
  h.add("rate_source", std::string(to_string(c.rate_source)));
}

struct KernelFlags {
  std::string out;
  PlanFlags plan;
};

int run_kernel(const Globals& g, const KernelFlags& f) {
  const Context ctx = make_context(g, &f.plan);
  const auto& c = ctx.cfg;
  const ScanRates rates = scan_rates(c);
  const ResponseKernel kernel = model_kernel(c, rates.efficiency);
  FileHeader h = file_header(ctx, "kernel");
  add_plan_header(h, c, rates);
  h.add("units", "counts/s per W");
  write_kernel(fs::path(f.out), kernel, h);
  json r = report_base(ctx, "kernel");
  r["plan"] = plan_json(c);
  r["rows"] = kernel.rows();
  r["cols"] = kernel.cols();
  r["efficiency"] = rates.efficiency;
  r["signal_grid_nm"] = {kernel.signal_grid().front(), kernel.signal_grid().back()};
  emit_report(g, r, fs::path(f.out));
  std::printf("wrote %s (%zu x %zu)\n", f.out.c_str(), kernel.rows(), kernel.cols());
  return 0;
}

struct ScanFlags {
  std::string input;
  std::string out;
  PlanFlags plan;
};

int run_scan(const Globals& g, const ScanFlags& f) {
  const Context ctx = make_context(g, &f.plan);
  const auto& c = ctx.cfg;
  const Spectrum input = read_spectrum(fs::path(f.input));
  const ScanRates rates = scan_rates(c);
  const ResponseKernel kernel = model_kernel(c, rates.efficiency);
  const ScanResult scan = forward_scan(input, kernel, rates.noise_cps, c.scan, c.threads);
  const TrackingSchedule schedule = vbg_tracking_schedule(c.scan, make_instrument(c));

  FileHeader h = file_header(ctx, "scan");
  add_plan_header(h, c, rates);
  h.add("input", fs::path(f.input).filename().string());
  write_scan(fs::path(f.out), scan, h);

  std::size_t peak = 0;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    if (scan.expected_rate_cps[i] > scan.expected_rate_cps[peak]) peak = i;
    total += scan.counts[i];
  }
  json r = report_base(ctx, "scan");
  r["plan"] = plan_json(c);
  r["efficiency"] = rates.efficiency;
  r["noise_cps"] = rates.noise_cps;
  r["points"] = scan.size();
  r["input_power_w"] = input.integral();
  r["peak_expected_rate_cps"] = scan.expected_rate_cps[peak];
  r["peak_pump_nm"] = scan.pump_nm[peak];
  r["peak_signal_nm"] = scan.mapped_signal_nm[peak];
  r["total_counts"] = total;
  r["mapped_signal_range_nm"] = {scan.mapped_signal_nm.back(), scan.mapped_signal_nm.front()};
  r["sfg_drift_nm"] = schedule.sfg_drift_nm;
  r["tracking_required"] = schedule.tracking_required;
  emit_report(g, r, fs::path(f.out));
  std::printf("wrote %s (%zu points, peak %.4g cps at %.3f nm signal)\n", f.out.c_str(),
              scan.size(), scan.expected_rate_cps[peak], scan.mapped_signal_nm[peak]);
  return 0;
}

// deconvolve ---------------------------------------------------------------

struct DeconvolveFlags {
  std::string raw;
  std::string kernel;
  std::string out;
  std::optional<std::string> algorithm;
  std::optional<int> max_iterations;
  std::optional<double> background;
  std::optional<double> support_lo, support_hi;
  bool expected = false;
  PlanFlags plan;
};

int run_deconvolve(const Globals& g, const DeconvolveFlags& f) {
  const Context ctx = make_context(g, &f.plan);
  const auto& c = ctx.cfg;
  FileHeader raw_header;
  const ScanResult raw = read_scan(fs::path(f.raw), &raw_header);

  ResponseKernel kernel;
  std::string kernel_source;
  if (f.kernel == "model") {
    kernel = model_kernel(c, scan_rates(c).efficiency);
    kernel_source = "model";
  } else {
    kernel = read_kernel(fs::path(f.kernel));
    kernel_source = fs::path(f.kernel).filename().string();
  }

  DeconvolutionOptions o = deconvolution_options(c);
  if (f.algorithm) {
    override_value("--algorithm",
                   [&] { o.algorithm = deconvolution_algorithm_from_string(*f.algorithm); });
  }
  if (f.max_iterations) o.max_iterations = *f.max_iterations;
  if (f.background) o.background_cps = *f.background;
  if (f.support_lo || f.support_hi) {
    if (!(f.support_lo && f.support_hi)) {
      throw UsageError("--support-lo and --support-hi must be given together");
    }
    o.support_nm = std::make_pair(*f.support_lo, *f.support_hi);
  }
  o.use_expected_rates = f.expected;
  const DeconvolutionResult result = deconvolve(raw, kernel, o);

  FileHeader h = file_header(ctx, "deconvolve");
  h.add("raw", fs::path(f.raw).filename().string());
  if (auto hash = raw_header.get("config_hash")) h.add("raw_config_hash", *hash);
  h.add("kernel", kernel_source);
  h.add("algorithm", std::string(to_string(o.algorithm)));
  h.add("iterations", std::to_string(result.iterations_used));
  h.add("stop_reason", std::string(to_string(result.stop_reason)));
  h.add("background_cps", format_double(result.background_cps));
  write_spectrum(fs::path(f.out), result.estimate, h);

  json r = report_base(ctx, "deconvolve");
  r["raw"] = f.raw;
  r["kernel"] = kernel_source;
  r["algorithm"] = to_string(o.algorithm);
  r["iterations_used"] = result.iterations_used;
  r["stop_reason"] = to_string(result.stop_reason);
  r["residual_norm"] = result.residual_norm;
  r["background_cps"] = result.background_cps;
  r["discrepancy"] = result.discrepancy;
  r["discrepancy_target"] = result.discrepancy_target;
  r["flux_ratio"] = result.flux_ratio;
  r["estimated_power_w"] = result.estimate.integral();
  r["expected_rates_input"] = f.expected;
  emit_report(g, r, fs::path(f.out));
  std::printf("wrote %s (%d iterations, %s, residual %.3e, background %.3f cps)\n",
              f.out.c_str(), result.iterations_used,
              std::string(to_string(result.stop_reason)).c_str(), result.residual_norm,
              result.background_cps);
  return 0;
}

// resolution ---------------------------------------------------------------

struct ResolutionFlags {
  double signal = 1550.0;
  PlanFlags plan;
};

int run_resolution(const Globals& g, const ResolutionFlags& f) {
  const Context ctx = make_context(g, &f.plan);
  const auto& c = ctx.cfg;
  const Instrument instrument = make_instrument(c);
  const ResolutionReport res = resolution(instrument, c.scan, f.signal);
  const TrackingSchedule schedule = vbg_tracking_schedule(c.scan, instrument);
  const FixedVbgSpan span = fixed_vbg_usable_span(instrument, c.scan.center_pump_nm(),
                                                  c.scan.pump_start_nm, c.scan.pump_stop_nm);
  const auto [map_lo, map_hi] = std::minmax_element(schedule.mapped_signal_nm.begin(),
                                                    schedule.mapped_signal_nm.end());
  const auto band = acceptance_bandwidth(instrument.waveguide,
                                         phase_matched_pump(Wavelength(f.signal), instrument.waveguide));

  std::printf("Spectrometer at %.4f nm signal (anchor set '%s', %s grating)\n", f.signal,
              c.anchor_set.c_str(), std::string(to_string(c.scan.tracking)).c_str());
  std::printf("  resolution analytic       %.4f nm\n", res.analytic_nm);
  std::printf("  resolution numeric        %.4f nm\n", res.numeric_nm);
  std::printf("  acceptance FWHM signal    %.4f nm, sfg %.4f nm\n", band.signal_fwhm_nm,
              band.sfg_fwhm_nm);
  std::printf("  mapped signal range       %.3f - %.3f nm\n", *map_lo, *map_hi);
  std::printf("  sfg drift over scan       %.4f nm (tracking %s)\n", schedule.sfg_drift_nm,
              schedule.tracking_required ? "required" : "not required");
  std::printf("  fixed-grating usable span %.3f nm (%.3f - %.3f nm)\n", span.signal_span_nm,
              span.signal_lo_nm, span.signal_hi_nm);
  if (!res.warning.empty()) std::printf("  warning: %s\n", res.warning.c_str());

  json r = report_base(ctx, "resolution");
  r["plan"] = plan_json(c);
  r["signal_nm"] = f.signal;
  r["resolution_analytic_nm"] = res.analytic_nm;
  r["resolution_numeric_nm"] = res.numeric_nm;
  r["acceptance_fwhm_signal_nm"] = band.signal_fwhm_nm;
  r["acceptance_fwhm_sfg_nm"] = band.sfg_fwhm_nm;
  r["mapped_signal_range_nm"] = {*map_lo, *map_hi};
  r["sfg_drift_nm"] = schedule.sfg_drift_nm;
  r["tracking_required"] = schedule.tracking_required;
  r["fixed_vbg_span_nm"] = span.signal_span_nm;
  r["fixed_vbg_span_range_nm"] = {span.signal_lo_nm, span.signal_hi_nm};
  r["warning"] = res.warning;
  emit_report(g, r, std::nullopt);
  return 0;
}

// detect -------------------------------------------------------------------

struct DetectFlags {
  std::string raw;
  double truth = 1550.0;
  std::optional<double> resolution_nm;
  std::optional<double> background;
};

int run_detect(const Globals& g, const DetectFlags& f) {
  const Context ctx = make_context(g, nullptr);
  const auto& c = ctx.cfg;
  const ScanResult raw = read_scan(fs::path(f.raw));
  DetectionOptions o;
  o.threshold_sigma = c.detection_threshold_sigma;
  o.position_tolerance_factor = c.detection_tolerance_factor;
  o.background_cps = f.background;
  if (f.resolution_nm) {
    o.resolution_nm = *f.resolution_nm;
  } else {
    const Instrument instrument = make_instrument(c);
    const Wavelength s(f.truth);
    const Wavelength p = phase_matched_pump(s, instrument.waveguide);
    o.resolution_nm = analytic_resolution(c.vbg.fwhm_nm, sfg_wavelength(s, p).nm(), f.truth);
  }
  const DetectionReport d = detectability(raw, f.truth, o);
  std::printf("Detection near %.4f nm: %s\n", f.truth, d.detected ? "detected" : "not detected");
  std::printf("  peak found     %.4f nm\n", d.peak_found_nm);
  std::printf("  significance   %.2f sigma (threshold %.2f)\n", d.significance, o.threshold_sigma);
  std::printf("  background     %.4f cps, window %zu points\n", d.background_cps, d.window_points);
  if (!d.note.empty()) std::printf("  note           %s\n", d.note.c_str());

  json r = report_base(ctx, "detect");
  r["raw"] = f.raw;
  r["truth_nm"] = f.truth;
  r["resolution_nm"] = o.resolution_nm;
  r["peak_found_nm"] = d.peak_found_nm;
  r["significance_sigma"] = std::isfinite(d.significance) ? json(d.significance) : json(nullptr);
  r["detected"] = d.detected;
  r["background_cps"] = d.background_cps;
  r["window_points"] = d.window_points;
  r["note"] = d.note;
  emit_report(g, r, std::nullopt);
  return 0;
}

// config -------------------------------------------------------------------

int run_config(const Globals& g, const std::string& out) {
  const Context ctx = make_context(g, nullptr);
  const std::string text = to_json(ctx.cfg).dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream file(out, std::ios::binary);
    if (!file) throw InputError("cannot open '" + out + "' for writing");
    file << text;
  }
  std::fprintf(stderr, "config_hash: %s\n", ctx.hash.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Upconversion single-photon detector and pump-scanned spectrometer model"};
  app.set_version_flag("--version", std::string("upconv ") + kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "experiment config (JSON); built-in defaults if absent");
  app.add_option("--seed", g.seed, "root seed for sampling");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores); never changes results");
  app.add_option("--report", g.report_path, "write the JSON report to this path");

  DesignFlags design;
  auto* c_design = app.add_subcommand("design-qpm", "QPM period, SFG wavelength and acceptance");
  c_design->add_option("--pump", design.pump, "pump wavelength (nm)")->capture_default_str();
  c_design->add_option("--signal", design.signal, "signal wavelength (nm)")->capture_default_str();
  c_design->add_option("--temp", design.temp, "crystal temperature (C)");

  FomFlags fom_flags;
  auto* c_fom = app.add_subcommand("fom", "efficiency, noise and NEP from the calibration fits");
  c_fom->add_option("--pump-power", fom_flags.pump_power, "pump power (mW)")->required();
  c_fom->add_option("--nep-convention", fom_flags.convention, "paper_sqrtD | shot_sqrt2D");
  c_fom->add_option("--photon-energy", fom_flags.energy, "h | hbar");
  c_fom->add_option("--noise-label", fom_flags.label, "total_noise | dark_only");
  c_fom->add_option("--floor", fom_flags.floor, "noise points as totals | additive_dark");
  c_fom->add_option("--conversion-points", fom_flags.conversion_points,
                    "CSV pump_mw,efficiency (replaces config points)");
  c_fom->add_option("--noise-points", fom_flags.noise_points,
                    "CSV pump_mw,rate_cps (replaces config points)");
  c_fom->add_option("--signal", fom_flags.signal, "signal wavelength (nm)");

  NepFlags nep_flags;
  auto* c_nep = app.add_subcommand("nep", "noise-equivalent power of an operating point");
  c_nep->add_option("--efficiency", nep_flags.efficiency, "detection efficiency");
  c_nep->add_option("--noise", nep_flags.noise, "noise rate D (cps)");
  c_nep->add_option("--signal", nep_flags.signal, "signal wavelength (nm)");
  c_nep->add_option("--nep-convention", nep_flags.convention, "paper_sqrtD | shot_sqrt2D");
  c_nep->add_option("--photon-energy", nep_flags.energy, "h | hbar");
  c_nep->add_option("--noise-label", nep_flags.label, "total_noise | dark_only");

  SynthFlags synth;
  auto* c_synth = app.add_subcommand("synth", "write a synthetic input spectrum");
  c_synth->add_option("--kind", synth.kind, "comb | line | zero")->capture_default_str();
  c_synth->add_option("--out", synth.out, "output CSV")->required();
  c_synth->add_option("--power-dbm", synth.power_dbm, "total power (dBm)");
  c_synth->add_option("--center", synth.center, "center wavelength (nm)");
  add_plan_flags(c_synth, synth.plan);

  KernelFlags kernel_flags;
  auto* c_kernel = app.add_subcommand("kernel", "write the instrument response kernel");
  c_kernel->add_option("--out", kernel_flags.out, "output CSV")->required();
  add_plan_flags(c_kernel, kernel_flags.plan);

  ScanFlags scan;
  auto* c_scan = app.add_subcommand("scan", "simulate a pump scan of an input spectrum");
  c_scan->add_option("--input", scan.input, "input spectrum CSV (W/nm)")->required();
  c_scan->add_option("--out", scan.out, "output scan CSV")->required();
  add_plan_flags(c_scan, scan.plan);

  DeconvolveFlags dec;
  auto* c_dec = app.add_subcommand("deconvolve", "recover the input spectrum from a scan");
  c_dec->add_option("--raw", dec.raw, "scan CSV")->required();
  c_dec->add_option("--kernel", dec.kernel, "kernel CSV, or 'model' to rebuild from config")
      ->required();
  c_dec->add_option("--out", dec.out, "output spectrum CSV")->required();
  c_dec->add_option("--algorithm", dec.algorithm, "richardson_lucy | tikhonov");
  c_dec->add_option("--max-iterations", dec.max_iterations, "iteration cap");
  c_dec->add_option("--background", dec.background, "pedestal (cps); estimated if absent");
  c_dec->add_option("--support-lo", dec.support_lo, "lower edge of the recovered band (nm)");
  c_dec->add_option("--support-hi", dec.support_hi, "upper edge of the recovered band (nm)");
  c_dec->add_flag("--expected", dec.expected, "use the expected-rate column (noiseless)");
  add_plan_flags(c_dec, dec.plan);

  ResolutionFlags res;
  auto* c_res = app.add_subcommand("resolution", "resolution, tuning map and grating tracking");
  c_res->add_option("--signal", res.signal, "signal wavelength (nm)")->capture_default_str();
  add_plan_flags(c_res, res.plan);

  DetectFlags det;
  auto* c_det = app.add_subcommand("detect", "peak detectability in a scan");
  c_det->add_option("--raw", det.raw, "scan CSV")->required();
  c_det->add_option("--truth", det.truth, "expected peak (nm)")->capture_default_str();
  c_det->add_option("--resolution", det.resolution_nm, "resolution element (nm)");
  c_det->add_option("--background", det.background, "pedestal (cps); estimated if absent");

  std::string config_out;
  auto* c_config = app.add_subcommand("config", "print the resolved config and its hash");
  c_config->add_option("--out", config_out, "write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::usage);
  }

  try {
    if (c_design->parsed()) return run_design(g, design);
    if (c_fom->parsed()) return run_fom(g, fom_flags);
    if (c_nep->parsed()) return run_nep(g, nep_flags);
    if (c_synth->parsed()) return run_synth(g, synth);
    if (c_kernel->parsed()) return run_kernel(g, kernel_flags);
    if (c_scan->parsed()) return run_scan(g, scan);
    if (c_dec->parsed()) return run_deconvolve(g, dec);
    if (c_res->parsed()) return run_resolution(g, res);
    if (c_det->parsed()) return run_detect(g, det);
    if (c_config->parsed()) return run_config(g, config_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ExitCode::numerical);
  }
  return static_cast<int>(ExitCode::usage);
}
