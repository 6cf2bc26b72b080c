#include "upconv/config.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>

#include "upconv/error.hpp"

namespace upconv {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string indexed(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void expect_object(const json& j, const std::string& path,
                   std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  const std::set<std::string_view> keys(allowed);
  for (const auto& [key, value] : j.items()) {
    if (!keys.contains(key)) throw ConfigError(join(path, key), "unknown field");
  }
}

void read(const json& j, const std::string& path, const char* key, double& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
  out = v.get<double>();
}

void read(const json& j, const std::string& path, const char* key, int& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  out = v.get<int>();
}

void read(const json& j, const std::string& path, const char* key, unsigned& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_unsigned()) throw ConfigError(join(path, key), "expected a non-negative integer");
  out = v.get<unsigned>();
}

void read(const json& j, const std::string& path, const char* key, std::uint64_t& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_unsigned()) throw ConfigError(join(path, key), "expected a non-negative integer");
  out = v.get<std::uint64_t>();
}

void read(const json& j, const std::string& path, const char* key, bool& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  out = v.get<bool>();
}

void read(const json& j, const std::string& path, const char* key, std::string& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
  out = v.get<std::string>();
}

// Enum fields: read a string and convert with `parse`, reporting the path.
template <class E, class Parse>
void read_enum(const json& j, const std::string& path, const char* key, E& out, Parse parse) {
  if (!j.contains(key)) return;
  std::string name;
  read(j, path, key, name);
  try {
    out = parse(name);
  } catch (const Error& e) {
    throw ConfigError(join(path, key), e.what());
  }
}

template <std::size_t N>
void read_array(const json& j, const std::string& path, const char* key,
                std::array<double, N>& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  const std::string p = join(path, key);
  if (!v.is_array() || v.size() != N) {
    throw ConfigError(p, "expected an array of " + std::to_string(N) + " numbers");
  }
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) throw ConfigError(indexed(p, i), "expected a number");
    out[i] = v[i].get<double>();
  }
}

NoiseFloorInterpretation floor_from_string(std::string_view name) {
  if (name == "totals") return NoiseFloorInterpretation::totals;
  if (name == "additive_dark") return NoiseFloorInterpretation::additive_dark;
  throw DomainError("expected 'totals' or 'additive_dark'");
}

RateSource rate_source_from_string(std::string_view name) {
  if (name == "operating_point") return RateSource::operating_point;
  if (name == "calibration_fit") return RateSource::calibration_fit;
  throw DomainError("expected 'operating_point' or 'calibration_fit'");
}

json filter_to_json(const FilterElement& f) {
  return {{"name", f.name},
          {"kind", to_string(f.kind)},
          {"center_nm", f.center_nm},
          {"fwhm_nm", f.fwhm_nm},
          {"peak", f.peak},
          {"lineshape", to_string(f.lineshape)},
          {"edge_width_nm", f.edge_width_nm}};
}

FilterElement filter_from_json(const json& j, const std::string& path, FilterElement f) {
  expect_object(j, path,
                {"name", "kind", "center_nm", "fwhm_nm", "peak", "lineshape", "edge_width_nm"});
  read(j, path, "name", f.name);
  read_enum(j, path, "kind", f.kind, filter_kind_from_string);
  read(j, path, "center_nm", f.center_nm);
  read(j, path, "fwhm_nm", f.fwhm_nm);
  read(j, path, "peak", f.peak);
  read_enum(j, path, "lineshape", f.lineshape, lineshape_from_string);
  read(j, path, "edge_width_nm", f.edge_width_nm);
  return f;
}

json points_to_json(const std::vector<CalibrationPoint>& points, const char* value_key) {
  json out = json::array();
  for (const auto& p : points) out.push_back({{"pump_mw", p.pump_mw}, {value_key, p.value}});
  return out;
}

std::vector<CalibrationPoint> points_from_json(const json& j, const std::string& path,
                                               const char* value_key) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of points");
  std::vector<CalibrationPoint> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = indexed(path, i);
    expect_object(j[i], p, {"pump_mw", value_key});
    if (!j[i].contains("pump_mw") || !j[i].contains(value_key)) {
      throw ConfigError(p, std::string("needs pump_mw and ") + value_key);
    }
    CalibrationPoint point{0.0, 0.0};
    read(j[i], p, "pump_mw", point.pump_mw);
    read(j[i], p, value_key, point.value);
    out.push_back(point);
  }
  return out;
}

// Runs `check`, re-throwing any library error as a ConfigError at `path`.
template <class F>
void at_path(const std::string& path, F&& check) {
  try {
    check();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace

std::string_view to_string(NoiseFloorInterpretation v) noexcept {
  return v == NoiseFloorInterpretation::totals ? "totals" : "additive_dark";
}

std::string_view to_string(RateSource v) noexcept {
  return v == RateSource::operating_point ? "operating_point" : "calibration_fit";
}

json to_json(const ExperimentConfig& c) {
  const auto& wg = c.waveguide;
  const auto& m = wg.medium;
  json anchors = json::object();
  for (const auto& [name, set] : c.anchor_sets) {
    json list = json::array();
    for (const auto& a : set) list.push_back({{"pump_nm", a.pump_nm}, {"signal_nm", a.signal_nm}});
    anchors[name] = list;
  }
  json filters = json::array();
  for (const auto& f : c.filters) filters.push_back(filter_to_json(f));
  json vbg = filter_to_json(c.vbg);
  vbg["tuning_min_nm"] = c.vbg_tuning_min_nm;
  vbg["tuning_max_nm"] = c.vbg_tuning_max_nm;
  const auto& s = c.scan;
  const auto& src = c.source;
  return {
      {"medium",
       {{"sellmeier_a", m.a},
        {"sellmeier_b", m.b},
        {"t_ref_c", m.t_ref_c},
        {"t_offset_c", m.t_offset_c},
        {"valid_min_nm", m.valid_min_nm},
        {"valid_max_nm", m.valid_max_nm}}},
      {"waveguide",
       {{"length_mm", wg.length_mm},
        {"qpm_period_um", wg.qpm_period_um},
        {"temperature_c", wg.temperature_c},
        {"pigtail_loss_db", wg.pigtail_loss_db},
        {"facet_throughput_loss_db", wg.facet_throughput_loss_db},
        {"nominal_pump_nm", wg.nominal_pump_nm},
        {"nominal_signal_nm", wg.nominal_signal_nm}}},
      {"calibration", {{"anchor_set", c.anchor_set}, {"anchor_sets", anchors}}},
      {"filters", filters},
      {"vbg", vbg},
      {"detector",
       {{"dark_rate_cps", c.detector.dark_rate_cps},
        {"quantum_efficiency", c.detector.quantum_efficiency},
        {"dead_time_s", c.detector.dead_time_s},
        {"afterpulse_probability", c.detector.afterpulse_probability}}},
      {"conversion",
       {{"points", points_to_json(c.conversion_points, "efficiency")},
        {"max_pump_mw", c.max_pump_mw}}},
      {"noise",
       {{"points", points_to_json(c.noise_points, "rate_cps")},
        {"floor_interpretation", to_string(c.noise_floor)}}},
      {"operating_point",
       {{"pump_mw", c.operating_point.pump_mw},
        {"efficiency", c.operating_point.efficiency},
        {"noise_cps", c.operating_point.noise_cps},
        {"signal_nm", c.operating_point.signal_nm}}},
      {"conventions",
       {{"nep", to_string(c.nep.convention)},
        {"photon_energy", to_string(c.nep.energy)},
        {"noise_label", to_string(c.noise_label)},
        {"rate_source", to_string(c.rate_source)},
        {"kernel_mode", to_string(c.kernel_mode)}}},
      {"scan",
       {{"pump_start_nm", s.pump_start_nm},
        {"pump_stop_nm", s.pump_stop_nm},
        {"pump_step_nm", s.pump_step_nm},
        {"dwell_s", s.dwell_s},
        {"pump_power_mw", s.pump_power_mw},
        {"tracking", to_string(s.tracking)},
        {"signal_step_nm", c.signal_step_nm},
        {"signal_margin_nm", c.signal_margin_nm}}},
      {"seed", s.seed},
      {"deconvolution",
       {{"algorithm", to_string(c.algorithm)},
        {"max_iterations", c.max_iterations},
        {"auto_discrepancy", c.auto_discrepancy},
        {"stagnation_tolerance", c.stagnation_tolerance},
        {"tikhonov_alpha", c.tikhonov_alpha}}},
      {"detection",
       {{"threshold_sigma", c.detection_threshold_sigma},
        {"position_tolerance_factor", c.detection_tolerance_factor}}},
      {"source",
       {{"comb_center_nm", src.comb.center_nm},
        {"comb_mode_spacing_nm", src.comb.mode_spacing_nm},
        {"comb_mode_count", src.comb.mode_count},
        {"comb_mode_fwhm_nm", src.comb.mode_fwhm_nm},
        {"comb_envelope_fwhm_nm", src.comb.envelope_fwhm_nm},
        {"comb_power_dbm", src.comb_power_dbm},
        {"line_center_nm", src.line_center_nm},
        {"line_fwhm_nm", src.line_fwhm_nm},
        {"line_power_dbm", src.line_power_dbm}}},
      {"threads", c.threads},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  expect_object(j, "",
                {"medium", "waveguide", "calibration", "filters", "vbg", "detector", "conversion",
                 "noise", "operating_point", "conventions", "scan", "seed", "deconvolution",
                 "detection", "source", "threads"});
  if (j.contains("medium")) {
    const std::string p = "medium";
    const json& m = j.at(p);
    expect_object(m, p,
                  {"sellmeier_a", "sellmeier_b", "t_ref_c", "t_offset_c", "valid_min_nm",
                   "valid_max_nm"});
    auto& med = c.waveguide.medium;
    read_array(m, p, "sellmeier_a", med.a);
    read_array(m, p, "sellmeier_b", med.b);
    read(m, p, "t_ref_c", med.t_ref_c);
    read(m, p, "t_offset_c", med.t_offset_c);
    read(m, p, "valid_min_nm", med.valid_min_nm);
    read(m, p, "valid_max_nm", med.valid_max_nm);
  }
  if (j.contains("waveguide")) {
    const std::string p = "waveguide";
    const json& w = j.at(p);
    expect_object(w, p,
                  {"length_mm", "qpm_period_um", "temperature_c", "pigtail_loss_db",
                   "facet_throughput_loss_db", "nominal_pump_nm", "nominal_signal_nm"});
    auto& wg = c.waveguide;
    read(w, p, "length_mm", wg.length_mm);
    read(w, p, "qpm_period_um", wg.qpm_period_um);
    read(w, p, "temperature_c", wg.temperature_c);
    read(w, p, "pigtail_loss_db", wg.pigtail_loss_db);
    read(w, p, "facet_throughput_loss_db", wg.facet_throughput_loss_db);
    read(w, p, "nominal_pump_nm", wg.nominal_pump_nm);
    read(w, p, "nominal_signal_nm", wg.nominal_signal_nm);
  }
  if (j.contains("calibration")) {
    const std::string p = "calibration";
    const json& cal = j.at(p);
    expect_object(cal, p, {"anchor_set", "anchor_sets"});
    read(cal, p, "anchor_set", c.anchor_set);
    if (cal.contains("anchor_sets")) {
      const std::string ps = join(p, "anchor_sets");
      const json& sets = cal.at("anchor_sets");
      if (!sets.is_object()) throw ConfigError(ps, "expected an object of named anchor lists");
      c.anchor_sets.clear();
      for (const auto& [name, list] : sets.items()) {
        const std::string pl = join(ps, name);
        if (!list.is_array()) throw ConfigError(pl, "expected an array of anchors");
        std::vector<TuningAnchor> anchors;
        for (std::size_t i = 0; i < list.size(); ++i) {
          const std::string pa = indexed(pl, i);
          expect_object(list[i], pa, {"pump_nm", "signal_nm"});
          if (!list[i].contains("pump_nm") || !list[i].contains("signal_nm")) {
            throw ConfigError(pa, "needs pump_nm and signal_nm");
          }
          TuningAnchor a{0.0, 0.0};
          read(list[i], pa, "pump_nm", a.pump_nm);
          read(list[i], pa, "signal_nm", a.signal_nm);
          anchors.push_back(a);
        }
        c.anchor_sets[name] = anchors;
      }
    }
  }
  if (j.contains("filters")) {
    const json& list = j.at("filters");
    if (!list.is_array()) throw ConfigError("filters", "expected an array of filters");
    c.filters.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      c.filters.push_back(filter_from_json(list[i], indexed("filters", i), FilterElement{}));
    }
  }
  if (j.contains("vbg")) {
    json v = j.at("vbg");
    if (!v.is_object()) throw ConfigError("vbg", "expected an object");
    read(v, "vbg", "tuning_min_nm", c.vbg_tuning_min_nm);
    read(v, "vbg", "tuning_max_nm", c.vbg_tuning_max_nm);
    v.erase("tuning_min_nm");
    v.erase("tuning_max_nm");
    c.vbg = filter_from_json(v, "vbg", c.vbg);
  }
  if (j.contains("detector")) {
    const std::string p = "detector";
    const json& d = j.at(p);
    expect_object(d, p,
                  {"dark_rate_cps", "quantum_efficiency", "dead_time_s", "afterpulse_probability"});
    read(d, p, "dark_rate_cps", c.detector.dark_rate_cps);
    read(d, p, "quantum_efficiency", c.detector.quantum_efficiency);
    read(d, p, "dead_time_s", c.detector.dead_time_s);
    read(d, p, "afterpulse_probability", c.detector.afterpulse_probability);
  }
  if (j.contains("conversion")) {
    const std::string p = "conversion";
    const json& v = j.at(p);
    expect_object(v, p, {"points", "max_pump_mw"});
    if (v.contains("points")) {
      c.conversion_points = points_from_json(v.at("points"), join(p, "points"), "efficiency");
    }
    read(v, p, "max_pump_mw", c.max_pump_mw);
  }
  if (j.contains("noise")) {
    const std::string p = "noise";
    const json& v = j.at(p);
    expect_object(v, p, {"points", "floor_interpretation"});
    if (v.contains("points")) {
      c.noise_points = points_from_json(v.at("points"), join(p, "points"), "rate_cps");
    }
    read_enum(v, p, "floor_interpretation", c.noise_floor, floor_from_string);
  }
  if (j.contains("operating_point")) {
    const std::string p = "operating_point";
    const json& v = j.at(p);
    expect_object(v, p, {"pump_mw", "efficiency", "noise_cps", "signal_nm"});
    read(v, p, "pump_mw", c.operating_point.pump_mw);
    read(v, p, "efficiency", c.operating_point.efficiency);
    read(v, p, "noise_cps", c.operating_point.noise_cps);
    read(v, p, "signal_nm", c.operating_point.signal_nm);
  }
  if (j.contains("conventions")) {
    const std::string p = "conventions";
    const json& v = j.at(p);
    expect_object(v, p, {"nep", "photon_energy", "noise_label", "rate_source", "kernel_mode"});
    read_enum(v, p, "nep", c.nep.convention, nep_convention_from_string);
    read_enum(v, p, "photon_energy", c.nep.energy, photon_energy_from_string);
    read_enum(v, p, "noise_label", c.noise_label, noise_label_from_string);
    read_enum(v, p, "rate_source", c.rate_source, rate_source_from_string);
    read_enum(v, p, "kernel_mode", c.kernel_mode, kernel_mode_from_string);
  }
  if (j.contains("scan")) {
    const std::string p = "scan";
    const json& v = j.at(p);
    expect_object(v, p,
                  {"pump_start_nm", "pump_stop_nm", "pump_step_nm", "dwell_s", "pump_power_mw",
                   "tracking", "signal_step_nm", "signal_margin_nm"});
    read(v, p, "pump_start_nm", c.scan.pump_start_nm);
    read(v, p, "pump_stop_nm", c.scan.pump_stop_nm);
    read(v, p, "pump_step_nm", c.scan.pump_step_nm);
    read(v, p, "dwell_s", c.scan.dwell_s);
    read(v, p, "pump_power_mw", c.scan.pump_power_mw);
    read_enum(v, p, "tracking", c.scan.tracking, vbg_tracking_from_string);
    read(v, p, "signal_step_nm", c.signal_step_nm);
    read(v, p, "signal_margin_nm", c.signal_margin_nm);
  }
  read(j, "", "seed", c.scan.seed);
  if (j.contains("deconvolution")) {
    const std::string p = "deconvolution";
    const json& v = j.at(p);
    expect_object(v, p,
                  {"algorithm", "max_iterations", "auto_discrepancy", "stagnation_tolerance",
                   "tikhonov_alpha"});
    read_enum(v, p, "algorithm", c.algorithm, deconvolution_algorithm_from_string);
    read(v, p, "max_iterations", c.max_iterations);
    read(v, p, "auto_discrepancy", c.auto_discrepancy);
    read(v, p, "stagnation_tolerance", c.stagnation_tolerance);
    read(v, p, "tikhonov_alpha", c.tikhonov_alpha);
  }
  if (j.contains("detection")) {
    const std::string p = "detection";
    const json& v = j.at(p);
    expect_object(v, p, {"threshold_sigma", "position_tolerance_factor"});
    read(v, p, "threshold_sigma", c.detection_threshold_sigma);
    read(v, p, "position_tolerance_factor", c.detection_tolerance_factor);
  }
  if (j.contains("source")) {
    const std::string p = "source";
    const json& v = j.at(p);
    expect_object(v, p,
                  {"comb_center_nm", "comb_mode_spacing_nm", "comb_mode_count",
                   "comb_mode_fwhm_nm", "comb_envelope_fwhm_nm", "comb_power_dbm",
                   "line_center_nm", "line_fwhm_nm", "line_power_dbm"});
    auto& s = c.source;
    read(v, p, "comb_center_nm", s.comb.center_nm);
    read(v, p, "comb_mode_spacing_nm", s.comb.mode_spacing_nm);
    read(v, p, "comb_mode_count", s.comb.mode_count);
    read(v, p, "comb_mode_fwhm_nm", s.comb.mode_fwhm_nm);
    read(v, p, "comb_envelope_fwhm_nm", s.comb.envelope_fwhm_nm);
    read(v, p, "comb_power_dbm", s.comb_power_dbm);
    read(v, p, "line_center_nm", s.line_center_nm);
    read(v, p, "line_fwhm_nm", s.line_fwhm_nm);
    read(v, p, "line_power_dbm", s.line_power_dbm);
  }
  read(j, "", "threads", c.threads);
  validate(c);
  return c;
}

void validate(const ExperimentConfig& c) {
  const auto& m = c.waveguide.medium;
  if (!(m.valid_min_nm > 100.0 && m.valid_min_nm < m.valid_max_nm && m.valid_max_nm < 20000.0)) {
    throw ConfigError("medium.valid_min_nm", "validity window must satisfy 100 < min < max < 20000 nm");
  }
  at_path("medium", [&] {
    const double n = refractive_index(Wavelength(c.waveguide.nominal_signal_nm),
                                      c.waveguide.temperature_c, m);
    if (!(n > 1.0 && n < 3.0)) throw DomainError("Sellmeier index outside (1, 3) at the nominal signal");
  });
  const auto& wg = c.waveguide;
  if (!(wg.length_mm > 0.0)) throw ConfigError("waveguide.length_mm", "must be > 0");
  if (!(wg.qpm_period_um > 0.0)) throw ConfigError("waveguide.qpm_period_um", "must be > 0");
  if (!(wg.pigtail_loss_db >= 0.0)) throw ConfigError("waveguide.pigtail_loss_db", "must be >= 0");
  if (!(wg.facet_throughput_loss_db >= 0.0)) {
    throw ConfigError("waveguide.facet_throughput_loss_db", "must be >= 0");
  }
  at_path("waveguide", [&] { wg.validate(); });

  const auto set = c.anchor_sets.find(c.anchor_set);
  if (set == c.anchor_sets.end()) {
    throw ConfigError("calibration.anchor_set", "no anchor set named '" + c.anchor_set + "'");
  }
  for (const auto& [name, anchors] : c.anchor_sets) {
    const std::string p = "calibration.anchor_sets." + name;
    if (anchors.empty()) throw ConfigError(p, "needs at least one anchor");
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      at_path(indexed(p, i), [&] {
        (void)Wavelength(anchors[i].pump_nm);
        (void)Wavelength(anchors[i].signal_nm);
      });
      for (std::size_t k = 0; k < i; ++k) {
        if (anchors[k].pump_nm == anchors[i].pump_nm) {
          throw ConfigError(indexed(p, i), "duplicate anchor pump wavelength");
        }
      }
    }
  }

  for (std::size_t i = 0; i < c.filters.size(); ++i) {
    at_path(indexed("filters", i), [&] { c.filters[i].validate(); });
  }
  at_path("vbg", [&] {
    if (c.vbg.kind != FilterKind::reflective_grating) {
      throw DomainError("kind must be reflective_grating");
    }
    (void)VbgState(c.vbg, c.vbg.center_nm, c.vbg_tuning_min_nm, c.vbg_tuning_max_nm);
  });
  at_path("detector", [&] { c.detector.validate(); });

  if (c.conversion_points.size() < 2) throw ConfigError("conversion.points", "needs at least 2 points");
  for (std::size_t i = 0; i < c.conversion_points.size(); ++i) {
    const auto& p = c.conversion_points[i];
    if (!(p.pump_mw > 0.0) || !(p.value > 0.0 && p.value < 1.0)) {
      throw ConfigError(indexed("conversion.points", i),
                        "needs pump_mw > 0 and efficiency in (0, 1)");
    }
  }
  if (!(c.max_pump_mw > 0.0)) throw ConfigError("conversion.max_pump_mw", "must be > 0");
  if (c.noise_points.size() < 2) throw ConfigError("noise.points", "needs at least 2 points");
  for (std::size_t i = 0; i < c.noise_points.size(); ++i) {
    const auto& p = c.noise_points[i];
    if (!(p.pump_mw > 0.0) || !(p.value > 0.0)) {
      throw ConfigError(indexed("noise.points", i), "needs pump_mw > 0 and rate_cps > 0");
    }
  }

  const auto& op = c.operating_point;
  if (!(op.efficiency > 0.0 && op.efficiency <= 1.0)) {
    throw ConfigError("operating_point.efficiency", "must lie in (0, 1]");
  }
  if (!(op.noise_cps >= 0.0)) throw ConfigError("operating_point.noise_cps", "must be >= 0");
  if (!(op.pump_mw >= 0.0)) throw ConfigError("operating_point.pump_mw", "must be >= 0");
  at_path("operating_point.signal_nm", [&] { (void)Wavelength(op.signal_nm); });

  at_path("scan", [&] { c.scan.validate(); });
  if (c.scan.pump_power_mw > c.max_pump_mw) {
    throw ConfigError("scan.pump_power_mw", "exceeds conversion.max_pump_mw");
  }
  if (op.pump_mw > c.max_pump_mw) {
    throw ConfigError("operating_point.pump_mw", "exceeds conversion.max_pump_mw");
  }
  if (!(c.signal_step_nm > 0.0)) throw ConfigError("scan.signal_step_nm", "must be > 0");
  if (!(c.signal_margin_nm >= 0.0)) throw ConfigError("scan.signal_margin_nm", "must be >= 0");
  if (c.max_iterations < 1) throw ConfigError("deconvolution.max_iterations", "must be >= 1");
  if (!(c.stagnation_tolerance >= 0.0)) {
    throw ConfigError("deconvolution.stagnation_tolerance", "must be >= 0");
  }
  if (!(c.tikhonov_alpha >= 0.0)) throw ConfigError("deconvolution.tikhonov_alpha", "must be >= 0");
  if (!(c.detection_threshold_sigma > 0.0)) {
    throw ConfigError("detection.threshold_sigma", "must be > 0");
  }
  if (!(c.detection_tolerance_factor > 0.0)) {
    throw ConfigError("detection.position_tolerance_factor", "must be > 0");
  }
  const auto& s = c.source;
  if (s.comb.mode_count < 1) throw ConfigError("source.comb_mode_count", "must be >= 1");
  if (!(s.comb.mode_fwhm_nm > 0.0)) throw ConfigError("source.comb_mode_fwhm_nm", "must be > 0");
  if (!(s.comb.envelope_fwhm_nm > 0.0)) {
    throw ConfigError("source.comb_envelope_fwhm_nm", "must be > 0");
  }
  if (!(s.comb.mode_spacing_nm >= 0.0)) {
    throw ConfigError("source.comb_mode_spacing_nm", "must be >= 0");
  }
  if (!(s.line_fwhm_nm > 0.0)) throw ConfigError("source.line_fwhm_nm", "must be > 0");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& config) {
  nlohmann::json j = to_json(config);
  j.erase("threads");  // parallelism never changes results
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

WaveguideSpec calibrated_waveguide(const ExperimentConfig& config) {
  const auto& anchors = config.anchor_sets.at(config.anchor_set);
  return calibrate_operating_point(config.waveguide, anchors);
}

Instrument make_instrument(const ExperimentConfig& config) {
  Instrument instrument;
  instrument.waveguide = calibrated_waveguide(config);
  instrument.chain = config.filters;
  instrument.vbg =
      VbgState(config.vbg, config.vbg.center_nm, config.vbg_tuning_min_nm, config.vbg_tuning_max_nm);
  instrument.mode = config.kernel_mode;
  return instrument;
}

ConversionFit conversion_fit(const ExperimentConfig& config) {
  return fit_conversion(config.conversion_points);
}

NoiseFit noise_fit(const ExperimentConfig& config) {
  const double floor = config.noise_floor == NoiseFloorInterpretation::additive_dark
                           ? config.detector.dark_rate_cps
                           : 0.0;
  return fit_noise(config.noise_points, floor);
}

ScanRates scan_rates(const ExperimentConfig& config) {
  if (config.rate_source == RateSource::operating_point) {
    return {config.operating_point.efficiency, config.operating_point.noise_cps};
  }
  const double p = config.scan.pump_power_mw;
  return {detection_efficiency(conversion_fit(config).model, p),
          noise_rate(noise_fit(config).model, p)};
}

DeconvolutionOptions deconvolution_options(const ExperimentConfig& config) {
  DeconvolutionOptions o;
  o.algorithm = config.algorithm;
  o.max_iterations = config.max_iterations;
  o.auto_discrepancy = config.auto_discrepancy;
  o.stagnation_tolerance = config.stagnation_tolerance;
  o.tikhonov_alpha = config.tikhonov_alpha;
  return o;
}

}  // namespace upconv
