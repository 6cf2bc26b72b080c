#pragma once

#include "upconv/config.hpp"
#include "upconv/spectrometer.hpp"

namespace fixture {

inline upconv::Instrument instrument(const std::string& anchors = "single") {
  upconv::ExperimentConfig cfg;
  cfg.anchor_set = anchors;
  return upconv::make_instrument(cfg);
}

// A reduced scan that keeps the unit tests fast.
inline upconv::ScanPlan short_plan(double start = 1945.0, double stop = 1955.0) {
  upconv::ScanPlan plan;
  plan.pump_start_nm = start;
  plan.pump_stop_nm = stop;
  plan.pump_step_nm = 0.05;
  return plan;
}

}  // namespace fixture
