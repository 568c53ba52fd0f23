#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adcps/scenario.hpp"

namespace adcps {

// Grid axes and calibration settings from the optional "sweep" and
// "calibration" config sections.
struct SweepConfig {
  SweepAxes axes;
  std::vector<double> sigma_w;  // fne-surface noise axis
  std::vector<int> times;       // fne-surface time axis
  std::vector<double> kappa_grid;
  std::vector<double> h_grid;
  double target_fpe = 0.02;
  int calibration_runs = 20;
};

struct LoadedConfig {
  ScenarioConfig scenario;
  SweepConfig sweep;
};

// Parse and validate a JSON config. Relative file paths inside the config
// resolve against the config's directory. Throws config_error on any
// structural or dimensional problem.
LoadedConfig load_config(const std::filesystem::path& path);
LoadedConfig parse_config(const std::string& json_text,
                          const std::filesystem::path& base_dir = ".");

// Built-in cart-pole scenario used when no config is given.
LoadedConfig default_ip_config();

}  // namespace adcps
