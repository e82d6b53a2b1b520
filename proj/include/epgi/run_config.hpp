#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "epgi/coincidence.hpp"
#include "epgi/optics.hpp"
#include "epgi/pair_source.hpp"

namespace epgi {

/// How the pipeline obtains its transmission mask.
struct MaskSpec {
  std::string source = "grating";  ///< "grating" | "cat" | "open" | "file"
  std::string path;                ///< PBM path when source == "file"
  double grating_period_um = 60.0;
  double grating_duty = 0.5;
  double grating_angle_rad = 0.0;
  double pixel_pitch_um = 1.0;
  double half_extent_um = 450.0;
};

struct CoincidenceConfig {
  double window_half_width_ns = 25.0;
  double histogram_bin_ns = 10.0;
  double histogram_half_range_ns = 1000.0;
  std::string offset_mode = "auto";  ///< "auto" (from the histogram) | "fixed"
  double fixed_offset_ns = 0.0;

  CoincidenceWindow window(TimePs offset_ps) const {
    return {offset_ps, static_cast<TimePs>(std::llround(window_half_width_ns * 1000.0))};
  }
};

struct ReconstructConfig {
  double bin_size_um = 0.5;
  double field_um = 40.0;
  double smooth_sigma_um = 0.5;  ///< presentation smoothing for binarization only
};

struct FitStageConfig {
  double init_sigma_um = 1.2;
  int restarts = 3;
  int bootstrap_resamples = 50;
  int max_iterations = 2000;
};

/// Everything one pipeline invocation needs. Built from a preset, then
/// overridden by the config file, then by command-line flags.
struct RunConfig {
  std::string preset;  ///< "cat-run", "grating-run" or empty
  std::string out_dir = "out";
  int threads = 1;
  SimConfig sim;
  std::string optics_preset_name = "grating-run";
  double target_magnification = 0;  ///< used instead of the preset when > 0
  OpticalSystem optics;             ///< resolved by finalize()
  MaskSpec mask;
  CoincidenceConfig coincidence;
  ReconstructConfig reconstruct;
  FitStageConfig fit;

  /// Solves the optical system and validates all sections.
  void finalize();
};

/// Full defaults for the named preset ("cat-run" or "grating-run").
RunConfig preset_config(const std::string& name);

/// Loads a run configuration: preset defaults, overridden by the config
/// file (line-oriented `key = value` under `[section]` headers, a TOML
/// subset), then by the explicit overrides. Unknown keys are rejected.
RunConfig load_run_config(const std::optional<std::string>& config_path,
                          const std::optional<std::string>& preset,
                          const std::optional<std::uint64_t>& seed_override,
                          const std::optional<std::string>& out_dir_override,
                          std::optional<int> threads_override);

/// Canonical text form of the semantically meaningful fields (excludes
/// out_dir and threads); identical configs serialize identically.
std::string serialize_run_config(const RunConfig& cfg);

/// FNV-1a 64 over the canonical serialization.
std::uint64_t config_hash(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

/// Builds the mask described by the spec (generators or file).
Mask build_mask(const MaskSpec& spec);

}  // namespace epgi
