#pragma once

#include <string>
#include <vector>

#include "epgi/resolution_fit.hpp"
#include "epgi/run_config.hpp"

namespace epgi {

/// Key numbers and artifact paths produced by a pipeline invocation.
struct PipelineResult {
  std::string out_dir;
  std::string config_hash;

  // simulate
  std::uint64_t n_electrons = 0;
  std::uint64_t n_photons = 0;
  std::uint64_t n_true_pairs_detected = 0;

  // g2 / offset
  TimePs estimated_offset_ps = 0;
  double offset_uncertainty_ps = 0;
  double g2_peak = 0;
  double g2_background_mean = 0;
  double g2_background_worst_nsigma = 0;

  // match
  std::uint64_t n_matched_pairs = 0;
  CoincidenceWindow window;
  double expected_accidental_pairs = 0;

  // reconstruct
  double dice_vs_truth = 0;
  double dice_after_subtraction = 0;

  // fit
  FitResult fit;
  bool fit_ran = false;
};

/// Runs the requested stages in order, reading any missing stage inputs
/// from files written by earlier invocations into the same out_dir.
/// Valid stages: simulate, g2, match, reconstruct, fit, raytrace, all.
PipelineResult run_pipeline(const RunConfig& cfg, const std::vector<std::string>& stages);

}  // namespace epgi
