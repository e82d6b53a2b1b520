#pragma once

#include <cstdint>
#include <vector>

#include "epgi/event_model.hpp"
#include "epgi/geometry.hpp"
#include "epgi/optics.hpp"
#include "epgi/rng.hpp"

namespace epgi {

/// Uniform disc illumination in the sample plane.
struct BeamProfile {
  Vec2 center_um{0, 0};
  double diameter_um = 31.0;

  void validate() const;
};

/// Generator parameters. Probabilities model the physics the pipeline does
/// not resolve: pair_yield is the chance an electron emits a collectable
/// in-band CL photon, the two filter probabilities model energy filtering
/// (the 2-3 eV loss window itself is metadata), and the detection
/// efficiency absorbs mirror reflectivity and SPCM quantum efficiency.
struct SimConfig {
  double run_duration_s = 25.0;
  double electron_rate_hz = 2.0e5;
  double pair_yield = 0.2;
  double photon_detection_efficiency = 0.6;
  double electron_pass_given_pair = 0.95;
  double electron_leak_given_no_pair = 0.05;
  double dark_count_rate_hz = 500.0;
  BeamProfile beam;
  double correlation_sigma_um = 0.87;
  double jitter_sigma_ps = 21233.0;  // coincidence peak FWHM ~ 50 ns
  TimePs fixed_offset_ps = 137'000;
  int timestamp_quantum_ticks = 25;  // ticks of 1/16 ns; 25 -> 1.5625 ns
  std::uint64_t rng_seed = 1;
  // beam metadata, not used by the generator
  double beam_energy_kev = 200.0;
  double beam_current_pa = 23.0;

  void validate() const;
};

/// Per-pair provenance kept for tests and diagnostics.
struct PairRecord {
  TimePs electron_t = 0;
  Vec2 emission_um;       ///< electron (= pair origin) position, sample plane
  Vec2 image_um;          ///< photon arrival in the mask plane
  bool transmitted = false;
  bool photon_detected = false;   ///< entered the photon stream
  bool electron_recorded = false;
};

struct GroundTruth {
  std::vector<PairRecord> pairs;
  std::uint64_t n_electrons_emitted = 0;
  std::uint64_t n_electrons_recorded = 0;
  std::uint64_t n_leak_electrons = 0;   ///< recorded without emitting a pair
  std::uint64_t n_dark_photons = 0;
  std::uint64_t n_photons_detected = 0;  ///< pair photons in the stream
};

struct SimResult {
  ElectronStream electrons;
  PhotonStream photons;
  GroundTruth truth;
};

struct PairDraw {
  Vec2 electron_pos_um;
  Vec2 photon_source_um;
  TimePs emission_offset_ps = 0;  ///< pair is created simultaneously
};

/// Electron position uniform over the beam disc; photon source displaced by
/// an isotropic bivariate Gaussian of the given per-axis sigma.
PairDraw draw_pair(const BeamProfile& beam, double correlation_sigma_um, Rng& rng);

/// Rounds to the nearest multiple of `ticks` base ticks of 1/16 ns (62.5 ps),
/// in exact integer arithmetic; odd multiples (half-integer picoseconds)
/// round the 0.5 ps remainder away from zero.
TimePs quantize_time(TimePs t_ps, int ticks);

/// End-to-end Monte Carlo of one acquisition. Electron emissions are
/// Poisson in time and uniform over the beam disc; a pair_yield fraction
/// emit a photon which is traced through the optics, gated by the mask,
/// detected with the configured efficiency, time-tagged with the fixed
/// offset plus Gaussian jitter, and quantized. Electrons pass the energy
/// filter with electron_pass_given_pair (electron_leak_given_no_pair if no
/// pair). Dark counts are an independent Poisson stream. Both streams are
/// sorted and truncated to [0, T]. Generation runs in 64 fixed time slices
/// with per-slice derived seeds, so the output is bit-identical for any
/// thread count.
SimResult simulate_run(const SimConfig& cfg, const Mask& mask, const OpticalSystem& optics,
                       int n_threads = 1);

/// Two independent homogeneous Poisson streams on [0, T].
std::pair<ElectronStream, PhotonStream> background_streams(double electron_rate_hz,
                                                           double photon_rate_hz,
                                                           double duration_s, Rng& rng);

}  // namespace epgi
