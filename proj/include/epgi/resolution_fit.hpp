#pragma once

#include <cstdint>
#include <vector>

#include "epgi/image.hpp"
#include "epgi/optics.hpp"
#include "epgi/reconstruction.hpp"

namespace epgi {

/// Calibration grating in the photon image plane. Lines run perpendicular
/// to the direction (cos angle, sin angle); transmission is a square wave
/// of the given period and duty cycle along that direction.
struct GratingSpec {
  double period_um = 60.0;
  double duty_cycle = 0.5;
  double line_angle_rad = 0.0;
  double phase_offset_um = 0.0;

  void validate() const;
};

/// PSF width plus the geometric nuisance parameters the model leaves open.
struct FitParams {
  double sigma_um = 1.0;   ///< Gaussian PSF standard deviation, sample plane
  double amplitude = 1.0;
  double baseline = 0.0;
  Vec2 shift_um{0, 0};     ///< lateral sample offset
  double rotation_rad = 0; ///< sample rotation about the field center
  double axial_shift_um = 0;  ///< sample displacement along the beam axis
};

struct FitOptions {
  double tolerance = 1e-6;
  int max_iterations = 2000;
  int restarts = 3;  ///< total starts: the given init plus perturbed copies
  int bootstrap_resamples = 50;
  int bootstrap_max_iterations = 300;
  std::uint64_t bootstrap_seed = 427;
  /// Matched-pair electron positions; enables the pair bootstrap.
  const std::vector<Vec2>* pair_positions = nullptr;
};

struct FitResult {
  FitParams params;
  double fwhm_um = 0;
  double residual_l1 = 0;
  int iterations = 0;
  bool converged = false;
  double sigma_uncertainty_um = 0;  ///< bootstrap std of sigma; 0 without bootstrap
};

/// 2 sqrt(2 ln 2) * sigma.
double fwhm(double sigma);

/// Binary {0, 1} image of the grating as seen in the sample plane: each
/// grid point is traced to the image plane and gated by the analytic square
/// wave. Line distortion arises from the optics map.
Image ideal_target_image(const GratingSpec& spec, const OpticalSystem& sys,
                         const Binning& grid);

/// Gaussian blur with sigma in sample-plane micrometers (kernel truncated
/// at 5 sigma, edge-renormalized); sigma = 0 is the identity.
Image blur(const Image& img, double sigma_um);

/// amplitude * blur(ideal target under the shifted/rotated/axially
/// displaced geometry, sigma) + baseline.
Image model_image(const FitParams& params, const GratingSpec& spec, const OpticalSystem& sys,
                  const Binning& grid);

/// Least-absolute-error fit of the blurred grating model to a ghost image
/// by Nelder-Mead over all FitParams, best of `restarts` starts. When pair
/// positions are supplied, sigma uncertainty is estimated by refitting
/// bootstrap resamples of the pairs.
FitResult fit(const GhostImage& data, const GratingSpec& spec, const OpticalSystem& sys,
              const FitParams& init, const FitOptions& options = {});

}  // namespace epgi
