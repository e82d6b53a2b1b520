#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epgi/errors.hpp"
#include "epgi/geometry.hpp"

namespace epgi {

/// Paraboloidal collection mirror. In the mirror frame the collection axis
/// is +x, the electron beam runs along +z, the focus sits at the origin and
/// the surface satisfies y^2 + z^2 = 4 f (x + f). The beam hole is a
/// circular clip of the surface around the point (0, 0, 2f) where the
/// electron beam passes through.
struct ParabolicMirror {
  double focal_length_um = 750.0;
  double numerical_aperture = 0.58;
  double beam_hole_diameter_um = 300.0;
  Vec3 collection_axis{1, 0, 0};  ///< paraboloid axis, unit vector (lab frame)
  Vec3 beam_axis{0, 0, 1};        ///< electron beam axis, unit vector (lab frame)

  double aperture_half_angle() const { return std::asin(numerical_aperture); }
  /// Surface point pierced by the electron beam, mirror frame.
  Vec3 hole_center() const { return {0, 0, 2 * focal_length_um}; }

  void validate() const;
};

struct Ray {
  Vec3 origin;     ///< um
  Vec3 direction;  ///< unit vector

  Ray(Vec3 o, Vec3 d) : origin(o), direction(d.normalized()) {}
};

/// Photon path from the sample to the mask plane: parabolic mirror, then a
/// selection aperture and thin lens co-located on the folded axis (the line
/// through the beam-hole shadow, parallel to the collection axis), then the
/// image plane where the mask sits. The paper's stated demagnifications are
/// reproduced by solving lens_to_image for a target magnification rather
/// than by guessing the unpublished bench layout.
struct OpticalSystem {
  ParabolicMirror mirror;
  double lens_focal_length_mm = 150.0;
  double mirror_to_lens_mm = 2.0;           ///< focus to aperture/lens station
  double lens_to_image_mm = 24.0;           ///< station to mask plane
  double selection_aperture_radius_mm = 0.2;
  double magnification = 16.0;              ///< sample->image, filled by solver

  void validate() const;
};

/// Binary transmission raster in the photon image plane. Bit 1 = open.
/// Pixel (ix, iy) covers (origin + pitch*(ix, iy), origin + pitch*(ix+1, iy+1)],
/// lower-open: a point exactly on a pixel boundary belongs to the pixel with
/// the lower index.
struct Mask {
  std::vector<std::uint8_t> bits;  ///< row-major, height*width, 1 = open
  int width = 0;
  int height = 0;
  double pixel_pitch_um = 1.0;
  Vec2 origin_um{0, 0};  ///< lower-left corner of pixel (0,0), image plane
  std::string name;

  bool open_at(int ix, int iy) const {
    if (ix < 0 || iy < 0 || ix >= width || iy >= height) return false;
    return bits[static_cast<std::size_t>(iy) * width + ix] != 0;
  }
  double open_fraction() const;
  void validate() const;
};

/// Reflects a ray off the mirror. Solves the ray-paraboloid quadratic for
/// the first intersection along the ray, rejects hits inside the beam hole
/// or outside the NA acceptance (measured from the focus, around the beam
/// axis), and returns the reflected ray anchored at the intersection.
Ray reflect(const Ray& ray, const ParabolicMirror& mirror);

/// Chief-ray map from a sample-plane point (um) to the image (mask) plane
/// (um). The chief ray is the ray whose reflection passes through the
/// selection-aperture center; it is found by a 2-D Newton solve over the
/// mirror intersection point, then propagated through the thin lens.
/// Throws OpticsOutOfRange outside |point| < 0.25 f.
Vec2 trace_to_image(const Vec2& point, const OpticalSystem& sys);

/// Same map for a source displaced axially off the sample plane (used when
/// fitting the sample-to-mirror distance).
Vec2 trace_to_image(const Vec3& source, const OpticalSystem& sys);

/// Numerical inverse of trace_to_image (damped Newton, finite-difference
/// Jacobian, tolerance 1e-4 um, 100 iterations). Throws NoConvergence with
/// the best residual reached.
Vec2 back_project(const Vec2& image_point, const OpticalSystem& sys);

/// |d image / d point| at the origin by central finite differences,
/// averaged over both axes.
double effective_magnification(const OpticalSystem& sys);

/// True iff the raster pixel containing image_point is open; points outside
/// the raster are blocked.
bool transmit(const Mask& mask, const Vec2& image_point);

/// Solves lens_to_image so that effective_magnification(sys) == target and
/// the on-axis map is inverting (a point at +x images at -x).
OpticalSystem solve_for_magnification(OpticalSystem sys, double target);

/// Named systems reproducing the published demagnifications:
/// "cat-run" (M = 19) and "grating-run" (M = 16).
OpticalSystem optics_preset(const std::string& name);

/// Aperture-averaged trace: a dense direction bundle from `source` over the
/// mirror acceptance, clipped by the beam hole and the selection aperture,
/// through the lens to the image plane.
struct BundleTrace {
  Vec2 centroid;    ///< mean image position of accepted rays, um
  Vec2 rms;         ///< per-axis spread about the centroid, um
  std::size_t rays = 0;
};
BundleTrace trace_bundle_to_image(const Vec3& source, const OpticalSystem& sys,
                                  int n_polar = 48, int n_azimuth = 96);

/// Stateful tracer that warm-starts each Newton solve from the previous
/// solution; use for grids and event loops.
class ChiefRayTracer {
 public:
  explicit ChiefRayTracer(const OpticalSystem& sys);
  Vec2 trace(const Vec3& source);
  Vec2 trace(const Vec2& point) { return trace(Vec3{point.x, point.y, 0.0}); }

 private:
  const OpticalSystem& sys_;
  Vec2 mirror_guess_;  ///< (y, z) of the last solved mirror point
};

// Mask construction and I/O -------------------------------------------------

/// Uniformly open square mask centered on the axis.
Mask make_open_mask(double half_extent_um, double pixel_pitch_um);

/// Absorptive line grating: square wave of the given period and duty cycle,
/// lines perpendicular to the direction (cos angle, sin angle).
Mask make_grating_mask(double period_um, double duty_cycle, double angle_rad,
                       double half_extent_um, double pixel_pitch_um);

/// Cat-shaped transmission mask, about 500 x 600 um with ~70 x 50 um eye
/// holes, drawn procedurally.
Mask make_cat_mask(double pixel_pitch_um = 2.0);

/// 1-bit PBM (P4) plus "<path>.meta" sidecar carrying pixel pitch and
/// origin. PBM black (bit 1) = blocked, white = open.
void write_mask(const Mask& mask, const std::string& pbm_path);
Mask read_mask(const std::string& pbm_path);

}  // namespace epgi
