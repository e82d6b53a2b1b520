#pragma once

#include <cstdint>
#include <vector>

#include "epgi/coincidence.hpp"
#include "epgi/event_model.hpp"
#include "epgi/image.hpp"
#include "epgi/optics.hpp"
#include "epgi/pair_source.hpp"

namespace epgi {

/// 2-D histogram of electron positions in the sample plane, with exposure
/// metadata. Bin values are exact counts until a background subtraction
/// makes them real-valued.
struct GhostImage {
  Binning binning;
  std::vector<double> counts;  ///< row-major, iy * nx + ix
  TimePs duration_ps = 0;
  std::uint64_t n_contributing = 0;  ///< entries that landed inside the field
  std::uint64_t n_input = 0;         ///< entries offered
  CoincidenceWindow window{};        ///< window used for pair selection, if any
  bool background_subtracted = false;
  double accidental_pairs_subtracted = 0;

  explicit GhostImage(const Binning& b = {}) : binning(b), counts(b.size(), 0.0) {}

  double& at(int ix, int iy) { return counts[static_cast<std::size_t>(iy) * binning.nx + ix]; }
  double at(int ix, int iy) const { return counts[static_cast<std::size_t>(iy) * binning.nx + ix]; }
  double total() const;
};

/// Binary raster on the same grid as a GhostImage.
struct BinaryImage {
  Binning binning;
  std::vector<std::uint8_t> bits;
};

/// Histogram of every electron position (the raw beam image).
GhostImage raw_image(const ValidatedStream<ElectronEvent>& electrons, const Binning& binning);

/// Histogram of electron positions restricted to matched pairs; an electron
/// appearing in k pairs contributes k counts. Throws IndexOutOfRange for
/// stale pair indices.
GhostImage accumulate_ghost_image(const PairList& pairs,
                                  const ValidatedStream<ElectronEvent>& electrons,
                                  const Binning& binning);

/// ghost - accidental_pairs * raw / sum(raw), clamped at zero. The raw
/// image supplies the shape of the accidental floor (accidentals sample the
/// full beam). Binning must match; sum(raw) must be positive.
GhostImage subtract_accidentals(const GhostImage& ghost, const GhostImage& raw,
                                double accidental_pairs);

/// Merge of two disjoint-exposure images (bin-wise sum); used by the
/// slice-parallel accumulation contract.
GhostImage merge(const GhostImage& a, const GhostImage& b);

/// Otsu binarization after presentation smoothing (smoothing never feeds
/// the resolution fit).
BinaryImage binarize_otsu(const GhostImage& img, double smooth_sigma_um);

/// Ground-truth footprint for overlap metrics: bins whose center lies in
/// the beam disc and back-maps to an open mask pixel.
BinaryImage mask_footprint_image(const Mask& mask, const OpticalSystem& sys,
                                 const Binning& binning, const BeamProfile& beam);

}  // namespace epgi
