#include "epgi/reconstruction.hpp"

#include <algorithm>
#include <string>

namespace epgi {

double GhostImage::total() const {
  double t = 0;
  for (double c : counts) t += c;
  return t;
}

GhostImage raw_image(const ValidatedStream<ElectronEvent>& electrons, const Binning& binning) {
  GhostImage img(binning);
  img.duration_ps = electrons.header().duration_ps;
  img.n_input = electrons.events().size();
  for (const auto& e : electrons.events()) {
    const int ix = binning.index_x(e.x);
    const int iy = binning.index_y(e.y);
    if (binning.contains(ix, iy)) {
      img.at(ix, iy) += 1.0;
      ++img.n_contributing;
    }
  }
  return img;
}

GhostImage accumulate_ghost_image(const PairList& pairs,
                                  const ValidatedStream<ElectronEvent>& electrons,
                                  const Binning& binning) {
  GhostImage img(binning);
  img.duration_ps = electrons.header().duration_ps;
  img.n_input = pairs.size();
  const auto& es = electrons.events();
  for (const auto& p : pairs.pairs) {
    if (p.electron_index >= es.size())
      throw IndexOutOfRange("pair electron index " + std::to_string(p.electron_index));
    const auto& e = es[p.electron_index];
    const int ix = binning.index_x(e.x);
    const int iy = binning.index_y(e.y);
    if (binning.contains(ix, iy)) {
      img.at(ix, iy) += 1.0;
      ++img.n_contributing;
    }
  }
  return img;
}

GhostImage subtract_accidentals(const GhostImage& ghost, const GhostImage& raw,
                                double accidental_pairs) {
  if (!(ghost.binning == raw.binning)) throw BinningMismatch();
  const double raw_total = raw.total();
  if (!(raw_total > 0)) throw Error("raw image is empty; cannot shape the accidental floor");
  GhostImage out = ghost;
  for (std::size_t i = 0; i < out.counts.size(); ++i)
    out.counts[i] = std::max(0.0, ghost.counts[i] - accidental_pairs * raw.counts[i] / raw_total);
  out.background_subtracted = true;
  out.accidental_pairs_subtracted = accidental_pairs;
  return out;
}

GhostImage merge(const GhostImage& a, const GhostImage& b) {
  if (!(a.binning == b.binning)) throw BinningMismatch();
  GhostImage out = a;
  for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += b.counts[i];
  out.n_contributing += b.n_contributing;
  out.n_input += b.n_input;
  out.duration_ps = std::max(a.duration_ps, b.duration_ps);
  return out;
}

BinaryImage binarize_otsu(const GhostImage& img, double smooth_sigma_um) {
  std::vector<double> smoothed = img.counts;
  const double sigma_px = smooth_sigma_um / img.binning.bin_size_um;
  gaussian_blur_inplace(smoothed, img.binning.nx, img.binning.ny, sigma_px);
  const double thr = otsu_threshold(smoothed);
  BinaryImage out;
  out.binning = img.binning;
  out.bits.resize(smoothed.size());
  for (std::size_t i = 0; i < smoothed.size(); ++i) out.bits[i] = smoothed[i] > thr ? 1 : 0;
  return out;
}

BinaryImage mask_footprint_image(const Mask& mask, const OpticalSystem& sys,
                                 const Binning& binning, const BeamProfile& beam) {
  BinaryImage out;
  out.binning = binning;
  out.bits.assign(binning.size(), 0);
  ChiefRayTracer tracer(sys);
  const double r = 0.5 * beam.diameter_um;
  for (int iy = 0; iy < binning.ny; ++iy)
    for (int ix = 0; ix < binning.nx; ++ix) {
      const Vec2 c = binning.center(ix, iy);
      if ((c - beam.center_um).norm() > r) continue;
      bool open = false;
      try {
        open = transmit(mask, tracer.trace(c));
      } catch (const OpticsOutOfRange&) {
        open = false;
      }
      out.bits[static_cast<std::size_t>(iy) * binning.nx + ix] = open ? 1 : 0;
    }
  return out;
}

}  // namespace epgi
