#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace epgi {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigInvalid : Error {
  explicit ConfigInvalid(const std::string& msg) : Error("config invalid: " + msg) {}
};

// event_model
struct OutOfOrder : Error {
  std::size_t index;
  explicit OutOfOrder(std::size_t i)
      : Error("event stream out of order at index " + std::to_string(i)), index(i) {}
};
struct NegativeTime : Error {
  std::size_t index;
  explicit NegativeTime(std::size_t i)
      : Error("negative timestamp at index " + std::to_string(i)), index(i) {}
};
struct BeyondDuration : Error {
  std::size_t index;
  explicit BeyondDuration(std::size_t i)
      : Error("timestamp beyond run duration at index " + std::to_string(i)), index(i) {}
};
struct OutOfFieldOfView : Error {
  std::size_t index;
  explicit OutOfFieldOfView(std::size_t i)
      : Error("event position outside field of view at index " + std::to_string(i)), index(i) {}
};

// optics
struct NoIntersection : Error {
  NoIntersection() : Error("ray does not intersect the mirror surface") {}
};
struct HoleClipped : Error {
  HoleClipped() : Error("ray hits the mirror inside the beam hole") {}
};
struct OutsideNA : Error {
  OutsideNA() : Error("ray hits the mirror outside the collection aperture") {}
};
struct OpticsOutOfRange : Error {
  explicit OpticsOutOfRange(const std::string& msg) : Error("point outside traceable region: " + msg) {}
};
struct NoConvergence : Error {
  double best_residual;
  explicit NoConvergence(double residual)
      : Error("iteration did not converge, best residual " + std::to_string(residual)),
        best_residual(residual) {}
};

// coincidence
struct InvalidRange : Error {
  explicit InvalidRange(const std::string& msg) : Error("invalid histogram range: " + msg) {}
};
struct DegenerateTotals : Error {
  DegenerateTotals() : Error("correlation normalization requires N_e, N_gamma, T > 0") {}
};
struct NoSignificantPeak : Error {
  NoSignificantPeak() : Error("no significant coincidence peak in histogram") {}
};
struct InsufficientSideband : Error {
  InsufficientSideband() : Error("sideband counts too low for accidental estimate") {}
};

// reconstruction
struct IndexOutOfRange : Error {
  explicit IndexOutOfRange(const std::string& msg) : Error("index out of range: " + msg) {}
};
struct BinningMismatch : Error {
  BinningMismatch() : Error("image binning geometries differ") {}
};

// cli_io
struct BadMagic : Error {
  BadMagic() : Error("bad file magic") {}
};
struct VersionUnsupported : Error {
  std::uint16_t version;
  explicit VersionUnsupported(std::uint16_t v)
      : Error("unsupported file format version " + std::to_string(v)), version(v) {}
};
struct TruncatedRecord : Error {
  TruncatedRecord() : Error("file truncated mid-record") {}
};
struct CountMismatch : Error {
  CountMismatch() : Error("record count does not match header") {}
};

}  // namespace epgi
