#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "epgi/errors.hpp"

namespace epgi {

/// All timestamps are integer picoseconds since run start (64-bit signed,
/// enough for ~106 days). Integer time gives exact equality semantics for
/// coincidence tests and removes float drift from long runs.
using TimePs = std::int64_t;

constexpr TimePs seconds_to_ps(double s) {
  return static_cast<TimePs>(std::llround(s * 1e12));
}

/// Rectangular field of view in the TEM sample plane, micrometers.
struct FieldOfView {
  float x_min = -1e9f;
  float y_min = -1e9f;
  float x_max = 1e9f;
  float y_max = 1e9f;

  bool contains(float x, float y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

/// Electron detection, position mapped back to the TEM sample plane (the
/// plane the projective electron optics image, and the plane resolution is
/// reported in).
struct ElectronEvent {
  TimePs t = 0;  ///< arrival time t_e, ps
  float x = 0;   ///< sample-plane position, um
  float y = 0;

  bool operator==(const ElectronEvent&) const = default;
};

/// Photon detection on the bucket detector: time only, no position.
struct PhotonEvent {
  TimePs t = 0;  ///< arrival time t_gamma, ps

  bool operator==(const PhotonEvent&) const = default;
};

struct StreamHeader {
  TimePs duration_ps = 0;       ///< run length T
  FieldOfView fov;              ///< declared detector field of view
  double nominal_rate_hz = 0;   ///< informational
  std::uint64_t seed = 0;       ///< provenance; 0 = unknown

  bool operator==(const StreamHeader& o) const {
    return duration_ps == o.duration_ps && fov.x_min == o.fov.x_min &&
           fov.y_min == o.fov.y_min && fov.x_max == o.fov.x_max &&
           fov.y_max == o.fov.y_max && nominal_rate_hz == o.nominal_rate_hz &&
           seed == o.seed;
  }
};

template <class E>
struct EventStream {
  StreamHeader header;
  std::vector<E> events;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }

  bool operator==(const EventStream& o) const {
    return header == o.header && events == o.events;
  }
};

using ElectronStream = EventStream<ElectronEvent>;
using PhotonStream = EventStream<PhotonEvent>;

/// Stream whose invariants (sort order, time range, field of view) have
/// been checked. Constructed only by validate_stream.
template <class E>
class ValidatedStream {
 public:
  const EventStream<E>& get() const { return stream_; }
  const std::vector<E>& events() const { return stream_.events; }
  const StreamHeader& header() const { return stream_.header; }

 private:
  explicit ValidatedStream(EventStream<E> s) : stream_(std::move(s)) {}
  EventStream<E> stream_;

  template <class T>
  friend ValidatedStream<T> validate_stream(EventStream<T> stream);
};

namespace detail {
inline void check_position(const ElectronEvent& e, const FieldOfView& fov, std::size_t i) {
  if (!std::isfinite(e.x) || !std::isfinite(e.y) || !fov.contains(e.x, e.y))
    throw OutOfFieldOfView(i);
}
inline void check_position(const PhotonEvent&, const FieldOfView&, std::size_t) {}
}  // namespace detail

/// Checks sort order and range invariants; throws OutOfOrder / NegativeTime /
/// BeyondDuration / OutOfFieldOfView with the offending index. An empty
/// stream is vacuously valid; equal timestamps are allowed.
template <class E>
ValidatedStream<E> validate_stream(EventStream<E> stream) {
  TimePs prev = 0;
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const E& ev = stream.events[i];
    if (ev.t < 0) throw NegativeTime(i);
    if (i > 0 && ev.t < prev) throw OutOfOrder(i);
    if (ev.t > stream.header.duration_ps) throw BeyondDuration(i);
    detail::check_position(ev, stream.header.fov, i);
    prev = ev.t;
  }
  return ValidatedStream<E>(std::move(stream));
}

/// Stable sort by timestamp; events with equal t keep their input order.
template <class E>
EventStream<E> sort_events(EventStream<E> stream) {
  std::stable_sort(stream.events.begin(), stream.events.end(),
                   [](const E& a, const E& b) { return a.t < b.t; });
  return stream;
}

}  // namespace epgi
