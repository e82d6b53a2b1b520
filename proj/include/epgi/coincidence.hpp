#pragma once

#include <cstdint>
#include <vector>

#include "epgi/errors.hpp"
#include "epgi/event_model.hpp"

namespace epgi {

/// Histogram of time differences tau = t_e - t_gamma over all
/// electron-photon pairs, covering [tau_min, tau_min + n_bins * bin_width)
/// with half-open bins.
struct TimeDifferenceHistogram {
  TimePs tau_min = 0;
  TimePs bin_width = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_electrons = 0;
  std::uint64_t n_photons = 0;
  TimePs duration_ps = 0;

  int n_bins() const { return static_cast<int>(counts.size()); }
  TimePs tau_max() const { return tau_min + bin_width * n_bins(); }
  TimePs bin_center(int i) const { return tau_min + bin_width * i + bin_width / 2; }
  std::uint64_t total() const;
};

/// Normalized cross-correlation g2(tau) with per-bin statistical error.
struct CorrelationFunction {
  std::vector<TimePs> tau_center;
  std::vector<double> g2;
  std::vector<double> sigma;
};

/// Closed acceptance interval |tau - offset| <= half_width.
struct CoincidenceWindow {
  TimePs offset_ps = 0;
  TimePs half_width_ps = 25'000;  // +-25 ns
};

struct CoincidencePair {
  std::uint32_t electron_index = 0;
  std::uint32_t photon_index = 0;
  TimePs tau = 0;

  bool operator==(const CoincidencePair&) const = default;
};

/// All in-window pairs, ordered by electron index then photon index.
struct PairList {
  std::vector<CoincidencePair> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

struct OffsetEstimate {
  TimePs offset_ps = 0;
  double uncertainty_ps = 0;
};

/// Counts every (electron, photon) pair with tau in range, via a sorted
/// two-pointer sweep in O(N_e + N_gamma + matches). The range must span at
/// least 4 bins and divide evenly into bins.
TimeDifferenceHistogram time_difference_histogram(const ValidatedStream<ElectronEvent>& electrons,
                                                  const ValidatedStream<PhotonEvent>& photons,
                                                  TimePs tau_min, TimePs tau_max,
                                                  TimePs bin_width);

/// g2(bin) = counts / (N_e N_gamma bin_width (T - |tau|) / T^2), the exact
/// accidental expectation for homogeneous Poisson streams on [0, T];
/// independent streams give g2 statistically consistent with 1.
CorrelationFunction g2(const TimeDifferenceHistogram& h);

/// Locates the coincidence peak: background level from the outer 25% of
/// bins on each side, peak bins selected above half prominence, offset from
/// their background-subtracted centroid. Requires peak > background + 5 sigma.
OffsetEstimate estimate_offset(const TimeDifferenceHistogram& h);

/// Every pair with |t_e - t_gamma - offset| <= half_width (closed interval,
/// boundary ties included), by a two-pointer sliding window. Equals the
/// brute-force all-pairs filter exactly.
PairList match_coincidences(const ValidatedStream<ElectronEvent>& electrons,
                            const ValidatedStream<PhotonEvent>& photons,
                            const CoincidenceWindow& window, int n_threads = 1);

/// Expected accidental pairs inside the window, from the mean sideband
/// density (bins with |tau - offset| > 4 half_width, needing >= 100 counts).
double accidental_rate(const TimeDifferenceHistogram& h, const CoincidenceWindow& window);

}  // namespace epgi
