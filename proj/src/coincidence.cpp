#include "epgi/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace epgi {

std::uint64_t TimeDifferenceHistogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

TimeDifferenceHistogram time_difference_histogram(const ValidatedStream<ElectronEvent>& electrons,
                                                  const ValidatedStream<PhotonEvent>& photons,
                                                  TimePs tau_min, TimePs tau_max,
                                                  TimePs bin_width) {
  if (bin_width <= 0) throw InvalidRange("bin width must be > 0");
  if (tau_max <= tau_min) throw InvalidRange("tau_max must exceed tau_min");
  const TimePs span = tau_max - tau_min;
  if (span % bin_width != 0) throw InvalidRange("range must divide evenly into bins");
  const TimePs n_bins = span / bin_width;
  if (n_bins < 4) throw InvalidRange("range must span at least 4 bins");

  TimeDifferenceHistogram h;
  h.tau_min = tau_min;
  h.bin_width = bin_width;
  h.counts.assign(static_cast<std::size_t>(n_bins), 0);
  h.n_electrons = electrons.events().size();
  h.n_photons = photons.events().size();
  h.duration_ps = std::max(electrons.header().duration_ps, photons.header().duration_ps);

  const auto& es = electrons.events();
  const auto& ps = photons.events();
  // tau in [tau_min, tau_max)  <=>  t_gamma in (t_e - tau_max, t_e - tau_min]
  std::size_t lo = 0;
  for (const auto& e : es) {
    while (lo < ps.size() && ps[lo].t <= e.t - tau_max) ++lo;
    for (std::size_t j = lo; j < ps.size() && ps[j].t <= e.t - tau_min; ++j) {
      const TimePs tau = e.t - ps[j].t;
      ++h.counts[static_cast<std::size_t>((tau - tau_min) / bin_width)];
    }
  }
  return h;
}

CorrelationFunction g2(const TimeDifferenceHistogram& h) {
  if (h.n_electrons == 0 || h.n_photons == 0 || h.duration_ps <= 0) throw DegenerateTotals();
  CorrelationFunction c;
  c.tau_center.reserve(h.counts.size());
  c.g2.reserve(h.counts.size());
  c.sigma.reserve(h.counts.size());
  const double t = static_cast<double>(h.duration_ps);
  const double rate_product =
      static_cast<double>(h.n_electrons) * static_cast<double>(h.n_photons) / (t * t);
  for (int i = 0; i < h.n_bins(); ++i) {
    const TimePs tc = h.bin_center(i);
    const double overlap = std::max(0.0, t - std::abs(static_cast<double>(tc)));
    const double expected = rate_product * static_cast<double>(h.bin_width) * overlap;
    if (expected <= 0) throw DegenerateTotals();
    const double n = static_cast<double>(h.counts[i]);
    c.tau_center.push_back(tc);
    c.g2.push_back(n / expected);
    c.sigma.push_back(std::sqrt(n) / expected);
  }
  return c;
}

OffsetEstimate estimate_offset(const TimeDifferenceHistogram& h) {
  const int n = h.n_bins();
  const int n_side = std::max(1, n / 4);
  double bg_sum = 0, bg_sq = 0;
  int bg_n = 0;
  auto add_bg = [&](int i) {
    const double v = static_cast<double>(h.counts[i]);
    bg_sum += v;
    bg_sq += v * v;
    ++bg_n;
  };
  for (int i = 0; i < n_side; ++i) add_bg(i);
  for (int i = n - n_side; i < n; ++i) add_bg(i);
  const double bg_mean = bg_sum / bg_n;
  const double bg_var = std::max(0.0, bg_sq / bg_n - bg_mean * bg_mean);
  const double bg_sigma = std::sqrt(bg_var * bg_n / std::max(1, bg_n - 1));

  int peak_bin = 0;
  for (int i = 1; i < n; ++i)
    if (h.counts[i] > h.counts[peak_bin]) peak_bin = i;
  const double peak = static_cast<double>(h.counts[peak_bin]);
  if (!(peak > bg_mean + 5.0 * bg_sigma)) throw NoSignificantPeak();

  const double level = bg_mean + 0.5 * (peak - bg_mean);
  double wsum = 0, csum = 0;
  for (int i = 0; i < n; ++i) {
    const double v = static_cast<double>(h.counts[i]);
    if (v > level) {
      const double w = v - bg_mean;
      wsum += w;
      csum += w * static_cast<double>(h.bin_center(i));
    }
  }
  const double centroid = csum / wsum;
  double var = 0;
  for (int i = 0; i < n; ++i) {
    const double v = static_cast<double>(h.counts[i]);
    if (v > level) {
      const double d = static_cast<double>(h.bin_center(i)) - centroid;
      var += (v - bg_mean) * d * d;
    }
  }
  OffsetEstimate est;
  est.offset_ps = static_cast<TimePs>(std::llround(centroid));
  est.uncertainty_ps = std::sqrt(var) / wsum;
  return est;
}

namespace {

void match_range(const std::vector<ElectronEvent>& es, const std::vector<PhotonEvent>& ps,
                 std::size_t e_begin, std::size_t e_end, TimePs offset, TimePs half_width,
                 std::vector<CoincidencePair>& out) {
  if (e_begin >= e_end || ps.empty()) return;
  // |t_e - t_gamma - offset| <= W  <=>  t_gamma in [t_e - offset - W, t_e - offset + W]
  const TimePs first_lower = es[e_begin].t - offset - half_width;
  std::size_t lo = static_cast<std::size_t>(
      std::lower_bound(ps.begin(), ps.end(), first_lower,
                       [](const PhotonEvent& p, TimePs t) { return p.t < t; }) -
      ps.begin());
  for (std::size_t i = e_begin; i < e_end; ++i) {
    const TimePs lower = es[i].t - offset - half_width;
    const TimePs upper = es[i].t - offset + half_width;
    while (lo < ps.size() && ps[lo].t < lower) ++lo;
    for (std::size_t j = lo; j < ps.size() && ps[j].t <= upper; ++j)
      out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                     es[i].t - ps[j].t});
  }
}

}  // namespace

PairList match_coincidences(const ValidatedStream<ElectronEvent>& electrons,
                            const ValidatedStream<PhotonEvent>& photons,
                            const CoincidenceWindow& window, int n_threads) {
  if (window.half_width_ps <= 0) throw InvalidRange("window half width must be > 0");
  const auto& es = electrons.events();
  const auto& ps = photons.events();

  PairList out;
  if (es.empty() || ps.empty()) return out;

  const int threads = std::max(1, n_threads);
  if (threads == 1 || es.size() < 4096) {
    match_range(es, ps, 0, es.size(), window.offset_ps, window.half_width_ps, out.pairs);
    return out;
  }

  // Partitioning by electron index keeps each pair in exactly one slice, so
  // concatenating slice outputs reproduces the single-threaded result.
  std::vector<std::vector<CoincidencePair>> parts(threads);
  std::vector<std::thread> pool;
  const std::size_t chunk = (es.size() + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t b = std::min(es.size(), t * chunk);
    const std::size_t e = std::min(es.size(), b + chunk);
    pool.emplace_back([&, b, e, t] {
      match_range(es, ps, b, e, window.offset_ps, window.half_width_ps, parts[t]);
    });
  }
  for (auto& th : pool) th.join();
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  out.pairs.reserve(total);
  for (auto& p : parts) out.pairs.insert(out.pairs.end(), p.begin(), p.end());
  return out;
}

double accidental_rate(const TimeDifferenceHistogram& h, const CoincidenceWindow& window) {
  std::uint64_t side_counts = 0;
  int side_bins = 0;
  for (int i = 0; i < h.n_bins(); ++i) {
    if (std::abs(h.bin_center(i) - window.offset_ps) > 4 * window.half_width_ps) {
      side_counts += h.counts[i];
      ++side_bins;
    }
  }
  if (side_bins == 0 || side_counts < 100) throw InsufficientSideband();
  const double density =
      static_cast<double>(side_counts) /
      (static_cast<double>(side_bins) * static_cast<double>(h.bin_width));
  return density * 2.0 * static_cast<double>(window.half_width_ps);
}

}  // namespace epgi
