#include "epgi/pair_source.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace epgi {

namespace {

constexpr int kTimeSlices = 64;
constexpr double kPi = 3.14159265358979323846;

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void BeamProfile::validate() const {
  if (!(diameter_um > 0)) throw ConfigInvalid("beam diameter must be > 0");
  if (!std::isfinite(center_um.x) || !std::isfinite(center_um.y))
    throw ConfigInvalid("beam center must be finite");
}

void SimConfig::validate() const {
  if (!(run_duration_s > 0)) throw ConfigInvalid("run duration must be > 0");
  if (!(electron_rate_hz >= 0) || !(dark_count_rate_hz >= 0))
    throw ConfigInvalid("rates must be >= 0");
  if (!probability(pair_yield) || !probability(photon_detection_efficiency) ||
      !probability(electron_pass_given_pair) || !probability(electron_leak_given_no_pair))
    throw ConfigInvalid("probabilities must be in [0, 1]");
  // zero sigma is the degenerate (delta) limit and is allowed
  if (!(correlation_sigma_um >= 0)) throw ConfigInvalid("correlation sigma must be >= 0");
  if (!(jitter_sigma_ps >= 0)) throw ConfigInvalid("jitter sigma must be >= 0");
  if (timestamp_quantum_ticks < 1) throw ConfigInvalid("timestamp quantum must be >= 1 tick");
  beam.validate();
}

PairDraw draw_pair(const BeamProfile& beam, double correlation_sigma_um, Rng& rng) {
  PairDraw d;
  const double r = 0.5 * beam.diameter_um * std::sqrt(rng.uniform());
  const double phi = 2.0 * kPi * rng.uniform();
  d.electron_pos_um = {beam.center_um.x + r * std::cos(phi),
                       beam.center_um.y + r * std::sin(phi)};
  d.photon_source_um = {d.electron_pos_um.x + correlation_sigma_um * rng.normal(),
                        d.electron_pos_um.y + correlation_sigma_um * rng.normal()};
  return d;
}

TimePs quantize_time(TimePs t_ps, int ticks) {
  // quantum = ticks * 125/2 ps; k = round(t / quantum) in exact integers
  const __int128 num = static_cast<__int128>(t_ps) * 2;
  const __int128 den = static_cast<__int128>(125) * ticks;
  __int128 k;
  if (num >= 0)
    k = (num + den / 2) / den;
  else
    k = -((-num + den / 2) / den);
  const __int128 twice = k * 125 * ticks;  // quantized time in half-picoseconds
  __int128 q;
  if (twice >= 0)
    q = (twice + (twice % 2 != 0 ? 1 : 0)) / 2;
  else
    q = (twice - (twice % 2 != 0 ? 1 : 0)) / 2;
  return static_cast<TimePs>(q);
}

namespace {

struct SliceOutput {
  std::vector<ElectronEvent> electrons;
  std::vector<PhotonEvent> photons;
  std::vector<PairRecord> pairs;
  std::uint64_t n_emitted = 0;
  std::uint64_t n_recorded = 0;
  std::uint64_t n_leak = 0;
  std::uint64_t n_dark = 0;
  std::uint64_t n_detected = 0;
};

std::vector<TimePs> poisson_times(Rng& rng, double rate_hz, TimePs lo, TimePs hi) {
  std::vector<TimePs> times;
  const double mean = rate_hz * static_cast<double>(hi - lo) * 1e-12;
  const std::uint64_t n = rng.poisson(mean);
  times.reserve(n);
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo);
  for (std::uint64_t i = 0; i < n; ++i)
    times.push_back(lo + static_cast<TimePs>(rng.uniform_below(span)));
  std::sort(times.begin(), times.end());
  return times;
}

void simulate_slice(const SimConfig& cfg, const Mask& mask, const OpticalSystem& optics,
                    int slice, TimePs t_end_ps, SliceOutput& out) {
  const TimePs lo = t_end_ps * slice / kTimeSlices;
  const TimePs hi = t_end_ps * (slice + 1) / kTimeSlices;
  Rng rng = Rng(cfg.rng_seed).split(static_cast<std::uint64_t>(slice));
  Rng dark_rng = Rng(cfg.rng_seed).split(1000 + static_cast<std::uint64_t>(slice));
  ChiefRayTracer tracer(optics);

  const auto raw_times = poisson_times(rng, cfg.electron_rate_hz, lo, hi);
  out.n_emitted = raw_times.size();
  for (const TimePs t_raw : raw_times) {
    const TimePs t_e = quantize_time(t_raw, cfg.timestamp_quantum_ticks);
    const PairDraw draw = draw_pair(cfg.beam, cfg.correlation_sigma_um, rng);
    const bool made_pair = rng.bernoulli(cfg.pair_yield);
    bool recorded = false;
    if (made_pair) {
      PairRecord rec;
      rec.electron_t = t_e;
      rec.emission_um = draw.electron_pos_um;
      rec.image_um = tracer.trace(draw.photon_source_um);
      rec.transmitted = transmit(mask, rec.image_um);
      if (rec.transmitted && rng.bernoulli(cfg.photon_detection_efficiency)) {
        const TimePs jitter = static_cast<TimePs>(std::llround(rng.normal() * cfg.jitter_sigma_ps));
        const TimePs t_g =
            quantize_time(t_e + cfg.fixed_offset_ps + jitter, cfg.timestamp_quantum_ticks);
        if (t_g >= 0 && t_g <= t_end_ps) {
          out.photons.push_back({t_g});
          rec.photon_detected = true;
          ++out.n_detected;
        }
      }
      recorded = rng.bernoulli(cfg.electron_pass_given_pair);
      rec.electron_recorded = recorded && t_e <= t_end_ps;
      out.pairs.push_back(rec);
    } else {
      recorded = rng.bernoulli(cfg.electron_leak_given_no_pair);
      if (recorded) ++out.n_leak;
    }
    if (recorded && t_e >= 0 && t_e <= t_end_ps) {
      out.electrons.push_back({t_e, static_cast<float>(draw.electron_pos_um.x),
                               static_cast<float>(draw.electron_pos_um.y)});
      ++out.n_recorded;
    }
  }

  for (const TimePs t_raw : poisson_times(dark_rng, cfg.dark_count_rate_hz, lo, hi)) {
    const TimePs t = quantize_time(t_raw, cfg.timestamp_quantum_ticks);
    if (t >= 0 && t <= t_end_ps) {
      out.photons.push_back({t});
      ++out.n_dark;
    }
  }
}

}  // namespace

SimResult simulate_run(const SimConfig& cfg, const Mask& mask, const OpticalSystem& optics,
                       int n_threads) {
  cfg.validate();
  mask.validate();
  const TimePs t_end = seconds_to_ps(cfg.run_duration_s);

  std::vector<SliceOutput> slices(kTimeSlices);
  const int threads = std::clamp(n_threads, 1, kTimeSlices);
  if (threads == 1) {
    for (int s = 0; s < kTimeSlices; ++s)
      simulate_slice(cfg, mask, optics, s, t_end, slices[s]);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int s = t; s < kTimeSlices; s += threads)
          simulate_slice(cfg, mask, optics, s, t_end, slices[s]);
      });
    for (auto& th : pool) th.join();
  }

  SimResult result;
  const float half = static_cast<float>(0.5 * cfg.beam.diameter_um);
  const float margin = static_cast<float>(6.0 * cfg.correlation_sigma_um);
  result.electrons.header.duration_ps = t_end;
  result.electrons.header.fov = {static_cast<float>(cfg.beam.center_um.x) - half - margin,
                                 static_cast<float>(cfg.beam.center_um.y) - half - margin,
                                 static_cast<float>(cfg.beam.center_um.x) + half + margin,
                                 static_cast<float>(cfg.beam.center_um.y) + half + margin};
  result.electrons.header.nominal_rate_hz = cfg.electron_rate_hz;
  result.electrons.header.seed = cfg.rng_seed;
  result.photons.header.duration_ps = t_end;
  result.photons.header.nominal_rate_hz =
      cfg.electron_rate_hz * cfg.pair_yield * cfg.photon_detection_efficiency +
      cfg.dark_count_rate_hz;
  result.photons.header.seed = cfg.rng_seed;

  for (auto& s : slices) {
    result.electrons.events.insert(result.electrons.events.end(), s.electrons.begin(),
                                   s.electrons.end());
    result.photons.events.insert(result.photons.events.end(), s.photons.begin(),
                                 s.photons.end());
    auto& t = result.truth;
    t.pairs.insert(t.pairs.end(), s.pairs.begin(), s.pairs.end());
    t.n_electrons_emitted += s.n_emitted;
    t.n_electrons_recorded += s.n_recorded;
    t.n_leak_electrons += s.n_leak;
    t.n_dark_photons += s.n_dark;
    t.n_photons_detected += s.n_detected;
  }
  // electrons are already time-ordered by construction; photon jitter can
  // cross slice boundaries
  result.electrons = sort_events(std::move(result.electrons));
  result.photons = sort_events(std::move(result.photons));
  return result;
}

std::pair<ElectronStream, PhotonStream> background_streams(double electron_rate_hz,
                                                           double photon_rate_hz,
                                                           double duration_s, Rng& rng) {
  if (electron_rate_hz < 0 || photon_rate_hz < 0)
    throw ConfigInvalid("background rates must be >= 0");
  if (!(duration_s > 0)) throw ConfigInvalid("duration must be > 0");
  const TimePs t_end = seconds_to_ps(duration_s);

  Rng rng_e = rng.split(0);
  Rng rng_p = rng.split(1);
  ElectronStream es;
  PhotonStream ps;
  es.header.duration_ps = ps.header.duration_ps = t_end;
  es.header.nominal_rate_hz = electron_rate_hz;
  ps.header.nominal_rate_hz = photon_rate_hz;
  for (const TimePs t : poisson_times(rng_e, electron_rate_hz, 0, t_end))
    es.events.push_back({t, 0.0f, 0.0f});
  for (const TimePs t : poisson_times(rng_p, photon_rate_hz, 0, t_end))
    ps.events.push_back({t});
  return {std::move(es), std::move(ps)};
}

}  // namespace epgi
