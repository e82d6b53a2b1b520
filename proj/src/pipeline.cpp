#include "epgi/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "epgi/event_io.hpp"

namespace epgi {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
}

std::string provenance_comment(const RunConfig& cfg) {
  std::ostringstream os;
  os << "# seed = " << cfg.sim.rng_seed << "\n"
     << "# config_hash = " << config_hash_hex(cfg) << "\n";
  return os.str();
}

void write_sidecar(const std::string& path, const RunConfig& cfg,
                   const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ostringstream os;
  os << "seed = " << cfg.sim.rng_seed << "\n"
     << "config_hash = " << config_hash_hex(cfg) << "\n";
  for (const auto& [k, v] : entries) os << k << " = " << v << "\n";
  write_text_file(path, os.str());
}

std::vector<std::pair<std::string, std::string>> image_meta(const GhostImage& img) {
  return {
      {"bin_size_um", format_double(img.binning.bin_size_um)},
      {"origin_x_um", format_double(img.binning.origin_x_um)},
      {"origin_y_um", format_double(img.binning.origin_y_um)},
      {"nx", std::to_string(img.binning.nx)},
      {"ny", std::to_string(img.binning.ny)},
      {"total_counts", format_double(img.total())},
      {"n_contributing", std::to_string(img.n_contributing)},
      {"n_input", std::to_string(img.n_input)},
      {"duration_ps", std::to_string(img.duration_ps)},
      {"window_offset_ps", std::to_string(img.window.offset_ps)},
      {"window_half_width_ps", std::to_string(img.window.half_width_ps)},
      {"background_subtracted", img.background_subtracted ? "true" : "false"},
      {"accidental_pairs_subtracted", format_double(img.accidental_pairs_subtracted)},
  };
}

/// 16-bit big-endian PGM; counts are written raw, clamped to the sample
/// maximum.
void write_pgm16(const std::string& path, const GhostImage& img, const RunConfig& cfg) {
  std::ostringstream os;
  os << "P5\n" << provenance_comment(cfg) << img.binning.nx << " " << img.binning.ny
     << "\n65535\n";
  std::string bytes = os.str();
  bytes.reserve(bytes.size() + img.counts.size() * 2);
  // top image row first, matching usual raster order
  for (int iy = img.binning.ny - 1; iy >= 0; --iy)
    for (int ix = 0; ix < img.binning.nx; ++ix) {
      const double v = std::clamp(img.at(ix, iy), 0.0, 65535.0);
      const std::uint16_t q = static_cast<std::uint16_t>(std::llround(v));
      bytes.push_back(static_cast<char>((q >> 8) & 0xff));
      bytes.push_back(static_cast<char>(q & 0xff));
    }
  write_text_file(path, bytes);
  write_sidecar(path + ".meta", cfg, image_meta(img));
}

/// Real-valued image: flat little-endian f32, row-major from the top row.
void write_f32(const std::string& path, const GhostImage& img, const RunConfig& cfg) {
  std::string bytes;
  bytes.reserve(img.counts.size() * 4);
  for (int iy = img.binning.ny - 1; iy >= 0; --iy)
    for (int ix = 0; ix < img.binning.nx; ++ix) {
      const float v = static_cast<float>(img.at(ix, iy));
      std::uint32_t bits;
      static_assert(sizeof(bits) == sizeof(v));
      std::memcpy(&bits, &v, 4);
      for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
    }
  write_text_file(path, bytes);
  write_sidecar(path + ".meta", cfg, image_meta(img));
}

constexpr char kTruthMagic[4] = {'E', 'P', 'G', 'T'};

void write_ground_truth(const std::string& dir, const GroundTruth& truth,
                        const RunConfig& cfg) {
  std::ostringstream os;
  os << provenance_comment(cfg);
  os << "n_electrons_emitted = " << truth.n_electrons_emitted << "\n"
     << "n_electrons_recorded = " << truth.n_electrons_recorded << "\n"
     << "n_leak_electrons = " << truth.n_leak_electrons << "\n"
     << "n_pairs_created = " << truth.pairs.size() << "\n"
     << "n_photons_detected = " << truth.n_photons_detected << "\n"
     << "n_dark_photons = " << truth.n_dark_photons << "\n";
  write_text_file(dir + "/ground_truth.txt", os.str());

  std::string bytes;
  bytes.append(kTruthMagic, 4);
  const std::uint64_t count = truth.pairs.size();
  for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((count >> (8 * i)) & 0xff));
  auto put_f32 = [&bytes](float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
  };
  for (const auto& p : truth.pairs) {
    const std::uint64_t t = static_cast<std::uint64_t>(p.electron_t);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((t >> (8 * i)) & 0xff));
    put_f32(static_cast<float>(p.emission_um.x));
    put_f32(static_cast<float>(p.emission_um.y));
    put_f32(static_cast<float>(p.image_um.x));
    put_f32(static_cast<float>(p.image_um.y));
    bytes.push_back(static_cast<char>((p.transmitted ? 1 : 0) | (p.photon_detected ? 2 : 0) |
                                      (p.electron_recorded ? 4 : 0)));
  }
  write_text_file(dir + "/ground_truth_pairs.bin", bytes);
}

struct StageData {
  std::optional<ValidatedStream<ElectronEvent>> electrons;
  std::optional<ValidatedStream<PhotonEvent>> photons;
  std::optional<PairList> pairs;
  std::optional<TimeDifferenceHistogram> histogram;
  std::optional<CoincidenceWindow> window;
};

void need_streams(StageData& data, const RunConfig& cfg) {
  if (data.electrons && data.photons) return;
  const std::string epath = cfg.out_dir + "/electrons.epgi";
  const std::string ppath = cfg.out_dir + "/photons.epgi";
  if (!fs::exists(epath) || !fs::exists(ppath))
    throw Error("event streams not found in " + cfg.out_dir + "; run the simulate stage first");
  data.electrons = validate_stream(read_electron_events(epath));
  data.photons = validate_stream(read_photon_events(ppath));
}

TimeDifferenceHistogram& need_histogram(StageData& data, const RunConfig& cfg) {
  if (!data.histogram) {
    need_streams(data, cfg);
    const TimePs bin = static_cast<TimePs>(std::llround(cfg.coincidence.histogram_bin_ns * 1000));
    TimePs half = static_cast<TimePs>(std::llround(cfg.coincidence.histogram_half_range_ns * 1000));
    half = (half / bin) * bin;  // keep the range an exact multiple of the bin
    const TimePs offset = cfg.sim.fixed_offset_ps;
    data.histogram = time_difference_histogram(*data.electrons, *data.photons,
                                               offset - half, offset + half, bin);
  }
  return *data.histogram;
}

CoincidenceWindow need_window(StageData& data, const RunConfig& cfg, PipelineResult& result) {
  if (!data.window) {
    TimePs offset = 0;
    if (cfg.coincidence.offset_mode == "fixed") {
      offset = static_cast<TimePs>(std::llround(cfg.coincidence.fixed_offset_ns * 1000));
    } else {
      const OffsetEstimate est = estimate_offset(need_histogram(data, cfg));
      offset = est.offset_ps;
      result.estimated_offset_ps = est.offset_ps;
      result.offset_uncertainty_ps = est.uncertainty_ps;
    }
    data.window = cfg.coincidence.window(offset);
  }
  result.window = *data.window;
  return *data.window;
}

void need_pairs(StageData& data, const RunConfig& cfg, PipelineResult& result) {
  if (data.pairs) return;
  const std::string path = cfg.out_dir + "/pairs.tsv";
  if (fs::exists(path)) {
    PairList pairs;
    std::ifstream in(path);
    std::string line;
    CoincidenceWindow w;
    bool have_window = false;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line[0] == '#') {
        std::istringstream ls(line);
        std::string hash, key, eq;
        ls >> hash >> key >> eq;
        if (key == "window_offset_ps") ls >> w.offset_ps, have_window = true;
        if (key == "window_half_width_ps") ls >> w.half_width_ps;
        continue;
      }
      if (line.rfind("electron_index", 0) == 0) continue;  // column header
      CoincidencePair p;
      std::istringstream ls(line);
      if (ls >> p.electron_index >> p.photon_index >> p.tau) pairs.pairs.push_back(p);
    }
    data.pairs = std::move(pairs);
    if (have_window) data.window = w;
    result.n_matched_pairs = data.pairs->size();
    result.window = data.window.value_or(CoincidenceWindow{});
    return;
  }
  need_streams(data, cfg);
  const CoincidenceWindow w = need_window(data, cfg, result);
  data.pairs = match_coincidences(*data.electrons, *data.photons, w, cfg.threads);
  result.n_matched_pairs = data.pairs->size();
}

Binning reconstruction_binning(const RunConfig& cfg) {
  return Binning::centered(cfg.reconstruct.field_um, cfg.reconstruct.bin_size_um);
}

void stage_simulate(const RunConfig& cfg, const Mask& mask, StageData& data,
                    PipelineResult& result) {
  SimResult sim = simulate_run(cfg.sim, mask, cfg.optics, cfg.threads);
  result.n_electrons = sim.electrons.size();
  result.n_photons = sim.photons.size();
  for (const auto& p : sim.truth.pairs)
    if (p.photon_detected && p.electron_recorded) ++result.n_true_pairs_detected;
  write_events(cfg.out_dir + "/electrons.epgi", sim.electrons);
  write_events(cfg.out_dir + "/photons.epgi", sim.photons);
  write_sidecar(cfg.out_dir + "/electrons.epgi.meta", cfg,
                {{"n_events", std::to_string(sim.electrons.size())}});
  write_sidecar(cfg.out_dir + "/photons.epgi.meta", cfg,
                {{"n_events", std::to_string(sim.photons.size())}});
  write_ground_truth(cfg.out_dir, sim.truth, cfg);
  data.electrons = validate_stream(std::move(sim.electrons));
  data.photons = validate_stream(std::move(sim.photons));
}

void stage_g2(const RunConfig& cfg, StageData& data, PipelineResult& result) {
  const TimeDifferenceHistogram& h = need_histogram(data, cfg);
  const CorrelationFunction corr = g2(h);

  std::ostringstream os;
  os << provenance_comment(cfg);
  os << "# n_electrons = " << h.n_electrons << "\n# n_photons = " << h.n_photons
     << "\n# duration_ps = " << h.duration_ps << "\n";
  try {
    const OffsetEstimate est = estimate_offset(h);
    os << "# estimated_offset_ps = " << est.offset_ps << "\n"
       << "# offset_uncertainty_ps = " << format_double(est.uncertainty_ps) << "\n";
    result.estimated_offset_ps = est.offset_ps;
    result.offset_uncertainty_ps = est.uncertainty_ps;
  } catch (const NoSignificantPeak&) {
    os << "# estimated_offset_ps = none\n";
  }
  os << "tau_ps\tcounts\tg2\tg2_sigma\n";
  for (int i = 0; i < h.n_bins(); ++i)
    os << h.bin_center(i) << "\t" << h.counts[i] << "\t" << format_double(corr.g2[i]) << "\t"
       << format_double(corr.sigma[i]) << "\n";
  write_text_file(cfg.out_dir + "/g2.tsv", os.str());

  // peak and sideband quality relative to the injected offset
  const TimePs offset = cfg.sim.fixed_offset_ps;
  const TimePs w4 = 4 * static_cast<TimePs>(std::llround(cfg.coincidence.window_half_width_ns * 1000));
  double peak = 0, bg_sum = 0, worst = 0;
  int bg_n = 0;
  for (int i = 0; i < h.n_bins(); ++i) {
    const TimePs d = std::abs(h.bin_center(i) - offset);
    if (d <= w4 / 4) peak = std::max(peak, corr.g2[i]);
    if (d > w4) {
      bg_sum += corr.g2[i];
      ++bg_n;
      if (corr.sigma[i] > 0)
        worst = std::max(worst, std::abs(corr.g2[i] - 1.0) / corr.sigma[i]);
    }
  }
  result.g2_peak = peak;
  result.g2_background_mean = bg_n ? bg_sum / bg_n : 0.0;
  result.g2_background_worst_nsigma = worst;
}

void stage_match(const RunConfig& cfg, StageData& data, PipelineResult& result) {
  need_streams(data, cfg);
  const CoincidenceWindow w = need_window(data, cfg, result);
  data.pairs = match_coincidences(*data.electrons, *data.photons, w, cfg.threads);
  result.n_matched_pairs = data.pairs->size();

  std::ostringstream os;
  os << provenance_comment(cfg);
  os << "# window_offset_ps = " << w.offset_ps << "\n"
     << "# window_half_width_ps = " << w.half_width_ps << "\n";
  os << "electron_index\tphoton_index\ttau_ps\n";
  for (const auto& p : data.pairs->pairs)
    os << p.electron_index << "\t" << p.photon_index << "\t" << p.tau << "\n";
  write_text_file(cfg.out_dir + "/pairs.tsv", os.str());
}

void stage_reconstruct(const RunConfig& cfg, const Mask& mask, StageData& data,
                       PipelineResult& result) {
  need_streams(data, cfg);
  need_pairs(data, cfg, result);
  const Binning binning = reconstruction_binning(cfg);

  GhostImage raw = raw_image(*data.electrons, binning);
  GhostImage ghost = accumulate_ghost_image(*data.pairs, *data.electrons, binning);
  ghost.window = data.window.value_or(CoincidenceWindow{});

  double accidental = 0;
  try {
    accidental = accidental_rate(need_histogram(data, cfg), ghost.window);
  } catch (const InsufficientSideband&) {
    accidental = 0;  // nothing to subtract
  }
  result.expected_accidental_pairs = accidental;
  const GhostImage cleaned = subtract_accidentals(ghost, raw, accidental);

  write_pgm16(cfg.out_dir + "/raw.pgm", raw, cfg);
  write_pgm16(cfg.out_dir + "/ghost.pgm", ghost, cfg);
  write_f32(cfg.out_dir + "/ghost_sub.f32", cleaned, cfg);

  const BinaryImage truth = mask_footprint_image(mask, cfg.optics, binning, cfg.sim.beam);
  const BinaryImage before = binarize_otsu(ghost, cfg.reconstruct.smooth_sigma_um);
  const BinaryImage after = binarize_otsu(cleaned, cfg.reconstruct.smooth_sigma_um);
  result.dice_vs_truth = dice_coefficient(before.bits, truth.bits);
  result.dice_after_subtraction = dice_coefficient(after.bits, truth.bits);
  write_sidecar(cfg.out_dir + "/reconstruction_metrics.txt", cfg,
                {{"dice_vs_truth", format_double(result.dice_vs_truth)},
                 {"dice_after_subtraction", format_double(result.dice_after_subtraction)},
                 {"expected_accidental_pairs", format_double(accidental)}});
}

void stage_fit(const RunConfig& cfg, StageData& data, PipelineResult& result) {
  need_streams(data, cfg);
  need_pairs(data, cfg, result);
  const Binning binning = reconstruction_binning(cfg);
  const GhostImage ghost = accumulate_ghost_image(*data.pairs, *data.electrons, binning);

  std::vector<Vec2> positions;
  positions.reserve(data.pairs->size());
  const auto& es = data.electrons->events();
  for (const auto& p : data.pairs->pairs)
    positions.push_back({es[p.electron_index].x, es[p.electron_index].y});

  GratingSpec spec;
  spec.period_um = cfg.mask.grating_period_um;
  spec.duty_cycle = cfg.mask.grating_duty;
  spec.line_angle_rad = cfg.mask.grating_angle_rad;

  // robust starting amplitude/baseline from count quantiles
  std::vector<double> sorted = ghost.counts;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted[static_cast<std::size_t>(0.05 * (sorted.size() - 1))];
  const double hi = sorted[static_cast<std::size_t>(0.95 * (sorted.size() - 1))];
  FitParams init;
  init.sigma_um = cfg.fit.init_sigma_um;
  init.baseline = lo;
  init.amplitude = std::max(hi - lo, 1e-6);

  FitOptions options;
  options.restarts = cfg.fit.restarts;
  options.bootstrap_resamples = cfg.fit.bootstrap_resamples;
  options.max_iterations = cfg.fit.max_iterations;
  options.pair_positions = &positions;
  const FitResult fr = fit(ghost, spec, cfg.optics, init, options);
  result.fit = fr;
  result.fit_ran = true;

  std::ostringstream os;
  os << "seed = " << cfg.sim.rng_seed << "\n"
     << "config_hash = " << config_hash_hex(cfg) << "\n"
     << "sigma_um = " << format_double(fr.params.sigma_um) << "\n"
     << "sigma_uncertainty_um = " << format_double(fr.sigma_uncertainty_um) << "\n"
     << "fwhm_um = " << format_double(fr.fwhm_um) << "\n"
     << "fwhm_uncertainty_um = " << format_double(fwhm(fr.sigma_uncertainty_um)) << "\n"
     << "amplitude = " << format_double(fr.params.amplitude) << "\n"
     << "baseline = " << format_double(fr.params.baseline) << "\n"
     << "shift_x_um = " << format_double(fr.params.shift_um.x) << "\n"
     << "shift_y_um = " << format_double(fr.params.shift_um.y) << "\n"
     << "rotation_rad = " << format_double(fr.params.rotation_rad) << "\n"
     << "axial_shift_um = " << format_double(fr.params.axial_shift_um) << "\n"
     << "residual_l1 = " << format_double(fr.residual_l1) << "\n"
     << "iterations = " << fr.iterations << "\n"
     << "converged = " << (fr.converged ? "true" : "false") << "\n"
     << "n_pairs = " << data.pairs->size() << "\n";
  write_text_file(cfg.out_dir + "/fit_report.txt", os.str());

  if (!fr.converged) throw NoConvergence(fr.residual_l1);
}

void stage_raytrace(const RunConfig& cfg, PipelineResult&) {
  std::ostringstream os;
  os << provenance_comment(cfg);
  os << "x_um\ty_um\timage_x_um\timage_y_um\n";
  ChiefRayTracer tracer(cfg.optics);
  for (int iy = -9; iy <= 9; ++iy)
    for (int ix = -9; ix <= 9; ++ix) {
      const Vec2 p{2.0 * ix, 2.0 * iy};
      const Vec2 img = tracer.trace(p);
      os << format_double(p.x) << "\t" << format_double(p.y) << "\t" << format_double(img.x)
         << "\t" << format_double(img.y) << "\n";
    }
  write_text_file(cfg.out_dir + "/raytrace.tsv", os.str());
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& cfg, const std::vector<std::string>& stages) {
  std::vector<std::string> plan = stages;
  if (plan.size() == 1 && plan[0] == "all") {
    plan = {"simulate", "g2", "match", "reconstruct", "raytrace"};
    if (cfg.mask.source == "grating") plan.push_back("fit");
  }

  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir + "/resolved_config.toml", serialize_run_config(cfg));

  PipelineResult result;
  result.out_dir = cfg.out_dir;
  result.config_hash = config_hash_hex(cfg);

  const Mask mask = build_mask(cfg.mask);
  write_mask(mask, cfg.out_dir + "/mask.pbm");

  StageData data;
  for (const std::string& stage : plan) {
    if (stage == "simulate")
      stage_simulate(cfg, mask, data, result);
    else if (stage == "g2")
      stage_g2(cfg, data, result);
    else if (stage == "match")
      stage_match(cfg, data, result);
    else if (stage == "reconstruct")
      stage_reconstruct(cfg, mask, data, result);
    else if (stage == "fit")
      stage_fit(cfg, data, result);
    else if (stage == "raytrace")
      stage_raytrace(cfg, result);
    else
      throw ConfigInvalid("unknown stage '" + stage + "'");
  }
  return result;
}

}  // namespace epgi
