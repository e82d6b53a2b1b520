#include "epgi/run_config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace epgi {

namespace {

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

double parse_double(const std::string& key, const std::string& v) {
  double out;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigInvalid("value of '" + key + "' is not a number: " + v);
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigInvalid("value of '" + key + "' is not an integer: " + v);
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigInvalid("value of '" + key + "' is not an unsigned integer: " + v);
  return out;
}

std::string strip_quotes(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// section.key -> raw value
std::map<std::string, std::string> parse_config_text(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // cut trailing comment, respecting double quotes
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigInvalid("bad section header at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid("expected key = value at line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigInvalid("empty key or value at line " + std::to_string(line_no));
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.count(full)) throw ConfigInvalid("duplicate key '" + full + "'");
    kv[full] = value;
  }
  return kv;
}

void apply_keys(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
  using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"run.preset", [](RunConfig& c, const std::string&, const std::string& v) { c.preset = strip_quotes(v); }},
      {"run.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.rng_seed = parse_u64(k, v); }},
      {"sim.duration_s", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.run_duration_s = parse_double(k, v); }},
      {"sim.electron_rate_hz", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.electron_rate_hz = parse_double(k, v); }},
      {"sim.pair_yield", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.pair_yield = parse_double(k, v); }},
      {"sim.photon_detection_efficiency", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.photon_detection_efficiency = parse_double(k, v); }},
      {"sim.electron_pass_given_pair", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.electron_pass_given_pair = parse_double(k, v); }},
      {"sim.electron_leak_given_no_pair", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.electron_leak_given_no_pair = parse_double(k, v); }},
      {"sim.dark_count_rate_hz", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.dark_count_rate_hz = parse_double(k, v); }},
      {"sim.beam_center_x_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.beam.center_um.x = parse_double(k, v); }},
      {"sim.beam_center_y_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.beam.center_um.y = parse_double(k, v); }},
      {"sim.beam_diameter_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.beam.diameter_um = parse_double(k, v); }},
      {"sim.correlation_sigma_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.correlation_sigma_um = parse_double(k, v); }},
      {"sim.jitter_sigma_ps", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.jitter_sigma_ps = parse_double(k, v); }},
      {"sim.fixed_offset_ps", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.fixed_offset_ps = parse_int(k, v); }},
      {"sim.timestamp_quantum_ticks", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.timestamp_quantum_ticks = static_cast<int>(parse_int(k, v)); }},
      {"sim.beam_energy_kev", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.beam_energy_kev = parse_double(k, v); }},
      {"sim.beam_current_pa", [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.beam_current_pa = parse_double(k, v); }},
      {"optics.preset", [](RunConfig& c, const std::string&, const std::string& v) { c.optics_preset_name = strip_quotes(v); }},
      {"optics.target_magnification", [](RunConfig& c, const std::string& k, const std::string& v) { c.target_magnification = parse_double(k, v); }},
      {"optics.mirror_focal_length_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.optics.mirror.focal_length_um = parse_double(k, v); }},
      {"optics.numerical_aperture", [](RunConfig& c, const std::string& k, const std::string& v) { c.optics.mirror.numerical_aperture = parse_double(k, v); }},
      {"optics.beam_hole_diameter_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.optics.mirror.beam_hole_diameter_um = parse_double(k, v); }},
      {"optics.lens_focal_length_mm", [](RunConfig& c, const std::string& k, const std::string& v) { c.optics.lens_focal_length_mm = parse_double(k, v); }},
      {"optics.mirror_to_lens_mm", [](RunConfig& c, const std::string& k, const std::string& v) { c.optics.mirror_to_lens_mm = parse_double(k, v); }},
      {"optics.selection_aperture_radius_mm", [](RunConfig& c, const std::string& k, const std::string& v) { c.optics.selection_aperture_radius_mm = parse_double(k, v); }},
      {"mask.source", [](RunConfig& c, const std::string&, const std::string& v) { c.mask.source = strip_quotes(v); }},
      {"mask.path", [](RunConfig& c, const std::string&, const std::string& v) { c.mask.path = strip_quotes(v); }},
      {"mask.grating_period_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.mask.grating_period_um = parse_double(k, v); }},
      {"mask.grating_duty", [](RunConfig& c, const std::string& k, const std::string& v) { c.mask.grating_duty = parse_double(k, v); }},
      {"mask.grating_angle_rad", [](RunConfig& c, const std::string& k, const std::string& v) { c.mask.grating_angle_rad = parse_double(k, v); }},
      {"mask.pixel_pitch_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.mask.pixel_pitch_um = parse_double(k, v); }},
      {"mask.half_extent_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.mask.half_extent_um = parse_double(k, v); }},
      {"coincidence.window_half_width_ns", [](RunConfig& c, const std::string& k, const std::string& v) { c.coincidence.window_half_width_ns = parse_double(k, v); }},
      {"coincidence.histogram_bin_ns", [](RunConfig& c, const std::string& k, const std::string& v) { c.coincidence.histogram_bin_ns = parse_double(k, v); }},
      {"coincidence.histogram_half_range_ns", [](RunConfig& c, const std::string& k, const std::string& v) { c.coincidence.histogram_half_range_ns = parse_double(k, v); }},
      {"coincidence.offset_mode", [](RunConfig& c, const std::string&, const std::string& v) { c.coincidence.offset_mode = strip_quotes(v); }},
      {"coincidence.fixed_offset_ns", [](RunConfig& c, const std::string& k, const std::string& v) { c.coincidence.fixed_offset_ns = parse_double(k, v); }},
      {"reconstruct.bin_size_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.reconstruct.bin_size_um = parse_double(k, v); }},
      {"reconstruct.field_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.reconstruct.field_um = parse_double(k, v); }},
      {"reconstruct.smooth_sigma_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.reconstruct.smooth_sigma_um = parse_double(k, v); }},
      {"fit.init_sigma_um", [](RunConfig& c, const std::string& k, const std::string& v) { c.fit.init_sigma_um = parse_double(k, v); }},
      {"fit.restarts", [](RunConfig& c, const std::string& k, const std::string& v) { c.fit.restarts = static_cast<int>(parse_int(k, v)); }},
      {"fit.bootstrap_resamples", [](RunConfig& c, const std::string& k, const std::string& v) { c.fit.bootstrap_resamples = static_cast<int>(parse_int(k, v)); }},
      {"fit.max_iterations", [](RunConfig& c, const std::string& k, const std::string& v) { c.fit.max_iterations = static_cast<int>(parse_int(k, v)); }},
  };
  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigInvalid("unknown config key '" + key + "'");
    it->second(cfg, key, value);
  }
}

}  // namespace

void RunConfig::finalize() {
  sim.validate();
  if (!(reconstruct.bin_size_um > 0 && reconstruct.field_um > 0))
    throw ConfigInvalid("reconstruction binning must be positive");
  if (!(coincidence.window_half_width_ns > 0 && coincidence.histogram_bin_ns > 0 &&
        coincidence.histogram_half_range_ns > 0))
    throw ConfigInvalid("coincidence windows must be positive");
  if (coincidence.offset_mode != "auto" && coincidence.offset_mode != "fixed")
    throw ConfigInvalid("offset_mode must be 'auto' or 'fixed'");
  if (target_magnification > 0)
    optics = solve_for_magnification(optics, target_magnification);
  else
    optics = optics_preset(optics_preset_name);
  optics.validate();
}

RunConfig preset_config(const std::string& name) {
  RunConfig cfg;
  cfg.preset = name;
  if (name == "grating-run") {
    cfg.optics_preset_name = "grating-run";
    cfg.mask.source = "grating";
  } else if (name == "cat-run") {
    cfg.optics_preset_name = "cat-run";
    cfg.mask.source = "cat";
    cfg.mask.pixel_pitch_um = 2.0;
  } else {
    throw ConfigInvalid("unknown preset '" + name + "' (expected cat-run or grating-run)");
  }
  return cfg;
}

RunConfig load_run_config(const std::optional<std::string>& config_path,
                          const std::optional<std::string>& preset,
                          const std::optional<std::uint64_t>& seed_override,
                          const std::optional<std::string>& out_dir_override,
                          std::optional<int> threads_override) {
  std::map<std::string, std::string> kv;
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) throw ConfigInvalid("cannot open config file " + *config_path);
    kv = parse_config_text(in);
  }
  std::string preset_name = preset.value_or("");
  if (preset_name.empty()) {
    const auto it = kv.find("run.preset");
    preset_name = it != kv.end() ? strip_quotes(it->second) : "grating-run";
  }
  RunConfig cfg = preset_config(preset_name);
  apply_keys(cfg, kv);
  cfg.preset = preset_name;
  if (seed_override) cfg.sim.rng_seed = *seed_override;
  if (out_dir_override) cfg.out_dir = *out_dir_override;
  if (threads_override) cfg.threads = std::max(1, *threads_override);
  cfg.finalize();
  return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "[run]\n";
  os << "preset = \"" << cfg.preset << "\"\n";
  os << "seed = " << cfg.sim.rng_seed << "\n";
  os << "[sim]\n";
  os << "duration_s = " << format_double(cfg.sim.run_duration_s) << "\n";
  os << "electron_rate_hz = " << format_double(cfg.sim.electron_rate_hz) << "\n";
  os << "pair_yield = " << format_double(cfg.sim.pair_yield) << "\n";
  os << "photon_detection_efficiency = " << format_double(cfg.sim.photon_detection_efficiency) << "\n";
  os << "electron_pass_given_pair = " << format_double(cfg.sim.electron_pass_given_pair) << "\n";
  os << "electron_leak_given_no_pair = " << format_double(cfg.sim.electron_leak_given_no_pair) << "\n";
  os << "dark_count_rate_hz = " << format_double(cfg.sim.dark_count_rate_hz) << "\n";
  os << "beam_center_x_um = " << format_double(cfg.sim.beam.center_um.x) << "\n";
  os << "beam_center_y_um = " << format_double(cfg.sim.beam.center_um.y) << "\n";
  os << "beam_diameter_um = " << format_double(cfg.sim.beam.diameter_um) << "\n";
  os << "correlation_sigma_um = " << format_double(cfg.sim.correlation_sigma_um) << "\n";
  os << "jitter_sigma_ps = " << format_double(cfg.sim.jitter_sigma_ps) << "\n";
  os << "fixed_offset_ps = " << cfg.sim.fixed_offset_ps << "\n";
  os << "timestamp_quantum_ticks = " << cfg.sim.timestamp_quantum_ticks << "\n";
  os << "beam_energy_kev = " << format_double(cfg.sim.beam_energy_kev) << "\n";
  os << "beam_current_pa = " << format_double(cfg.sim.beam_current_pa) << "\n";
  os << "[optics]\n";
  os << "preset = \"" << cfg.optics_preset_name << "\"\n";
  os << "target_magnification = " << format_double(cfg.target_magnification) << "\n";
  os << "mirror_focal_length_um = " << format_double(cfg.optics.mirror.focal_length_um) << "\n";
  os << "numerical_aperture = " << format_double(cfg.optics.mirror.numerical_aperture) << "\n";
  os << "beam_hole_diameter_um = " << format_double(cfg.optics.mirror.beam_hole_diameter_um) << "\n";
  os << "lens_focal_length_mm = " << format_double(cfg.optics.lens_focal_length_mm) << "\n";
  os << "mirror_to_lens_mm = " << format_double(cfg.optics.mirror_to_lens_mm) << "\n";
  os << "selection_aperture_radius_mm = " << format_double(cfg.optics.selection_aperture_radius_mm) << "\n";
  os << "[mask]\n";
  os << "source = \"" << cfg.mask.source << "\"\n";
  os << "path = \"" << cfg.mask.path << "\"\n";
  os << "grating_period_um = " << format_double(cfg.mask.grating_period_um) << "\n";
  os << "grating_duty = " << format_double(cfg.mask.grating_duty) << "\n";
  os << "grating_angle_rad = " << format_double(cfg.mask.grating_angle_rad) << "\n";
  os << "pixel_pitch_um = " << format_double(cfg.mask.pixel_pitch_um) << "\n";
  os << "half_extent_um = " << format_double(cfg.mask.half_extent_um) << "\n";
  os << "[coincidence]\n";
  os << "window_half_width_ns = " << format_double(cfg.coincidence.window_half_width_ns) << "\n";
  os << "histogram_bin_ns = " << format_double(cfg.coincidence.histogram_bin_ns) << "\n";
  os << "histogram_half_range_ns = " << format_double(cfg.coincidence.histogram_half_range_ns) << "\n";
  os << "offset_mode = \"" << cfg.coincidence.offset_mode << "\"\n";
  os << "fixed_offset_ns = " << format_double(cfg.coincidence.fixed_offset_ns) << "\n";
  os << "[reconstruct]\n";
  os << "bin_size_um = " << format_double(cfg.reconstruct.bin_size_um) << "\n";
  os << "field_um = " << format_double(cfg.reconstruct.field_um) << "\n";
  os << "smooth_sigma_um = " << format_double(cfg.reconstruct.smooth_sigma_um) << "\n";
  os << "[fit]\n";
  os << "init_sigma_um = " << format_double(cfg.fit.init_sigma_um) << "\n";
  os << "restarts = " << cfg.fit.restarts << "\n";
  os << "bootstrap_resamples = " << cfg.fit.bootstrap_resamples << "\n";
  os << "max_iterations = " << cfg.fit.max_iterations << "\n";
  return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string text = serialize_run_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = config_hash(cfg);
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

Mask build_mask(const MaskSpec& spec) {
  if (spec.source == "grating")
    return make_grating_mask(spec.grating_period_um, spec.grating_duty, spec.grating_angle_rad,
                             spec.half_extent_um, spec.pixel_pitch_um);
  if (spec.source == "cat") return make_cat_mask(spec.pixel_pitch_um);
  if (spec.source == "open") return make_open_mask(spec.half_extent_um, spec.pixel_pitch_um);
  if (spec.source == "file") {
    if (spec.path.empty()) throw ConfigInvalid("mask.source = file requires mask.path");
    return read_mask(spec.path);
  }
  throw ConfigInvalid("unknown mask source '" + spec.source + "'");
}

}  // namespace epgi
