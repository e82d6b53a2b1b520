#include "epgi/optics.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace epgi {

namespace {

constexpr double kChiefTolUm = 1e-7;    // station-plane residual
constexpr int kChiefMaxIter = 60;
constexpr double kBackProjectTolUm = 1e-4;
constexpr int kBackProjectMaxIter = 100;

struct Frame {
  Vec3 e1, e2, e3;  // collection axis, transverse, beam axis

  explicit Frame(const ParabolicMirror& m)
      : e1(m.collection_axis.normalized()),
        e3(m.beam_axis.normalized()),
        e2(m.beam_axis.cross(m.collection_axis).normalized()) {}

  Vec3 to_mirror(const Vec3& v) const { return {v.dot(e1), v.dot(e2), v.dot(e3)}; }
  Vec3 to_lab(const Vec3& v) const { return e1 * v.x + e2 * v.y + e3 * v.z; }
};

double surface_x(double y, double z, double f) { return (y * y + z * z) / (4 * f) - f; }

Vec3 surface_normal(double y, double z, double f) {
  return Vec3{-4 * f, 2 * y, 2 * z}.normalized();
}

// Reflected ray of (source -> surface point (y,z)) evaluated at the
// aperture/lens station: lateral offset from the folded axis and slope.
struct StationState {
  Vec2 lateral_rel;  // (y, z - 2f) at the station plane
  Vec2 slope;        // (dy/dx, dz/dx) of the reflected ray
  bool forward;      // reflected ray travels toward +x
};

StationState station_state(const Vec3& source, double y, double z, double f,
                           double station_x) {
  const double x = surface_x(y, z, f);
  const Vec3 hit{x, y, z};
  const Vec3 incoming = hit - source;
  const Vec3 n = surface_normal(y, z, f);
  const Vec3 out = reflect_direction(incoming, n);
  StationState s;
  s.forward = out.x > 1e-12;
  if (!s.forward) {
    s.lateral_rel = {1e9, 1e9};
    s.slope = {0, 0};
    return s;
  }
  s.slope = {out.y / out.x, out.z / out.x};
  const double run = station_x - x;
  s.lateral_rel = {y + s.slope.x * run, z + s.slope.y * run - 2 * f};
  return s;
}

// Newton solve over the mirror point (y, z) so that the reflected ray
// crosses the folded axis at the station plane.
bool solve_chief_point(const Vec3& source, double f, double station_x, Vec2& yz) {
  const double fd = 1e-2;  // um
  Vec2 cur = yz;
  StationState st = station_state(source, cur.x, cur.y, f, station_x);
  double res = st.lateral_rel.norm();
  for (int iter = 0; iter < kChiefMaxIter; ++iter) {
    if (res < kChiefTolUm) {
      yz = cur;
      return true;
    }
    const StationState sy = station_state(source, cur.x + fd, cur.y, f, station_x);
    const StationState sz = station_state(source, cur.x, cur.y + fd, f, station_x);
    const double j00 = (sy.lateral_rel.x - st.lateral_rel.x) / fd;
    const double j10 = (sy.lateral_rel.y - st.lateral_rel.y) / fd;
    const double j01 = (sz.lateral_rel.x - st.lateral_rel.x) / fd;
    const double j11 = (sz.lateral_rel.y - st.lateral_rel.y) / fd;
    const double det = j00 * j11 - j01 * j10;
    if (std::abs(det) < 1e-30) return false;
    const Vec2 step{-(j11 * st.lateral_rel.x - j01 * st.lateral_rel.y) / det,
                    -(-j10 * st.lateral_rel.x + j00 * st.lateral_rel.y) / det};
    double damp = 1.0;
    for (int k = 0; k < 12; ++k) {
      const Vec2 trial{cur.x + damp * step.x, cur.y + damp * step.y};
      const StationState ts = station_state(source, trial.x, trial.y, f, station_x);
      const double tres = ts.lateral_rel.norm();
      if (tres < res) {
        cur = trial;
        st = ts;
        res = tres;
        break;
      }
      damp *= 0.5;
      if (k == 11) return false;
    }
  }
  yz = cur;
  return res < kChiefTolUm;
}

Vec2 image_from_station(const StationState& st, const OpticalSystem& sys) {
  const double f_lens = sys.lens_focal_length_mm * 1000.0;
  const double run = sys.lens_to_image_mm * 1000.0;
  const Vec2 bent{st.slope.x - st.lateral_rel.x / f_lens,
                  st.slope.y - st.lateral_rel.y / f_lens};
  const Vec2 rel = st.lateral_rel + bent * run;
  // Image axes labelled so the on-axis map is -M * identity: the mirror fold
  // swaps the sample x axis into the lab z direction.
  return {rel.y, rel.x};
}

void check_traceable(const Vec3& source, double f) {
  const double lateral = std::hypot(source.x, source.y);
  if (lateral >= 0.25 * f || std::abs(source.z) >= 0.25 * f) {
    std::ostringstream os;
    os << "(" << source.x << ", " << source.y << ", " << source.z << ") um";
    throw OpticsOutOfRange(os.str());
  }
}

Vec2 trace_impl(const Vec3& source, const OpticalSystem& sys, Vec2& mirror_guess) {
  const double f = sys.mirror.focal_length_um;
  check_traceable(source, f);
  const double station_x = sys.mirror_to_lens_mm * 1000.0;
  Vec2 yz = mirror_guess;
  if (!solve_chief_point(source, f, station_x, yz)) {
    yz = {0.0, 2 * f};  // cold restart from the on-axis solution
    if (!solve_chief_point(source, f, station_x, yz))
      throw Error("chief-ray solve failed to converge");
  }
  mirror_guess = yz;
  return image_from_station(station_state(source, yz.x, yz.y, f, station_x), sys);
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

}  // namespace

void ParabolicMirror::validate() const {
  if (!(focal_length_um > 0)) throw ConfigInvalid("mirror focal length must be > 0");
  if (!(numerical_aperture > 0 && numerical_aperture < 1))
    throw ConfigInvalid("numerical aperture must be in (0, 1)");
  if (!(beam_hole_diameter_um >= 0)) throw ConfigInvalid("beam hole diameter must be >= 0");
  if (std::abs(collection_axis.norm() - 1) > 1e-9 || std::abs(beam_axis.norm() - 1) > 1e-9)
    throw ConfigInvalid("mirror axes must be unit vectors");
  if (std::abs(collection_axis.dot(beam_axis)) > 1e-9)
    throw ConfigInvalid("collection axis must be perpendicular to the beam axis");
}

void OpticalSystem::validate() const {
  mirror.validate();
  if (!(lens_focal_length_mm > 0 && mirror_to_lens_mm > 0 && lens_to_image_mm > 0))
    throw ConfigInvalid("optical distances must be > 0");
  if (!(selection_aperture_radius_mm > 0))
    throw ConfigInvalid("selection aperture radius must be > 0");
  if (!std::isfinite(magnification) || !(magnification > 1))
    throw ConfigInvalid("magnification must be finite and > 1");
}

void Mask::validate() const {
  if (!(pixel_pitch_um > 0)) throw ConfigInvalid("mask pixel pitch must be > 0");
  if (width <= 0 || height <= 0 || bits.size() != static_cast<std::size_t>(width) * height)
    throw ConfigInvalid("mask raster must be non-empty and consistent");
}

double Mask::open_fraction() const {
  if (bits.empty()) return 0.0;
  std::size_t open = 0;
  for (auto b : bits) open += (b != 0);
  return static_cast<double>(open) / static_cast<double>(bits.size());
}

Ray reflect(const Ray& ray, const ParabolicMirror& mirror) {
  const Frame frame(mirror);
  const double f = mirror.focal_length_um;
  const Vec3 o = frame.to_mirror(ray.origin);
  const Vec3 d = frame.to_mirror(ray.direction);

  // (o_y + t d_y)^2 + (o_z + t d_z)^2 = 4 f (o_x + t d_x + f)
  const double a = d.y * d.y + d.z * d.z;
  const double b = 2 * (o.y * d.y + o.z * d.z) - 4 * f * d.x;
  const double c = o.y * o.y + o.z * o.z - 4 * f * (o.x + f);
  double t = -1;
  if (std::abs(a) < 1e-18) {
    if (std::abs(b) < 1e-18) throw NoIntersection();
    t = -c / b;
  } else {
    const double disc = b * b - 4 * a * c;
    if (disc < 0) throw NoIntersection();
    const double sq = std::sqrt(disc);
    const double t1 = (-b - sq) / (2 * a);
    const double t2 = (-b + sq) / (2 * a);
    t = t1 > 1e-9 ? t1 : t2;
  }
  if (t <= 1e-9) throw NoIntersection();

  const Vec3 hit = o + d * t;
  const double hole_r = mirror.beam_hole_diameter_um / 2;
  if ((hit - mirror.hole_center()).norm() < hole_r) throw HoleClipped();
  const double rho = hit.norm();
  const double cos_beam = hit.z / rho;
  const double sin_beam = std::sqrt(std::max(0.0, 1.0 - cos_beam * cos_beam));
  if (cos_beam <= 0 || sin_beam > mirror.numerical_aperture + 1e-12) throw OutsideNA();

  const Vec3 out = reflect_direction(d, surface_normal(hit.y, hit.z, f));
  return Ray(frame.to_lab(hit), frame.to_lab(out));
}

Vec2 trace_to_image(const Vec2& point, const OpticalSystem& sys) {
  return trace_to_image(Vec3{point.x, point.y, 0.0}, sys);
}

Vec2 trace_to_image(const Vec3& source, const OpticalSystem& sys) {
  Vec2 guess{0.0, 2 * sys.mirror.focal_length_um};
  return trace_impl(source, sys, guess);
}

ChiefRayTracer::ChiefRayTracer(const OpticalSystem& sys)
    : sys_(sys), mirror_guess_{0.0, 2 * sys.mirror.focal_length_um} {}

Vec2 ChiefRayTracer::trace(const Vec3& source) {
  return trace_impl(source, sys_, mirror_guess_);
}

Vec2 back_project(const Vec2& image_point, const OpticalSystem& sys) {
  const double f = sys.mirror.focal_length_um;
  const double m = sys.magnification > 1 ? sys.magnification : effective_magnification(sys);
  ChiefRayTracer tracer(sys);
  Vec2 p{-image_point.x / m, -image_point.y / m};
  const double r_max = 0.249 * f;
  if (p.norm() > r_max) p = p * (r_max / p.norm());

  const double fd = 1e-2;
  double best = 1e300;
  Vec2 res = tracer.trace(p) - image_point;
  for (int iter = 0; iter < kBackProjectMaxIter; ++iter) {
    const double rn = res.norm();
    best = std::min(best, rn);
    if (rn < kBackProjectTolUm) return p;
    const Vec2 rx = tracer.trace(Vec2{p.x + fd, p.y}) - image_point;
    const Vec2 ry = tracer.trace(Vec2{p.x, p.y + fd}) - image_point;
    const double j00 = (rx.x - res.x) / fd;
    const double j10 = (rx.y - res.y) / fd;
    const double j01 = (ry.x - res.x) / fd;
    const double j11 = (ry.y - res.y) / fd;
    const double det = j00 * j11 - j01 * j10;
    if (std::abs(det) < 1e-30) break;
    const Vec2 step{-(j11 * res.x - j01 * res.y) / det,
                    -(-j10 * res.x + j00 * res.y) / det};
    double damp = 1.0;
    bool moved = false;
    for (int k = 0; k < 12; ++k) {
      Vec2 trial = p + step * damp;
      if (trial.norm() > r_max) trial = trial * (r_max / trial.norm());
      const Vec2 tres = tracer.trace(trial) - image_point;
      if (tres.norm() < rn) {
        p = trial;
        res = tres;
        moved = true;
        break;
      }
      damp *= 0.5;
    }
    if (!moved) break;
  }
  if (res.norm() < kBackProjectTolUm) return p;
  throw NoConvergence(std::min(best, res.norm()));
}

double effective_magnification(const OpticalSystem& sys) {
  const double h = 0.5;
  ChiefRayTracer tracer(sys);
  const double mx = (tracer.trace(Vec2{h, 0}).x - tracer.trace(Vec2{-h, 0}).x) / (2 * h);
  const double my = (tracer.trace(Vec2{0, h}).y - tracer.trace(Vec2{0, -h}).y) / (2 * h);
  return 0.5 * (std::abs(mx) + std::abs(my));
}

bool transmit(const Mask& mask, const Vec2& image_point) {
  // ceil(u) - 1 assigns boundary points to the pixel with the lower index
  const double u = (image_point.x - mask.origin_um.x) / mask.pixel_pitch_um;
  const double v = (image_point.y - mask.origin_um.y) / mask.pixel_pitch_um;
  const double iu = std::ceil(u) - 1.0;
  const double iv = std::ceil(v) - 1.0;
  if (iu < 0 || iv < 0 || iu >= mask.width || iv >= mask.height) return false;
  return mask.open_at(static_cast<int>(iu), static_cast<int>(iv));
}

OpticalSystem solve_for_magnification(OpticalSystem sys, double target) {
  if (!(target > 1)) throw ConfigInvalid("target magnification must be > 1");
  // image height is essentially linear in lens_to_image, so secant converges
  // in a couple of steps
  double l0 = 2 * sys.mirror.focal_length_um * target * 0.8e-3;
  double l1 = 2 * sys.mirror.focal_length_um * target * 1.2e-3;
  auto eval = [&](double l) {
    sys.lens_to_image_mm = l;
    return effective_magnification(sys) - target;
  };
  double g0 = eval(l0);
  double g1 = eval(l1);
  for (int i = 0; i < 30 && std::abs(g1) > 1e-9; ++i) {
    const double l2 = l1 - g1 * (l1 - l0) / (g1 - g0);
    l0 = l1;
    g0 = g1;
    l1 = l2;
    g1 = eval(l2);
  }
  if (std::abs(g1) > 1e-6) throw NoConvergence(std::abs(g1));
  sys.lens_to_image_mm = l1;
  sys.magnification = effective_magnification(sys);
  if (trace_to_image(Vec2{1.0, 0.0}, sys).x >= 0)
    throw Error("solved system is not inverting");
  return sys;
}

OpticalSystem optics_preset(const std::string& name) {
  OpticalSystem sys;
  if (name == "cat-run") {
    sys = solve_for_magnification(sys, 19.0);
  } else if (name == "grating-run") {
    sys = solve_for_magnification(sys, 16.0);
  } else {
    throw ConfigInvalid("unknown optics preset '" + name + "'");
  }
  sys.validate();
  return sys;
}

BundleTrace trace_bundle_to_image(const Vec3& source, const OpticalSystem& sys,
                                  int n_polar, int n_azimuth) {
  const double f = sys.mirror.focal_length_um;
  check_traceable(source, f);
  const double theta_max = sys.mirror.aperture_half_angle();
  const double station_x = sys.mirror_to_lens_mm * 1000.0;
  const double aperture_r = sys.selection_aperture_radius_mm * 1000.0;

  double sx = 0, sy = 0, sxx = 0, syy = 0;
  std::size_t n = 0;
  for (int i = 0; i < n_polar; ++i) {
    const double theta = theta_max * (i + 0.5) / n_polar;
    for (int j = 0; j < n_azimuth; ++j) {
      const double phi = 2 * M_PI * (j + 0.5) / n_azimuth;
      const Vec3 dir{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                     std::cos(theta)};
      Vec2 img;
      try {
        const Ray out = reflect(Ray(source, dir), sys.mirror);
        if (out.direction.x <= 1e-12) continue;
        const Vec2 slope{out.direction.y / out.direction.x,
                         out.direction.z / out.direction.x};
        const double run = station_x - out.origin.x;
        StationState st;
        st.lateral_rel = {out.origin.y + slope.x * run,
                          out.origin.z + slope.y * run - 2 * f};
        st.slope = slope;
        st.forward = true;
        if (st.lateral_rel.norm() > aperture_r) continue;
        img = image_from_station(st, sys);
      } catch (const Error&) {
        continue;
      }
      sx += img.x;
      sy += img.y;
      sxx += img.x * img.x;
      syy += img.y * img.y;
      ++n;
    }
  }
  BundleTrace out;
  out.rays = n;
  if (n > 0) {
    out.centroid = {sx / n, sy / n};
    out.rms = {std::sqrt(std::max(0.0, sxx / n - out.centroid.x * out.centroid.x)),
               std::sqrt(std::max(0.0, syy / n - out.centroid.y * out.centroid.y))};
  }
  return out;
}

// Mask construction and I/O -------------------------------------------------

namespace {

Mask blank_mask(double half_extent_um, double pixel_pitch_um, const std::string& name) {
  Mask m;
  m.pixel_pitch_um = pixel_pitch_um;
  m.width = m.height = std::max(1, static_cast<int>(std::ceil(2 * half_extent_um / pixel_pitch_um)));
  m.origin_um = {-0.5 * m.width * pixel_pitch_um, -0.5 * m.height * pixel_pitch_um};
  m.bits.assign(static_cast<std::size_t>(m.width) * m.height, 0);
  m.name = name;
  return m;
}

Vec2 pixel_center(const Mask& m, int ix, int iy) {
  return {m.origin_um.x + (ix + 0.5) * m.pixel_pitch_um,
          m.origin_um.y + (iy + 0.5) * m.pixel_pitch_um};
}

bool in_ellipse(const Vec2& p, const Vec2& c, double rx, double ry) {
  const double dx = (p.x - c.x) / rx;
  const double dy = (p.y - c.y) / ry;
  return dx * dx + dy * dy <= 1.0;
}

bool in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  auto cross = [](const Vec2& u, const Vec2& v, const Vec2& w) {
    return (v.x - u.x) * (w.y - u.y) - (v.y - u.y) * (w.x - u.x);
  };
  const double d1 = cross(a, b, p);
  const double d2 = cross(b, c, p);
  const double d3 = cross(c, a, p);
  const bool has_neg = (d1 < 0) || (d2 < 0) || (d3 < 0);
  const bool has_pos = (d1 > 0) || (d2 > 0) || (d3 > 0);
  return !(has_neg && has_pos);
}

bool in_capsule(const Vec2& p, const Vec2& a, const Vec2& b, double r) {
  const Vec2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double t = len2 > 0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 q = a + ab * t;
  return (p - q).norm() <= r;
}

}  // namespace

Mask make_open_mask(double half_extent_um, double pixel_pitch_um) {
  Mask m = blank_mask(half_extent_um, pixel_pitch_um, "open");
  std::fill(m.bits.begin(), m.bits.end(), std::uint8_t{1});
  return m;
}

Mask make_grating_mask(double period_um, double duty_cycle, double angle_rad,
                       double half_extent_um, double pixel_pitch_um) {
  if (!(period_um > 0) || !(duty_cycle > 0 && duty_cycle < 1))
    throw ConfigInvalid("grating needs period > 0 and duty in (0,1)");
  Mask m = blank_mask(half_extent_um, pixel_pitch_um, "grating");
  const double cs = std::cos(angle_rad), sn = std::sin(angle_rad);
  for (int iy = 0; iy < m.height; ++iy)
    for (int ix = 0; ix < m.width; ++ix) {
      const Vec2 c = pixel_center(m, ix, iy);
      const double s = (c.x * cs + c.y * sn) / period_um;
      const double frac = s - std::floor(s);
      m.bits[static_cast<std::size_t>(iy) * m.width + ix] = frac < duty_cycle ? 1 : 0;
    }
  return m;
}

Mask make_cat_mask(double pixel_pitch_um) {
  Mask m = blank_mask(360.0, pixel_pitch_um, "cat");
  const Vec2 head{0, 150};
  for (int iy = 0; iy < m.height; ++iy)
    for (int ix = 0; ix < m.width; ++ix) {
      const Vec2 p = pixel_center(m, ix, iy);
      bool open = in_ellipse(p, {0, -140}, 165, 190) ||     // body
                  in_ellipse(p, head, 130, 125) ||          // head
                  in_triangle(p, {-128, 190}, {-38, 252}, {-98, 325}) ||  // left ear
                  in_triangle(p, {128, 190}, {38, 252}, {98, 325}) ||     // right ear
                  in_capsule(p, {120, -300}, {215, -255}, 26) ||          // tail
                  in_capsule(p, {215, -255}, {248, -165}, 26) ||
                  in_capsule(p, {248, -165}, {238, -75}, 26);
      // eye holes, ~70 x 50 um each
      if (open && (in_ellipse(p, {-55, 168}, 35, 25) || in_ellipse(p, {55, 168}, 35, 25)))
        open = false;
      m.bits[static_cast<std::size_t>(iy) * m.width + ix] = open ? 1 : 0;
    }
  return m;
}

void write_mask(const Mask& mask, const std::string& pbm_path) {
  mask.validate();
  std::ofstream out(pbm_path, std::ios::binary);
  if (!out) throw Error("cannot open " + pbm_path + " for writing");
  out << "P4\n" << mask.width << " " << mask.height << "\n";
  const int row_bytes = (mask.width + 7) / 8;
  std::vector<std::uint8_t> row(row_bytes);
  for (int iy = mask.height - 1; iy >= 0; --iy) {  // PBM is top row first
    std::fill(row.begin(), row.end(), 0);
    for (int ix = 0; ix < mask.width; ++ix)
      if (!mask.open_at(ix, iy)) row[ix / 8] |= static_cast<std::uint8_t>(0x80u >> (ix % 8));
    out.write(reinterpret_cast<const char*>(row.data()), row_bytes);
  }
  std::ofstream meta(pbm_path + ".meta");
  if (!meta) throw Error("cannot open " + pbm_path + ".meta for writing");
  meta << "name = " << mask.name << "\n"
       << "pixel_pitch_um = " << format_double(mask.pixel_pitch_um) << "\n"
       << "origin_x_um = " << format_double(mask.origin_um.x) << "\n"
       << "origin_y_um = " << format_double(mask.origin_um.y) << "\n";
}

namespace {

// PBM token reader skipping whitespace and # comments
int read_pbm_int(std::istream& in) {
  int c = in.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#')
      while (c != EOF && c != '\n') c = in.get();
    c = in.get();
  }
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw Error("malformed PBM header");
  return value;
}

}  // namespace

Mask read_mask(const std::string& pbm_path) {
  std::ifstream in(pbm_path, std::ios::binary);
  if (!in) throw Error("cannot open " + pbm_path);
  char p, kind;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '4' && kind != '1')) throw BadMagic();
  Mask m;
  m.width = read_pbm_int(in);
  m.height = read_pbm_int(in);
  if (m.width <= 0 || m.height <= 0) throw Error("bad PBM dimensions");
  m.bits.assign(static_cast<std::size_t>(m.width) * m.height, 0);
  if (kind == '4') {
    const int row_bytes = (m.width + 7) / 8;
    std::vector<char> row(row_bytes);
    for (int iy = m.height - 1; iy >= 0; --iy) {
      in.read(row.data(), row_bytes);
      if (in.gcount() != row_bytes) throw TruncatedRecord();
      for (int ix = 0; ix < m.width; ++ix) {
        const bool black = (static_cast<std::uint8_t>(row[ix / 8]) >> (7 - ix % 8)) & 1;
        m.bits[static_cast<std::size_t>(iy) * m.width + ix] = black ? 0 : 1;
      }
    }
  } else {
    for (int iy = m.height - 1; iy >= 0; --iy)
      for (int ix = 0; ix < m.width; ++ix) {
        const int bit = read_pbm_int(in);
        m.bits[static_cast<std::size_t>(iy) * m.width + ix] = bit ? 0 : 1;
      }
  }
  std::ifstream meta(pbm_path + ".meta");
  if (meta) {
    std::string line;
    while (std::getline(meta, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "name") m.name = value;
      else if (key == "pixel_pitch_um") m.pixel_pitch_um = std::stod(value);
      else if (key == "origin_x_um") m.origin_um.x = std::stod(value);
      else if (key == "origin_y_um") m.origin_um.y = std::stod(value);
    }
  }
  m.validate();
  return m;
}

}  // namespace epgi
