#include "epgi/resolution_fit.hpp"

#include <algorithm>
#include <cmath>

#include "epgi/nelder_mead.hpp"
#include "epgi/rng.hpp"

namespace epgi {

namespace {

constexpr double kFwhmFactor = 2.3548200450309493;  // 2 sqrt(2 ln 2)

double square_wave(const GratingSpec& spec, const Vec2& image_point) {
  const double cs = std::cos(spec.line_angle_rad);
  const double sn = std::sin(spec.line_angle_rad);
  const double s = (image_point.x * cs + image_point.y * sn - spec.phase_offset_um) /
                   spec.period_um;
  const double frac = s - std::floor(s);
  return frac < spec.duty_cycle ? 1.0 : 0.0;
}

Image traced_grating(const GratingSpec& spec, const OpticalSystem& sys, const Binning& grid,
                     const Vec2& shift, double rotation, double axial) {
  Image img(grid);
  ChiefRayTracer tracer(sys);
  const double cr = std::cos(rotation), sr = std::sin(rotation);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const Vec2 c = grid.center(ix, iy);
      const Vec3 source{cr * c.x - sr * c.y + shift.x, sr * c.x + cr * c.y + shift.y, axial};
      img.at(ix, iy) = square_wave(spec, tracer.trace(source));
    }
  return img;
}

std::vector<double> pack(const FitParams& p) {
  return {p.sigma_um, p.amplitude, p.baseline, p.shift_um.x, p.shift_um.y,
          p.rotation_rad, p.axial_shift_um};
}

FitParams unpack(const std::vector<double>& x) {
  FitParams p;
  p.sigma_um = x[0];
  p.amplitude = x[1];
  p.baseline = x[2];
  p.shift_um = {x[3], x[4]};
  p.rotation_rad = x[5];
  p.axial_shift_um = x[6];
  return p;
}

GhostImage bin_positions(const std::vector<Vec2>& positions, const Binning& binning) {
  GhostImage img(binning);
  img.n_input = positions.size();
  for (const Vec2& p : positions) {
    const int ix = binning.index_x(p.x);
    const int iy = binning.index_y(p.y);
    if (binning.contains(ix, iy)) {
      img.at(ix, iy) += 1.0;
      ++img.n_contributing;
    }
  }
  return img;
}

}  // namespace

void GratingSpec::validate() const {
  if (!(period_um > 0)) throw ConfigInvalid("grating period must be > 0");
  if (!(duty_cycle > 0 && duty_cycle < 1)) throw ConfigInvalid("duty cycle must be in (0, 1)");
}

double fwhm(double sigma) { return kFwhmFactor * sigma; }

Image ideal_target_image(const GratingSpec& spec, const OpticalSystem& sys,
                         const Binning& grid) {
  spec.validate();
  return traced_grating(spec, sys, grid, {0, 0}, 0.0, 0.0);
}

Image blur(const Image& img, double sigma_um) {
  return gaussian_blur(img, sigma_um / img.binning.bin_size_um);
}

Image model_image(const FitParams& params, const GratingSpec& spec, const OpticalSystem& sys,
                  const Binning& grid) {
  Image img = traced_grating(spec, sys, grid, params.shift_um, params.rotation_rad,
                             params.axial_shift_um);
  img = blur(img, params.sigma_um);
  for (double& v : img.values) v = params.amplitude * v + params.baseline;
  return img;
}

FitResult fit(const GhostImage& data, const GratingSpec& spec, const OpticalSystem& sys,
              const FitParams& init, const FitOptions& options) {
  spec.validate();
  if (data.counts.empty() || !(data.total() > 0)) throw Error("fit needs non-empty data");
  if (!(init.sigma_um > 0)) throw ConfigInvalid("initial sigma must be > 0");

  const double axial_limit = 0.2 * sys.mirror.focal_length_um;
  auto objective_for = [&](const std::vector<double>& counts) {
    return [&, counts](const std::vector<double>& x) -> double {
      const FitParams p = unpack(x);
      if (!(p.sigma_um > 1e-4) || !(p.amplitude > 0) ||
          std::abs(p.axial_shift_um) >= axial_limit || std::abs(p.shift_um.x) > 20.0 ||
          std::abs(p.shift_um.y) > 20.0)
        return 1e30;
      const Image model = model_image(p, spec, sys, data.binning);
      double l1 = 0;
      for (std::size_t i = 0; i < counts.size(); ++i)
        l1 += std::abs(counts[i] - model.values[i]);
      return l1;
    };
  };
  const auto objective = objective_for(data.counts);

  const double mean_count = data.total() / static_cast<double>(data.counts.size());
  const std::vector<double> step{0.3 * init.sigma_um,
                                 std::max(0.3 * init.amplitude, 0.1 * mean_count + 1e-9),
                                 std::max(0.3 * std::abs(init.baseline), 0.1 * mean_count + 1e-9),
                                 0.5,
                                 0.5,
                                 0.02,
                                 15.0};

  // fixed perturbation pattern keeps restarts deterministic
  static constexpr double kJog[][7] = {
      {1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0},
      {1.6, 0.7, 1.0, 1.2, -0.8, 1.5, 1.0},
      {0.6, 1.4, 1.0, -1.1, 0.9, -1.5, -1.0},
  };

  NelderMeadResult best;
  best.value = 1e301;
  const int starts = std::max(1, options.restarts);
  for (int r = 0; r < starts; ++r) {
    const auto& jog = kJog[r % 3];
    std::vector<double> x0 = pack(init);
    x0[0] *= jog[0];
    x0[1] *= jog[1];
    x0[3] += jog[3] * step[3];
    x0[4] += jog[4] * step[4];
    x0[5] += jog[5] * step[5];
    x0[6] += jog[6] * step[6];
    NelderMeadResult run =
        nelder_mead(objective, x0, step, options.tolerance, options.max_iterations);
    if (run.value < best.value) best = run;
  }

  FitResult result;
  result.params = unpack(best.x);
  result.fwhm_um = fwhm(result.params.sigma_um);
  result.residual_l1 = best.value;
  result.iterations = best.iterations;
  result.converged = best.converged;

  if (options.pair_positions && options.bootstrap_resamples > 0 &&
      !options.pair_positions->empty()) {
    const auto& positions = *options.pair_positions;
    std::vector<double> sigmas;
    sigmas.reserve(options.bootstrap_resamples);
    const std::vector<double> bstep{0.15 * result.params.sigma_um,
                                    std::max(0.15 * result.params.amplitude, 1e-9),
                                    std::max(0.15 * std::abs(result.params.baseline), 0.05 * mean_count + 1e-9),
                                    0.2,
                                    0.2,
                                    0.01,
                                    5.0};
    Rng root(options.bootstrap_seed);
    for (int b = 0; b < options.bootstrap_resamples; ++b) {
      Rng rng = root.split(static_cast<std::uint64_t>(b));
      std::vector<Vec2> resampled(positions.size());
      for (auto& q : resampled) q = positions[rng.uniform_below(positions.size())];
      const GhostImage sample = bin_positions(resampled, data.binning);
      const auto boot_objective = objective_for(sample.counts);
      NelderMeadResult run = nelder_mead(boot_objective, pack(result.params), bstep,
                                         options.tolerance, options.bootstrap_max_iterations);
      sigmas.push_back(run.x[0]);
    }
    double mean = 0;
    for (double s : sigmas) mean += s;
    mean /= static_cast<double>(sigmas.size());
    double var = 0;
    for (double s : sigmas) var += (s - mean) * (s - mean);
    result.sigma_uncertainty_um =
        sigmas.size() > 1 ? std::sqrt(var / (static_cast<double>(sigmas.size()) - 1)) : 0.0;
  }
  return result;
}

}  // namespace epgi
