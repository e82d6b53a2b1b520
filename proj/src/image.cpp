#include "epgi/image.hpp"

#include <algorithm>
#include <stdexcept>

namespace epgi {

void gaussian_blur_inplace(std::vector<double>& values, int nx, int ny, double sigma_px) {
  if (sigma_px < 0) throw std::invalid_argument("sigma must be >= 0");
  if (sigma_px == 0.0 || values.empty()) return;

  const int radius = std::max(1, static_cast<int>(std::ceil(5.0 * sigma_px)));
  std::vector<double> kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k)
    kernel[k + radius] = std::exp(-0.5 * (k / sigma_px) * (k / sigma_px));
  const double ksum = [&] {
    double s = 0;
    for (double w : kernel) s += w;
    return s;
  }();
  for (double& w : kernel) w /= ksum;

  std::vector<double> tmp(values.size());
  // rows
  for (int iy = 0; iy < ny; ++iy) {
    const double* row = values.data() + static_cast<std::size_t>(iy) * nx;
    double* out = tmp.data() + static_cast<std::size_t>(iy) * nx;
    for (int ix = 0; ix < nx; ++ix) {
      double acc = 0, wsum = 0;
      const int lo = std::max(-radius, -ix), hi = std::min(radius, nx - 1 - ix);
      for (int k = lo; k <= hi; ++k) {
        acc += kernel[k + radius] * row[ix + k];
        wsum += kernel[k + radius];
      }
      out[ix] = acc / wsum;
    }
  }
  // columns
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      double acc = 0, wsum = 0;
      const int lo = std::max(-radius, -iy), hi = std::min(radius, ny - 1 - iy);
      for (int k = lo; k <= hi; ++k) {
        acc += kernel[k + radius] * tmp[static_cast<std::size_t>(iy + k) * nx + ix];
        wsum += kernel[k + radius];
      }
      values[static_cast<std::size_t>(iy) * nx + ix] = acc / wsum;
    }
  }
}

double otsu_threshold(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  const double mn = *mn_it, mx = *mx_it;
  if (mx <= mn) return mn;

  constexpr int kLevels = 256;
  std::vector<std::size_t> hist(kLevels, 0);
  const double scale = (kLevels - 1) / (mx - mn);
  for (double v : values) {
    int bin = static_cast<int>((v - mn) * scale);
    bin = std::clamp(bin, 0, kLevels - 1);
    ++hist[bin];
  }

  const double total = static_cast<double>(values.size());
  double sum_all = 0;
  for (int i = 0; i < kLevels; ++i) sum_all += i * static_cast<double>(hist[i]);

  double w0 = 0, sum0 = 0, best_var = -1;
  int best_level = 0;
  for (int i = 0; i < kLevels - 1; ++i) {
    w0 += static_cast<double>(hist[i]);
    if (w0 == 0) continue;
    const double w1 = total - w0;
    if (w1 == 0) break;
    sum0 += i * static_cast<double>(hist[i]);
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_level = i;
    }
  }
  return mn + (best_level + 0.5) / scale;
}

double dice_coefficient(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dice: size mismatch");
  std::size_t na = 0, nb = 0, nab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += (a[i] != 0);
    nb += (b[i] != 0);
    nab += (a[i] != 0 && b[i] != 0);
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(nab) / static_cast<double>(na + nb);
}

}  // namespace epgi
