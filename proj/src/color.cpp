#include "guidemap/color.hpp"

#include <array>
#include <cmath>

namespace guidemap {
namespace {

const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
    return t;
  }();
  return table;
}

double lab_f(double t) {
  constexpr double kEps = 216.0 / 24389.0;
  constexpr double kKappa = 24389.0 / 27.0;
  return t > kEps ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

}  // namespace

Lab srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) noexcept {
  const auto& lin = linear_table();
  const double r = lin[r8];
  const double g = lin[g8];
  const double b = lin[b8];
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  const double fx = lab_f(x);
  const double fy = lab_f(y);
  const double fz = lab_f(z);
  return Lab{116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage to_lab(const ImageBuffer& image) {
  LabImage out;
  out.width = image.width();
  out.height = image.height();
  const std::size_t n = image.pixel_count();
  out.l.resize(n);
  out.a.resize(n);
  out.b.resize(n);
  const auto rgb = image.rgb();
  for (std::size_t i = 0; i < n; ++i) {
    const Lab lab = srgb_to_lab(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
    out.l[i] = static_cast<float>(lab.l);
    out.a[i] = static_cast<float>(lab.a);
    out.b[i] = static_cast<float>(lab.b);
  }
  return out;
}

}  // namespace guidemap
