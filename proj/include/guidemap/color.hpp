#pragma once

#include <cmath>
#include <vector>

#include "guidemap/types.hpp"

namespace guidemap {

/// CIELAB image (D65 white point) stored as three float planes.
struct LabImage {
  int width = 0;
  int height = 0;
  std::vector<float> l;
  std::vector<float> a;
  std::vector<float> b;
};

struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

Lab srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;
LabImage to_lab(const ImageBuffer& image);

inline double lab_distance(const Lab& x, const Lab& y) noexcept {
  const double dl = x.l - y.l;
  const double da = x.a - y.a;
  const double db = x.b - y.b;
  return std::sqrt(dl * dl + da * da + db * db);
}

}  // namespace guidemap
