#include "guidemap/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace guidemap::simd {
namespace {

void min_sq_distance(int width, int height, const std::int32_t* xs,
                     const std::int32_t* ys, std::size_t count, double* out) {
  for (int y = 0; y < height; ++y) {
    double* row = out + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (std::size_t i = 0; i < count; ++i) {
        const std::int64_t dx = x - xs[i];
        const std::int64_t dy = y - ys[i];
        best = std::min(best, dx * dx + dy * dy);
      }
      row[x] = static_cast<double>(best);
    }
  }
}

void sqrt_clamp(double* values, std::size_t n, double cap) {
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = std::min(std::sqrt(values[i]), cap);
  }
}

double max_value(const double* values, std::size_t n) {
  double m = values[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, values[i]);
  return m;
}

void scale_to_255(double* values, std::size_t n, double max, bool invert) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = values[i] / max * 255.0;
    values[i] = invert ? 255.0 - v : v;
  }
}

void gather(const std::int32_t* labels, std::size_t n, const double* table,
            double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = table[labels[i]];
}

OverlapCounts overlap(const std::uint8_t* a, const std::uint8_t* b,
                      std::size_t n) {
  OverlapCounts c;
  for (std::size_t i = 0; i < n; ++i) {
    c.intersection += a[i] & b[i];
    c.union_ += a[i] | b[i];
  }
  return c;
}

void slic_assign_span(const float* l, const float* a, const float* b,
                      int x_begin, int count, float dy_sq,
                      const SlicCenter& center, float spatial_weight,
                      float* dist, std::int32_t* label, std::int32_t id) {
  for (int i = 0; i < count; ++i) {
    const int x = x_begin + i;
    const float dl = l[x] - center.l;
    const float da = a[x] - center.a;
    const float db = b[x] - center.b;
    const float dx = static_cast<float>(x) - center.x;
    const float color = (dl * dl + da * da) + db * db;
    const float spatial = (dx * dx + dy_sq) * spatial_weight;
    const float d = color + spatial;
    if (d < dist[x]) {
      dist[x] = d;
      label[x] = id;
    }
  }
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{
      Level::kScalar, min_sq_distance, sqrt_clamp,      max_value,
      scale_to_255,   gather,          overlap,         slic_assign_span,
  };
  return table;
}

}  // namespace guidemap::simd
