#include "guidemap/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "guidemap/error.hpp"
#include "guidemap/simd/kernels.hpp"

namespace guidemap {

void check_in_bounds(Point p, int width, int height) {
  if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) {
    throw Error(Errc::kCoordinateRange,
                "click (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                    ") outside " + std::to_string(width) + "x" +
                    std::to_string(height) + " grid");
  }
}

namespace {

std::vector<double> min_sq_distance_field(std::span<const Point> clicks,
                                          int width, int height) {
  std::vector<std::int32_t> xs;
  std::vector<std::int32_t> ys;
  xs.reserve(clicks.size());
  ys.reserve(clicks.size());
  for (Point c : clicks) {
    check_in_bounds(c, width, height);
    xs.push_back(c.x);
    ys.push_back(c.y);
  }
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  simd::kernels().min_sq_distance(width, height, xs.data(), ys.data(),
                                  xs.size(), out.data());
  return out;
}

// One-dimensional lower envelope of parabolas (Felzenszwalb & Huttenlocher).
// f holds squared distances along the line; result written back to d.
void edt_1d(const double* f, std::size_t n, double* d, std::vector<int>& v,
            std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (std::size_t qi = 1; qi < n; ++qi) {
    const double q = static_cast<double>(qi);
    double s;
    while (true) {
      const double vk = v[k];
      s = ((f[qi] + q * q) - (f[v[k]] + vk * vk)) / (2.0 * q - 2.0 * vk);
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = static_cast<int>(qi);
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (std::size_t qi = 0; qi < n; ++qi) {
    const double q = static_cast<double>(qi);
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[qi] = dq * dq + f[v[k]];
  }
}

}  // namespace

GuidanceChannel euclidean_guidance(std::span<const Point> clicks, int width,
                                   int height, ChannelKind kind) {
  if (clicks.empty()) {
    return GuidanceChannel::filled(width, height, kChannelMax, kind);
  }
  auto values = min_sq_distance_field(clicks, width, height);
  simd::kernels().sqrt_clamp(values.data(), values.size(), kChannelMax);
  return GuidanceChannel(width, height, std::move(values), kind);
}

GuidanceChannel gaussian_guidance(std::span<const Point> clicks, double sigma,
                                  int width, int height, ChannelKind kind) {
  if (!(sigma > 0.0)) {
    throw Error(Errc::kParameter, "gaussian sigma must be positive");
  }
  if (clicks.empty()) return GuidanceChannel::filled(width, height, 0.0, kind);
  // exp is decreasing, so the max over clicks is taken at the nearest click.
  auto values = min_sq_distance_field(clicks, width, height);
  const double denom = 2.0 * sigma * sigma;
  for (double& v : values) v = 255.0 * std::exp(-v / denom);
  return GuidanceChannel(width, height, std::move(values), kind);
}

std::vector<double> squared_distance_transform(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  const std::size_t n = mask.pixel_count();
  if (mask.empty()) {
    return std::vector<double>(n, std::numeric_limits<double>::infinity());
  }
  // Large finite sentinel keeps the envelope arithmetic free of inf - inf.
  constexpr double kFar = 1e20;
  std::vector<double> grid(n);
  const auto bits = mask.bits();
  for (std::size_t i = 0; i < n; ++i) grid[i] = bits[i] ? 0.0 : kFar;

  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> line(static_cast<std::size_t>(std::max(w, h)));
  std::vector<double> out(line.size());
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) line[y] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(line.data(), static_cast<std::size_t>(h), out.data(), v, z);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = out[y];
  }
  for (int y = 0; y < h; ++y) {
    double* row = grid.data() + static_cast<std::size_t>(y) * w;
    edt_1d(row, static_cast<std::size_t>(w), out.data(), v, z);
    std::copy(out.begin(), out.begin() + w, row);
  }
  return grid;
}

GuidanceChannel prev_mask_channel(const BinaryMask& mask) {
  if (mask.empty()) {
    return GuidanceChannel::filled(mask.width(), mask.height(), kChannelMax,
                                   ChannelKind::kPrevMask);
  }
  auto values = squared_distance_transform(mask);
  simd::kernels().sqrt_clamp(values.data(), values.size(), kChannelMax);
  return GuidanceChannel(mask.width(), mask.height(), std::move(values),
                         ChannelKind::kPrevMask);
}

GuidanceChannel rescale_to_255(std::span<const double> raw, int width,
                               int height, ChannelKind kind, bool invert) {
  if (raw.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(Errc::kShape, "raw grid length does not match width*height");
  }
  for (double v : raw) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(Errc::kNumericDomain, "rescale input must be finite and non-negative");
    }
  }
  std::vector<double> values(raw.begin(), raw.end());
  const auto& k = simd::kernels();
  const double max = values.empty() ? 0.0 : k.max_value(values.data(), values.size());
  if (max == 0.0) {
    std::fill(values.begin(), values.end(), 0.0);
  } else {
    k.scale_to_255(values.data(), values.size(), max, invert);
  }
  return GuidanceChannel(width, height, std::move(values), kind);
}

double miou(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw Error(Errc::kShape, "miou: mask dimensions differ");
  }
  const auto c = simd::kernels().overlap(pred.bits().data(), gt.bits().data(),
                                         pred.pixel_count());
  if (c.union_ == 0) return 1.0;
  return static_cast<double>(c.intersection) / static_cast<double>(c.union_);
}

}  // namespace guidemap
