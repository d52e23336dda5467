// Compiled with -mavx2. Nothing in here may be called unless the CPU reports
// AVX2; dispatch.cpp guards that.

#include "guidemap/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace guidemap::simd {
namespace avx2 {
namespace {

void min_sq_distance(int width, int height, const std::int32_t* xs,
                     const std::int32_t* ys, std::size_t count, double* out) {
  const __m256i lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
  for (int y = 0; y < height; ++y) {
    double* row = out + static_cast<std::size_t>(y) * width;
    int x = 0;
    for (; x + 8 <= width; x += 8) {
      const __m256i px = _mm256_add_epi32(_mm256_set1_epi32(x), lane);
      __m256i best = _mm256_set1_epi32(0x7fffffff);
      for (std::size_t i = 0; i < count; ++i) {
        const __m256i dx = _mm256_sub_epi32(px, _mm256_set1_epi32(xs[i]));
        const std::int32_t dy = y - ys[i];
        const __m256i d2 = _mm256_add_epi32(_mm256_mullo_epi32(dx, dx),
                                            _mm256_set1_epi32(dy * dy));
        best = _mm256_min_epi32(best, d2);
      }
      _mm256_storeu_pd(row + x, _mm256_cvtepi32_pd(_mm256_castsi256_si128(best)));
      _mm256_storeu_pd(row + x + 4,
                       _mm256_cvtepi32_pd(_mm256_extracti128_si256(best, 1)));
    }
    for (; x < width; ++x) {
      std::int64_t best = INT64_MAX;
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
  const __m256d vcap = _mm256_set1_pd(cap);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_sqrt_pd(_mm256_loadu_pd(values + i));
    _mm256_storeu_pd(values + i, _mm256_min_pd(v, vcap));
  }
  for (; i < n; ++i) values[i] = std::min(std::sqrt(values[i]), cap);
}

double max_value(const double* values, std::size_t n) {
  std::size_t i = 0;
  double m = values[0];
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(values);
    for (i = 4; i + 4 <= n; i += 4) {
      acc = _mm256_max_pd(acc, _mm256_loadu_pd(values + i));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  }
  for (; i < n; ++i) m = std::max(m, values[i]);
  return m;
}

void scale_to_255(double* values, std::size_t n, double max, bool invert) {
  const __m256d vmax = _mm256_set1_pd(max);
  const __m256d v255 = _mm256_set1_pd(255.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_mul_pd(_mm256_div_pd(_mm256_loadu_pd(values + i), vmax), v255);
    if (invert) v = _mm256_sub_pd(v255, v);
    _mm256_storeu_pd(values + i, v);
  }
  for (; i < n; ++i) {
    const double v = values[i] / max * 255.0;
    values[i] = invert ? 255.0 - v : v;
  }
}

void gather(const std::int32_t* labels, std::size_t n, const double* table,
            double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(labels + i));
    _mm256_storeu_pd(out + i, _mm256_i32gather_pd(table, idx, 8));
  }
  for (; i < n; ++i) out[i] = table[labels[i]];
}

OverlapCounts overlap(const std::uint8_t* a, const std::uint8_t* b,
                      std::size_t n) {
  const __m256i zero = _mm256_setzero_si256();
  __m256i inter = zero;
  __m256i uni = zero;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    inter = _mm256_add_epi64(inter, _mm256_sad_epu8(_mm256_and_si256(va, vb), zero));
    uni = _mm256_add_epi64(uni, _mm256_sad_epu8(_mm256_or_si256(va, vb), zero));
  }
  alignas(32) std::uint64_t li[4];
  alignas(32) std::uint64_t lu[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(li), inter);
  _mm256_store_si256(reinterpret_cast<__m256i*>(lu), uni);
  OverlapCounts c{li[0] + li[1] + li[2] + li[3], lu[0] + lu[1] + lu[2] + lu[3]};
  for (; i < n; ++i) {
    c.intersection += a[i] & b[i];
    c.union_ += a[i] | b[i];
  }
  return c;
}

void slic_assign_span(const float* l, const float* a, const float* b,
                      int x_begin, int count, float dy_sq,
                      const SlicCenter& center, float spatial_weight,
                      float* dist, std::int32_t* label, std::int32_t id) {
  const __m256 cl = _mm256_set1_ps(center.l);
  const __m256 ca = _mm256_set1_ps(center.a);
  const __m256 cb = _mm256_set1_ps(center.b);
  const __m256 cx = _mm256_set1_ps(center.x);
  const __m256 vdy = _mm256_set1_ps(dy_sq);
  const __m256 w = _mm256_set1_ps(spatial_weight);
  const __m256i vid = _mm256_set1_epi32(id);
  const __m256i lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
  int i = 0;
  for (; i + 8 <= count; i += 8) {
    const int x = x_begin + i;
    const __m256 dl = _mm256_sub_ps(_mm256_loadu_ps(l + x), cl);
    const __m256 da = _mm256_sub_ps(_mm256_loadu_ps(a + x), ca);
    const __m256 db = _mm256_sub_ps(_mm256_loadu_ps(b + x), cb);
    const __m256 px =
        _mm256_cvtepi32_ps(_mm256_add_epi32(_mm256_set1_epi32(x), lane));
    const __m256 dx = _mm256_sub_ps(px, cx);
    const __m256 color = _mm256_add_ps(
        _mm256_add_ps(_mm256_mul_ps(dl, dl), _mm256_mul_ps(da, da)),
        _mm256_mul_ps(db, db));
    const __m256 spatial =
        _mm256_mul_ps(_mm256_add_ps(_mm256_mul_ps(dx, dx), vdy), w);
    const __m256 d = _mm256_add_ps(color, spatial);
    const __m256 old = _mm256_loadu_ps(dist + x);
    const __m256 closer = _mm256_cmp_ps(d, old, _CMP_LT_OQ);
    _mm256_storeu_ps(dist + x, _mm256_blendv_ps(old, d, closer));
    const __m256i old_label =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(label + x));
    const __m256i merged = _mm256_castps_si256(
        _mm256_blendv_ps(_mm256_castsi256_ps(old_label),
                         _mm256_castsi256_ps(vid), closer));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(label + x), merged);
  }
  for (; i < count; ++i) {
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

const KernelTable& table() noexcept {
  static const KernelTable t{
      Level::kAvx2, min_sq_distance, sqrt_clamp,      max_value,
      scale_to_255, gather,          overlap,         slic_assign_span,
  };
  return t;
}

}  // namespace avx2
}  // namespace guidemap::simd
