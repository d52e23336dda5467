#pragma once

// Data-parallel inner loops behind the dense-grid operations. Every kernel has
// a scalar reference implementation and, where the target allows, an AVX2
// variant. The variants are required to produce bit-identical results, which
// the equivalence tests check; the active table is chosen once at startup.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace guidemap::simd {

enum class Level { kScalar, kAvx2 };

std::string_view level_name(Level level) noexcept;

struct OverlapCounts {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
};

/// Cluster centre as seen by the SLIC assignment step.
struct SlicCenter {
  float l, a, b;
  float x, y;
};

struct KernelTable {
  Level level;

  // out[y*width+x] = min_i (x-xs[i])^2 + (y-ys[i])^2, exact. count >= 1.
  void (*min_sq_distance)(int width, int height, const std::int32_t* xs,
                          const std::int32_t* ys, std::size_t count,
                          double* out);

  // v = min(sqrt(v), cap) in place.
  void (*sqrt_clamp)(double* values, std::size_t n, double cap);

  // Largest element; n >= 1.
  double (*max_value)(const double* values, std::size_t n);

  // v = v / max * 255, then 255 - v when invert is set. max > 0.
  void (*scale_to_255)(double* values, std::size_t n, double max, bool invert);

  // out[i] = table[labels[i]].
  void (*gather)(const std::int32_t* labels, std::size_t n, const double* table,
                 double* out);

  // Population counts of a&b and a|b over byte masks holding 0/1.
  OverlapCounts (*overlap)(const std::uint8_t* a, const std::uint8_t* b,
                           std::size_t n);

  // One row span of the SLIC assignment step: for pixels x in
  // [x_begin, x_begin+count) compute
  //   D = (dl*dl + da*da + db*db) + ((x-cx)^2 + dy_sq) * spatial_weight
  // and take (D, id) where D < dist.
  void (*slic_assign_span)(const float* l, const float* a, const float* b,
                           int x_begin, int count, float dy_sq,
                           const SlicCenter& center, float spatial_weight,
                           float* dist, std::int32_t* label, std::int32_t id);
};

const KernelTable& scalar_kernels() noexcept;

/// AVX2 table, or nullptr when it was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels() noexcept;

/// Table in use. Defaults to the widest supported level; the environment
/// variable GUIDEMAP_SIMD=scalar forces the reference kernels.
const KernelTable& kernels() noexcept;

/// Overrides the active level (tests and benchmarks). Returns false if the
/// level is unavailable on this machine.
bool set_level(Level level) noexcept;

}  // namespace guidemap::simd
