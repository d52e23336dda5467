#include "guidemap/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace guidemap::simd {

#if defined(GUIDEMAP_HAVE_AVX2)
namespace avx2 {
const KernelTable& table() noexcept;
}
#endif

std::string_view level_name(Level level) noexcept {
  switch (level) {
    case Level::kScalar: return "scalar";
    case Level::kAvx2: return "avx2";
  }
  return "unknown";
}

const KernelTable* avx2_kernels() noexcept {
#if defined(GUIDEMAP_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2::table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* detect() noexcept {
  const char* forced = std::getenv("GUIDEMAP_SIMD");
  if (forced != nullptr && std::strcmp(forced, "scalar") == 0) {
    return &scalar_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() noexcept {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

const KernelTable& kernels() noexcept {
  return *active().load(std::memory_order_acquire);
}

bool set_level(Level level) noexcept {
  const KernelTable* t = nullptr;
  switch (level) {
    case Level::kScalar: t = &scalar_kernels(); break;
    case Level::kAvx2: t = avx2_kernels(); break;
  }
  if (t == nullptr) return false;
  active().store(t, std::memory_order_release);
  return true;
}

}  // namespace guidemap::simd
