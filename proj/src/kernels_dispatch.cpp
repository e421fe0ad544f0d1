#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace qus::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(QUS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* select_default() noexcept {
  if (const char* env = std::getenv("QUS_SIMD")) {
    if (std::string_view(env) == "scalar") return &scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& active_slot() noexcept {
  static std::atomic<const KernelTable*> slot{select_default()};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable* avx2_table() noexcept {
#if defined(QUS_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  if (supported) return &detail::avx2_table_unchecked();
#endif
  return nullptr;
}

const KernelTable& active() noexcept { return *active_slot().load(std::memory_order_acquire); }

ScopedIsa::ScopedIsa(Isa isa) : previous_(&active()) {
  const KernelTable* wanted = isa == Isa::avx2 ? avx2_table() : &scalar_table();
  if (wanted == nullptr) wanted = &scalar_table();
  active_slot().store(wanted, std::memory_order_release);
}

ScopedIsa::~ScopedIsa() { active_slot().store(previous_, std::memory_order_release); }

}  // namespace qus::kernels
