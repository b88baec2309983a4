#include <atomic>
#include <cstdlib>
#include <string>

#include "xlmap/kernels.hpp"

namespace xlmap::kernels {

#if !defined(XLMAP_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(XLMAP_HAVE_NEON)
const KernelTable* neon_table() { return nullptr; }
#endif

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(XLMAP_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(XLMAP_HAVE_NEON)
      return true;  // mandatory on aarch64
#else
      return false;
#endif
  }
  return false;
}

Isa initial_isa() {
  if (const char* env = std::getenv("XLMAP_KERNELS")) {
    const std::string wanted(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (wanted == to_string(isa) && cpu_supports(isa)) return isa;
    }
  }
  if (cpu_supports(Isa::Avx2)) return Isa::Avx2;
  if (cpu_supports(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table_for(initial_isa())};
  return slot;
}

std::atomic<Isa>& active_isa_slot() {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

}  // namespace

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (cpu_supports(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& table_for(Isa isa) {
  switch (isa) {
    case Isa::Avx2:
      if (const KernelTable* t = avx2_table(); t && cpu_supports(isa)) return *t;
      break;
    case Isa::Neon:
      if (const KernelTable* t = neon_table(); t && cpu_supports(isa)) return *t;
      break;
    case Isa::Scalar: break;
  }
  return scalar_table();
}

Isa active_isa() { return active_isa_slot().load(std::memory_order_relaxed); }

bool set_kernel_isa(Isa isa) {
  if (!cpu_supports(isa)) return false;
  active_slot().store(&table_for(isa), std::memory_order_relaxed);
  active_isa_slot().store(isa, std::memory_order_relaxed);
  return true;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

}  // namespace xlmap::kernels
