#pragma once

// Data-parallel inner loops shared by every numeric module. Each kernel has a
// scalar reference implementation and, where the build target allows it, a
// SIMD variant (AVX2+FMA on x86-64, NEON on aarch64). The active variant is
// chosen once at startup from CPU features and can be overridden with the
// XLMAP_KERNELS environment variable ("scalar", "avx2", "neon") or
// set_kernel_isa().
//
// Variants are equivalent up to floating-point reassociation, not bitwise.
// Within one process the selected variant is fixed, so results are
// reproducible run to run.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace xlmap::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in

/// ISAs this binary carries AND the running CPU supports.
std::vector<Isa> available_isas();

Isa active_isa();

/// Returns false (and leaves the selection unchanged) if `isa` is unavailable.
bool set_kernel_isa(Isa isa);

const KernelTable& table_for(Isa isa);
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum_squares(std::span<const double> a) {
  return active().sum_squares(a.data(), a.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scale(double alpha, std::span<double> x) { active().scale(alpha, x.data(), x.size()); }

}  // namespace xlmap::kernels
