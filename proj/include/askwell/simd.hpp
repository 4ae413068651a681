#pragma once

// Dense inner-loop kernels used by the NMF and coordinate-descent solvers.
//
// Every kernel has a scalar reference implementation and, on x86-64 builds
// with ASKWELL_HAVE_AVX2, an AVX2/FMA variant. The variant is chosen once at
// startup from the CPU feature flags; setting ASKWELL_SIMD=scalar in the
// environment forces the reference kernels.

#include <cstddef>
#include <span>
#include <string_view>

namespace askwell::simd {

struct KernelTable {
    std::string_view name;
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*sum_squares)(const double* x, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // x *= a
    void (*scale)(double a, double* x, std::size_t n);
    // target[i] *= numer[i] / (denom[i] + eps)
    void (*multiplicative_update)(double* target, const double* numer, const double* denom,
                                  double eps, std::size_t n);
    // sum_i w[i] * x[i] * y[i]
    double (*weighted_dot)(const double* w, const double* x, const double* y, std::size_t n);
};

const KernelTable& scalar_kernels();

// Null when the AVX2 variant was not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// The table selected for this process.
const KernelTable& active();

inline double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), x.size());
}

inline double sum_squares(std::span<const double> x) {
    return active().sum_squares(x.data(), x.size());
}

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), x.size());
}

inline void scale(double a, std::span<double> x) { active().scale(a, x.data(), x.size()); }

inline void multiplicative_update(std::span<double> target, std::span<const double> numer,
                                  std::span<const double> denom, double eps) {
    active().multiplicative_update(target.data(), numer.data(), denom.data(), eps,
                                   target.size());
}

inline double weighted_dot(std::span<const double> w, std::span<const double> x,
                           std::span<const double> y) {
    return active().weighted_dot(w.data(), x.data(), y.data(), x.size());
}

}  // namespace askwell::simd
