#include "askwell/simd.hpp"

namespace askwell::simd {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sum_squares_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void multiplicative_update_scalar(double* target, const double* numer, const double* denom,
                                  double eps, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) target[i] *= numer[i] / (denom[i] + eps);
}

double weighted_dot_scalar(const double* w, const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += w[i] * x[i] * y[i];
    return acc;
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{
        "scalar",         dot_scalar,   sum_squares_scalar, sum_scalar, axpy_scalar,
        scale_scalar, multiplicative_update_scalar, weighted_dot_scalar,
    };
    return table;
}

}  // namespace askwell::simd
