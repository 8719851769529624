#pragma once

#include <cstddef>

// Inner-loop arithmetic kernels used by the convolution and dense layers.
// A scalar reference implementation always exists; on x86-64 an AVX2+FMA
// variant is selected at runtime when the CPU supports it.

namespace timbre::kern {

template <typename T>
struct Kernels {
    // y[i] += a * x[i]
    void (*axpy)(std::size_t n, T a, const T* x, T* y);
    // sum_i x[i] * y[i]
    T (*dot)(std::size_t n, const T* x, const T* y);
};

// Runtime-dispatched kernel tables.
const Kernels<float>& f32();
const Kernels<double>& f64();

// Scalar reference tables, always available (equivalence tests).
const Kernels<float>& f32_scalar();
const Kernels<double>& f64_scalar();

// AVX2 tables, or nullptr-filled table accessors returning nullptr when the
// platform/CPU has no AVX2. Exposed so tests can compare variants directly.
const Kernels<float>* f32_avx2();
const Kernels<double>* f64_avx2();

// True when the dispatched tables use the AVX2 variants.
bool simd_active();

// Force the dispatched tables to the scalar reference (e.g. TCNN_NO_SIMD).
void force_scalar(bool on);

}  // namespace timbre::kern
