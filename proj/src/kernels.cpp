#include "timbre/kernels.hpp"

#include <atomic>
#include <cstdlib>

#if defined(__x86_64__) || defined(_M_X64)
#define TCNN_X86 1
#include <immintrin.h>
#else
#define TCNN_X86 0
#endif

namespace timbre::kern {

namespace {

template <typename T>
void axpy_scalar(std::size_t n, T a, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
T dot_scalar(std::size_t n, const T* x, const T* y) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

const Kernels<float> kScalarF32{&axpy_scalar<float>, &dot_scalar<float>};
const Kernels<double> kScalarF64{&axpy_scalar<double>, &dot_scalar<double>};

#if TCNN_X86

__attribute__((target("avx2,fma"))) void axpy_avx2_f32(std::size_t n, float a,
                                                       const float* x, float* y) {
    std::size_t i = 0;
    const __m256 va = _mm256_set1_ps(a);
    for (; i + 8 <= n; i += 8) {
        __m256 vy = _mm256_loadu_ps(y + i);
        vy = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vy);
        _mm256_storeu_ps(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2,fma"))) float dot_avx2_f32(std::size_t n, const float* x,
                                                       const float* y) {
    std::size_t i = 0;
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8)
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    acc0 = _mm256_add_ps(acc0, acc1);
    __m128 lo = _mm256_castps256_ps128(acc0);
    __m128 hi = _mm256_extractf128_ps(acc0, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_hadd_ps(lo, lo);
    lo = _mm_hadd_ps(lo, lo);
    float acc = _mm_cvtss_f32(lo);
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

__attribute__((target("avx2,fma"))) void axpy_avx2_f64(std::size_t n, double a,
                                                       const double* x, double* y) {
    std::size_t i = 0;
    const __m256d va = _mm256_set1_pd(a);
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2,fma"))) double dot_avx2_f64(std::size_t n, const double* x,
                                                        const double* y) {
    std::size_t i = 0;
    __m256d acc = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    lo = _mm_add_pd(lo, hi);
    double out = _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
    for (; i < n; ++i) out += x[i] * y[i];
    return out;
}

const Kernels<float> kAvx2F32{&axpy_avx2_f32, &dot_avx2_f32};
const Kernels<double> kAvx2F64{&axpy_avx2_f64, &dot_avx2_f64};

bool cpu_has_avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

#endif  // TCNN_X86

std::atomic<bool> g_force_scalar{std::getenv("TCNN_NO_SIMD") != nullptr};

bool use_avx2() {
#if TCNN_X86
    static const bool has = cpu_has_avx2();
    return has && !g_force_scalar.load(std::memory_order_relaxed);
#else
    return false;
#endif
}

}  // namespace

const Kernels<float>& f32() {
#if TCNN_X86
    if (use_avx2()) return kAvx2F32;
#endif
    return kScalarF32;
}

const Kernels<double>& f64() {
#if TCNN_X86
    if (use_avx2()) return kAvx2F64;
#endif
    return kScalarF64;
}

const Kernels<float>& f32_scalar() { return kScalarF32; }
const Kernels<double>& f64_scalar() { return kScalarF64; }

const Kernels<float>* f32_avx2() {
#if TCNN_X86
    if (cpu_has_avx2()) return &kAvx2F32;
#endif
    return nullptr;
}

const Kernels<double>* f64_avx2() {
#if TCNN_X86
    if (cpu_has_avx2()) return &kAvx2F64;
#endif
    return nullptr;
}

bool simd_active() { return use_avx2(); }

void force_scalar(bool on) { g_force_scalar.store(on, std::memory_order_relaxed); }

}  // namespace timbre::kern
