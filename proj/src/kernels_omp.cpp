#include <omp.h>

#include <algorithm>
#include <stdexcept>

#include "slr/kernels.hpp"

namespace slr::kernels {

int max_threads() { return omp_get_max_threads(); }
void set_threads(int n) { omp_set_num_threads(std::max(1, n)); }

namespace omp {

namespace {

constexpr std::size_t kTile = 64;
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

void check(bool ok) {
    if (!ok) throw std::invalid_argument("dense kernel: buffer size does not match shape");
}

template <typename T>
T blocked_dot(const T* a, const T* b, std::size_t n) {
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    for (; k < n; ++k) s0 += a[k] * b[k];
    return (s0 + s1) + (s2 + s3);
}

}  // namespace

template <typename T>
void dense_forward(DenseShape s, std::span<const T> x, std::span<const T> w, std::span<const T> bias, std::span<T> y) {
    check(x.size() == s.batch * s.in && w.size() == s.in * s.out && bias.size() == s.out &&
          y.size() == s.batch * s.out);
    const std::size_t tiles = (s.out + kTile - 1) / kTile;
    const auto jobs = static_cast<std::ptrdiff_t>(s.batch * tiles);
    const bool parallel = s.batch * s.in * s.out >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t job = 0; job < jobs; ++job) {
        const std::size_t b = static_cast<std::size_t>(job) / tiles;
        const std::size_t o0 = (static_cast<std::size_t>(job) % tiles) * kTile;
        const std::size_t o1 = std::min(s.out, o0 + kTile);
        T* yr = y.data() + b * s.out;
        const T* xr = x.data() + b * s.in;
        for (std::size_t o = o0; o < o1; ++o) yr[o] = bias[o];
        for (std::size_t i = 0; i < s.in; ++i) {
            const T xi = xr[i];
            const T* wr = w.data() + i * s.out;
            for (std::size_t o = o0; o < o1; ++o) yr[o] += xi * wr[o];
        }
    }
}

template <typename T>
void dense_backward_params(DenseShape s, std::span<const T> x, std::span<const T> dy, std::span<T> dw,
                           std::span<T> db) {
    check(x.size() == s.batch * s.in && dy.size() == s.batch * s.out && dw.size() == s.in * s.out &&
          db.size() == s.out);
    const bool parallel = s.batch * s.in * s.out >= kParallelWork;
    const auto rows = static_cast<std::ptrdiff_t>(s.in);
#pragma omp parallel if (parallel)
    {
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            T* dwr = dw.data() + i * s.out;
            for (std::size_t b = 0; b < s.batch; ++b) {
                const T xi = x[b * s.in + i];
                const T* dyr = dy.data() + b * s.out;
                for (std::size_t o = 0; o < s.out; ++o) dwr[o] += xi * dyr[o];
            }
        }
#pragma omp single
        for (std::size_t b = 0; b < s.batch; ++b) {
            const T* dyr = dy.data() + b * s.out;
            for (std::size_t o = 0; o < s.out; ++o) db[o] += dyr[o];
        }
    }
}

template <typename T>
void dense_backward_input(DenseShape s, std::span<const T> dy, std::span<const T> w, std::span<T> dx) {
    check(dy.size() == s.batch * s.out && w.size() == s.in * s.out && dx.size() == s.batch * s.in);
    const bool parallel = s.batch * s.in * s.out >= kParallelWork;
    const auto jobs = static_cast<std::ptrdiff_t>(s.batch * s.in);
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t job = 0; job < jobs; ++job) {
        const std::size_t b = static_cast<std::size_t>(job) / s.in;
        const std::size_t i = static_cast<std::size_t>(job) % s.in;
        dx[b * s.in + i] = blocked_dot(dy.data() + b * s.out, w.data() + i * s.out, s.out);
    }
}

template void dense_forward<float>(DenseShape, std::span<const float>, std::span<const float>,
                                   std::span<const float>, std::span<float>);
template void dense_forward<double>(DenseShape, std::span<const double>, std::span<const double>,
                                    std::span<const double>, std::span<double>);
template void dense_backward_params<float>(DenseShape, std::span<const float>, std::span<const float>,
                                           std::span<float>, std::span<float>);
template void dense_backward_params<double>(DenseShape, std::span<const double>, std::span<const double>,
                                            std::span<double>, std::span<double>);
template void dense_backward_input<float>(DenseShape, std::span<const float>, std::span<const float>,
                                          std::span<float>);
template void dense_backward_input<double>(DenseShape, std::span<const double>, std::span<const double>,
                                           std::span<double>);

}  // namespace omp
}  // namespace slr::kernels
