#pragma once

#include <cstddef>
#include <span>

// Dense-layer kernels.
//
// Matrices are row-major. A layer with `in` inputs and `out` outputs stores
// its weight as [in x out] so that the forward pass is a sequence of axpy
// updates over contiguous output rows. Activations are [batch x width].
//
// `serial` is the reference implementation; `omp` partitions the same loops
// across threads. Both accumulate every output element in the same order, so
// the forward and parameter-gradient kernels agree bitwise. The input-gradient
// kernel of `omp` uses a blocked dot product and agrees to rounding.

namespace slr::kernels {

enum class Backend { Serial, OpenMP };

struct DenseShape {
    std::size_t batch = 0;
    std::size_t in = 0;
    std::size_t out = 0;
};

namespace serial {

/// y = x * w + bias
template <typename T>
void dense_forward(DenseShape s, std::span<const T> x, std::span<const T> w, std::span<const T> bias, std::span<T> y);

/// dw += x^T * dy, db += column sums of dy
template <typename T>
void dense_backward_params(DenseShape s, std::span<const T> x, std::span<const T> dy, std::span<T> dw,
                           std::span<T> db);

/// dx = dy * w^T
template <typename T>
void dense_backward_input(DenseShape s, std::span<const T> dy, std::span<const T> w, std::span<T> dx);

}  // namespace serial

namespace omp {

template <typename T>
void dense_forward(DenseShape s, std::span<const T> x, std::span<const T> w, std::span<const T> bias, std::span<T> y);

template <typename T>
void dense_backward_params(DenseShape s, std::span<const T> x, std::span<const T> dy, std::span<T> dw,
                           std::span<T> db);

template <typename T>
void dense_backward_input(DenseShape s, std::span<const T> dy, std::span<const T> w, std::span<T> dx);

}  // namespace omp

template <typename T>
void dense_forward(Backend b, DenseShape s, std::span<const T> x, std::span<const T> w, std::span<const T> bias,
                   std::span<T> y) {
    if (b == Backend::OpenMP) {
        omp::dense_forward(s, x, w, bias, y);
    } else {
        serial::dense_forward(s, x, w, bias, y);
    }
}

template <typename T>
void dense_backward_params(Backend b, DenseShape s, std::span<const T> x, std::span<const T> dy, std::span<T> dw,
                           std::span<T> db) {
    if (b == Backend::OpenMP) {
        omp::dense_backward_params(s, x, dy, dw, db);
    } else {
        serial::dense_backward_params(s, x, dy, dw, db);
    }
}

template <typename T>
void dense_backward_input(Backend b, DenseShape s, std::span<const T> dy, std::span<const T> w, std::span<T> dx) {
    if (b == Backend::OpenMP) {
        omp::dense_backward_input(s, dy, w, dx);
    } else {
        serial::dense_backward_input(s, dy, w, dx);
    }
}

/// Number of OpenMP threads the `omp` kernels will use.
int max_threads();
void set_threads(int n);

}  // namespace slr::kernels
