#include <stdexcept>

#include "slr/kernels.hpp"

namespace slr::kernels::serial {

namespace {

void check(bool ok) {
    if (!ok) throw std::invalid_argument("dense kernel: buffer size does not match shape");
}

}  // namespace

template <typename T>
void dense_forward(DenseShape s, std::span<const T> x, std::span<const T> w, std::span<const T> bias, std::span<T> y) {
    check(x.size() == s.batch * s.in && w.size() == s.in * s.out && bias.size() == s.out &&
          y.size() == s.batch * s.out);
    for (std::size_t b = 0; b < s.batch; ++b) {
        T* yr = y.data() + b * s.out;
        const T* xr = x.data() + b * s.in;
        for (std::size_t o = 0; o < s.out; ++o) yr[o] = bias[o];
        for (std::size_t i = 0; i < s.in; ++i) {
            const T xi = xr[i];
            const T* wr = w.data() + i * s.out;
            for (std::size_t o = 0; o < s.out; ++o) yr[o] += xi * wr[o];
        }
    }
}

template <typename T>
void dense_backward_params(DenseShape s, std::span<const T> x, std::span<const T> dy, std::span<T> dw,
                           std::span<T> db) {
    check(x.size() == s.batch * s.in && dy.size() == s.batch * s.out && dw.size() == s.in * s.out &&
          db.size() == s.out);
    for (std::size_t i = 0; i < s.in; ++i) {
        T* dwr = dw.data() + i * s.out;
        for (std::size_t b = 0; b < s.batch; ++b) {
            const T xi = x[b * s.in + i];
            const T* dyr = dy.data() + b * s.out;
            for (std::size_t o = 0; o < s.out; ++o) dwr[o] += xi * dyr[o];
        }
    }
    for (std::size_t b = 0; b < s.batch; ++b) {
        const T* dyr = dy.data() + b * s.out;
        for (std::size_t o = 0; o < s.out; ++o) db[o] += dyr[o];
    }
}

template <typename T>
void dense_backward_input(DenseShape s, std::span<const T> dy, std::span<const T> w, std::span<T> dx) {
    check(dy.size() == s.batch * s.out && w.size() == s.in * s.out && dx.size() == s.batch * s.in);
    for (std::size_t b = 0; b < s.batch; ++b) {
        const T* dyr = dy.data() + b * s.out;
        for (std::size_t i = 0; i < s.in; ++i) {
            const T* wr = w.data() + i * s.out;
            T acc = 0;
            for (std::size_t o = 0; o < s.out; ++o) acc += dyr[o] * wr[o];
            dx[b * s.in + i] = acc;
        }
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

}  // namespace slr::kernels::serial
