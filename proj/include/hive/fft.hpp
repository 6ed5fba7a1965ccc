#pragma once

// Raw DFT utilities. Convention: forward transform is
//   X(k) = sum_n x(n) * exp(-i*2*pi*k*n/N),  no 1/N factor.
// Power-of-two lengths go through an iterative radix-2 kernel;
// everything else falls back to direct summation (fine at the
// signal sizes this library targets).

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hive {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {

// In-place radix-2, decimation in time. sign = -1 forward, +1 inverse (unscaled).
inline void fft_radix2(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                cplx u = a[i + j];
                cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

inline std::vector<cplx> dft_direct(const std::vector<cplx>& x, int sign) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc(0.0, 0.0);
        for (std::size_t m = 0; m < n; ++m) {
            const double ang = sign * 2.0 * std::numbers::pi *
                               static_cast<double>(k) * static_cast<double>(m) /
                               static_cast<double>(n);
            acc += x[m] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

} // namespace detail

inline std::vector<cplx> dft_forward(std::vector<cplx> seq) {
    if (seq.empty()) throw std::invalid_argument("dft_forward: empty sequence");
    if (is_pow2(seq.size())) {
        detail::fft_radix2(seq, -1);
        return seq;
    }
    return detail::dft_direct(seq, -1);
}

// Unitary pair with dft_forward: applies the +i kernel and divides by N.
inline std::vector<cplx> dft_inverse(std::vector<cplx> seq) {
    if (seq.empty()) throw std::invalid_argument("dft_inverse: empty sequence");
    const double n = static_cast<double>(seq.size());
    if (is_pow2(seq.size())) {
        detail::fft_radix2(seq, +1);
    } else {
        seq = detail::dft_direct(seq, +1);
    }
    for (auto& v : seq) v /= n;
    return seq;
}

} // namespace hive
