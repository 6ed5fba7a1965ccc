#pragma once

// Deterministic framing, windowing and forward/inverse STFT.
// Frames start at multiples of the hop and are zero-padded at the right
// edge, so n_frames = ceil(len / hop) regardless of content. Spectra are
// stored truncated to the fft_len/2 + 1 non-redundant bins of a real
// input; the mirrored half is reconstructed by conjugate symmetry when
// inverting.

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "hive/fft.hpp"

namespace hive {

struct TimeSignal {
    Eigen::MatrixXd samples; // n_samples x n_channels, one channel per column
    int sample_rate = 16000;

    Eigen::Index length() const { return samples.rows(); }
    Eigen::Index channels() const { return samples.cols(); }
};

enum class Window { hann, rect };

inline Window window_from_string(const std::string& s) {
    if (s == "hann") return Window::hann;
    if (s == "rect") return Window::rect;
    throw std::invalid_argument("unknown window: " + s);
}

inline std::string to_string(Window w) {
    return w == Window::hann ? "hann" : "rect";
}

// Periodic form, so that hop = len/4 and len/2 satisfy overlap-add exactly.
inline Eigen::VectorXd make_window(Window kind, int len) {
    Eigen::VectorXd w(len);
    switch (kind) {
    case Window::rect:
        w.setOnes();
        break;
    case Window::hann:
        for (int n = 0; n < len; ++n)
            w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / len);
        break;
    }
    return w;
}

struct SpectralTensor {
    // bins[k] is d x n_frames: column n holds the channel vector x^k(n)
    std::vector<Eigen::MatrixXcd> bins;
    int fft_len = 0;
    int hop = 0;
    Window window = Window::hann;
    int sample_rate = 16000;

    int n_bins() const { return static_cast<int>(bins.size()); }
    Eigen::Index channels() const { return bins.empty() ? 0 : bins[0].rows(); }
    Eigen::Index frames() const { return bins.empty() ? 0 : bins[0].cols(); }
};

namespace detail {

// Periodic sum of squared window values at offsets of the hop. Reconstruction
// divides by this; a window/hop pair is usable only if the sum stays bounded
// away from zero everywhere.
inline Eigen::VectorXd overlap_weight_period(const Eigen::VectorXd& win, int hop) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(hop);
    for (int start = 0; start < win.size(); start += hop)
        for (int t = 0; t < hop && start + t < win.size(); ++t)
            d[t] += win[start + t] * win[start + t];
    return d;
}

inline void check_cola(const Eigen::VectorXd& win, int hop) {
    const Eigen::VectorXd d = overlap_weight_period(win, hop);
    if (d.minCoeff() < 1e-6 * d.maxCoeff() || d.maxCoeff() <= 0.0)
        throw std::invalid_argument("window/hop pair does not satisfy overlap-add");
}

} // namespace detail

inline SpectralTensor stft(const TimeSignal& sig, int fft_len, int hop, Window window) {
    if (sig.length() == 0 || sig.channels() == 0)
        throw std::invalid_argument("stft: empty signal");
    if (fft_len % 4 != 0)
        throw std::invalid_argument("stft: fft_len must be divisible by 4");
    if (hop <= 0 || hop > fft_len)
        throw std::invalid_argument("stft: hop must satisfy 0 < hop <= fft_len");

    const Eigen::VectorXd win = make_window(window, fft_len);
    const int n_bins = fft_len / 2 + 1;
    const auto d = sig.channels();
    const auto len = sig.length();
    const Eigen::Index n_frames = (len + hop - 1) / hop;

    SpectralTensor out;
    out.fft_len = fft_len;
    out.hop = hop;
    out.window = window;
    out.sample_rate = sig.sample_rate;
    out.bins.assign(n_bins, Eigen::MatrixXcd::Zero(d, n_frames));

    std::vector<cplx> frame(fft_len);
    for (Eigen::Index ch = 0; ch < d; ++ch) {
        for (Eigen::Index f = 0; f < n_frames; ++f) {
            const Eigen::Index start = f * hop;
            for (int t = 0; t < fft_len; ++t) {
                const Eigen::Index idx = start + t;
                const double v = idx < len ? sig.samples(idx, ch) : 0.0;
                frame[t] = cplx(v * win[t], 0.0);
            }
            const std::vector<cplx> spec = dft_forward(frame);
            for (int k = 0; k < n_bins; ++k) out.bins[k](ch, f) = spec[k];
        }
    }
    return out;
}

// Weighted overlap-add inverse. Interior samples of an unmodified spectrum
// reproduce the original signal; edges where the window sum is tiny are
// left untouched by the division floor.
inline TimeSignal istft(const SpectralTensor& spec) {
    if (spec.bins.empty()) throw std::invalid_argument("istft: empty spectrum");
    const int K = spec.fft_len;
    const int hop = spec.hop;
    const Eigen::VectorXd win = make_window(spec.window, K);
    detail::check_cola(win, hop);

    const auto d = spec.channels();
    const auto n_frames = spec.frames();
    const Eigen::Index len = n_frames * hop;

    TimeSignal out;
    out.sample_rate = spec.sample_rate;
    out.samples = Eigen::MatrixXd::Zero(len, d);
    Eigen::VectorXd weight = Eigen::VectorXd::Zero(len);

    std::vector<cplx> full(K);
    for (Eigen::Index ch = 0; ch < d; ++ch) {
        for (Eigen::Index f = 0; f < n_frames; ++f) {
            full[0] = spec.bins[0](ch, f);
            full[K / 2] = spec.bins[K / 2](ch, f);
            for (int k = 1; k < K / 2; ++k) {
                full[k] = spec.bins[k](ch, f);
                full[K - k] = std::conj(full[k]);
            }
            const std::vector<cplx> frame = dft_inverse(full);
            const Eigen::Index start = f * hop;
            for (int t = 0; t < K; ++t) {
                const Eigen::Index idx = start + t;
                if (idx >= len) break;
                out.samples(idx, ch) += frame[t].real() * win[t];
                if (ch == 0) weight[idx] += win[t] * win[t];
            }
        }
    }
    const double floor = 1e-12 * weight.maxCoeff();
    for (Eigen::Index t = 0; t < len; ++t) {
        const double wsum = weight[t] > floor ? weight[t] : 1.0;
        out.samples.row(t) /= wsum;
    }
    return out;
}

// Wraps a (n_bins x n_frames) coefficient matrix as a one-channel tensor,
// e.g. to listen to an extracted source.
inline SpectralTensor spectral_from_rows(const Eigen::MatrixXcd& rows, const SpectralTensor& like) {
    SpectralTensor out;
    out.fft_len = like.fft_len;
    out.hop = like.hop;
    out.window = like.window;
    out.sample_rate = like.sample_rate;
    out.bins.assign(rows.rows(), Eigen::MatrixXcd(1, rows.cols()));
    for (Eigen::Index k = 0; k < rows.rows(); ++k) out.bins[k].row(0) = rows.row(k);
    return out;
}

// Debug dump of one channel: one row per frame, Re/Im interleaved per bin.
inline void spectral_dump_csv(const SpectralTensor& spec, Eigen::Index channel,
                              const std::string& path) {
    if (channel < 0 || channel >= spec.channels())
        throw std::invalid_argument("spectral_dump_csv: channel out of range");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("spectral_dump_csv: cannot open " + path);
    out.precision(17);
    for (Eigen::Index f = 0; f < spec.frames(); ++f) {
        for (int k = 0; k < spec.n_bins(); ++k) {
            const cplx v = spec.bins[k](channel, f);
            out << (k ? "," : "") << v.real() << "," << v.imag();
        }
        out << "\n";
    }
}

} // namespace hive
