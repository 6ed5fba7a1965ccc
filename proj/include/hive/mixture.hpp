#pragma once

// Ground-truth-known synthetic scenarios: independent super-Gaussian sources
// with optional slow amplitude modulation (the cross-frequency dependence the
// joint source model feeds on), random decaying FIR mixing systems with
// bounded bin-wise condition numbers, and loading of externally produced
// impulse responses. Observations always equal the sum of per-source images,
// which are kept as the reference for interference measurements.

#include "hive/rng.hpp"
#include "hive/stft.hpp"
#include "hive/wav.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hive {

struct SourceBank {
    std::vector<Eigen::VectorXd> sources; // each sample-normalized to unit power
    std::string kind;
    int block_len = 0; // envelope block length; 0 when no envelope
    std::uint64_t seed = 0;

    int count() const { return static_cast<int>(sources.size()); }
    Eigen::Index length() const { return sources.empty() ? 0 : sources.front().size(); }
};

// kind "laplacian_am": i.i.d. Laplacian carrier times a slowly varying
// log-normal envelope, piecewise-linear in the log domain with block length
// about one analysis frame. kind "laplacian_iid": carrier only (negative
// control without cross-frequency coupling).
inline SourceBank gen_sources(int count, Eigen::Index n, std::uint64_t seed,
                              const std::string& kind, int block_len = 512) {
    if (count < 1) throw std::invalid_argument("gen_sources: count must be >= 1");
    if (n <= 0) throw std::invalid_argument("gen_sources: length must be positive");
    if (kind != "laplacian_am" && kind != "laplacian_iid")
        throw std::invalid_argument("gen_sources: unknown kind: " + kind);
    if (block_len < 1) throw std::invalid_argument("gen_sources: block_len must be >= 1");

    SourceBank bank;
    bank.kind = kind;
    bank.block_len = kind == "laplacian_am" ? block_len : 0;
    bank.seed = seed;
    bank.sources.resize(count);
    for (int j = 0; j < count; ++j) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
        Eigen::VectorXd s(n);
        for (Eigen::Index t = 0; t < n; ++t) s[t] = rng.laplacian();
        if (kind == "laplacian_am") {
            const Eigen::Index blocks = (n + block_len - 1) / block_len + 1;
            Eigen::VectorXd logamp(blocks);
            for (Eigen::Index b = 0; b < blocks; ++b) logamp[b] = rng.gauss();
            for (Eigen::Index t = 0; t < n; ++t) {
                const double pos = static_cast<double>(t) / block_len;
                const Eigen::Index b = static_cast<Eigen::Index>(pos);
                const double frac = pos - static_cast<double>(b);
                s[t] *= std::exp((1.0 - frac) * logamp[b] + frac * logamp[b + 1]);
            }
        }
        s /= std::sqrt(s.squaredNorm() / static_cast<double>(n));
        bank.sources[j] = std::move(s);
    }
    return bank;
}

struct MixingSystem {
    // taps[t](i, j): tap t of the FIR from source j to microphone i
    std::vector<Eigen::MatrixXd> taps;
    double max_condition = 0.0; // worst bin-wise condition number of the kept draw
    int resample_attempts = 0;
    bool condition_ok = true;
    double truncation_tail = 0.0; // tail/total energy removed by load_rir truncation

    int mics() const { return taps.empty() ? 0 : static_cast<int>(taps.front().rows()); }
    int sources() const { return taps.empty() ? 0 : static_cast<int>(taps.front().cols()); }
    int filter_len() const { return static_cast<int>(taps.size()); }
};

// Worst condition number of the transfer matrix over a frequency grid dense
// enough to bracket any DFT the system will be analyzed with.
inline double mixing_condition(const std::vector<Eigen::MatrixXd>& taps) {
    if (taps.empty()) return 0.0;
    const int grid = std::max(4 * static_cast<int>(taps.size()), 64);
    double worst = 0.0;
    for (int m = 0; m < grid / 2 + 1; ++m) {
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(taps.front().rows(), taps.front().cols());
        for (std::size_t t = 0; t < taps.size(); ++t) {
            const double ang = -2.0 * 3.14159265358979323846 * m * static_cast<double>(t) / grid;
            h += taps[t] * cplx(std::cos(ang), std::sin(ang));
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        worst = std::max(worst, smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity());
    }
    return worst;
}

// Random FIR system with exponential decay e^{-t/tau}, tau = T/3, a boosted
// leading (direct-path) tap, and per-source columns normalized to unit total
// energy so the source images arrive at comparable power. Draws whose bin-wise
// condition number exceeds 100 are resampled, up to 100 attempts.
inline MixingSystem gen_mixing(int d, int filter_len, std::uint64_t seed) {
    if (d < 1 || filter_len < 1)
        throw std::invalid_argument("gen_mixing: d and filter_len must be >= 1");
    Rng rng(derive_seed(seed, 0x6d69780aull));
    const double tau = filter_len / 3.0;

    MixingSystem best;
    double best_cond = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<Eigen::MatrixXd> taps(filter_len, Eigen::MatrixXd(d, d));
        for (int t = 0; t < filter_len; ++t) {
            const double scale = t == 0 ? 3.0 : std::exp(-t / tau);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) taps[t](i, j) = scale * rng.gauss();
        }
        for (int j = 0; j < d; ++j) {
            double energy = 0.0;
            for (int t = 0; t < filter_len; ++t) energy += taps[t].col(j).squaredNorm();
            const double norm = std::sqrt(energy);
            for (int t = 0; t < filter_len; ++t) taps[t].col(j) /= norm;
        }
        const double cond = mixing_condition(taps);
        if (cond < best_cond) {
            best_cond = cond;
            best.taps = std::move(taps);
            best.max_condition = cond;
            best.resample_attempts = attempt;
        }
        if (best_cond <= 100.0) break;
    }
    best.condition_ok = best_cond <= 100.0;
    return best;
}

struct MixOutput {
    TimeSignal observation;         // sum of the images, sample-exact
    std::vector<TimeSignal> images; // per-source microphone signals
};

// Causal convolution truncated to the source length, so observations align
// sample-for-sample with the generated sources.
inline MixOutput mix(const SourceBank& bank, const MixingSystem& sys) {
    const int d = sys.mics();
    const int nsrc = sys.sources();
    if (bank.count() != nsrc) throw std::invalid_argument("mix: source count mismatch");
    const Eigen::Index n = bank.length();

    MixOutput out;
    out.observation.samples = Eigen::MatrixXd::Zero(n, d);
    out.images.resize(nsrc);
    for (int j = 0; j < nsrc; ++j) {
        Eigen::MatrixXd img = Eigen::MatrixXd::Zero(n, d);
        for (int t = 0; t < sys.filter_len(); ++t) {
            const Eigen::Index len = n - t;
            if (len <= 0) break;
            for (int i = 0; i < d; ++i)
                img.col(i).tail(len) += sys.taps[t](i, j) * bank.sources[j].head(len);
        }
        out.images[j].samples = img;
        out.observation.samples += img;
    }
    return out;
}

// Mixing-system CSV: header "mic,source,taps...", one FIR per row, full
// double precision; round-trips exactly.
inline void save_mixing(const std::string& path, const MixingSystem& sys) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open mixing file for writing: " + path);
    out << "mic,source,taps\n";
    char buf[64];
    for (int i = 0; i < sys.mics(); ++i) {
        for (int j = 0; j < sys.sources(); ++j) {
            out << i << ',' << j;
            for (int t = 0; t < sys.filter_len(); ++t) {
                std::snprintf(buf, sizeof buf, "%.17g", sys.taps[t](i, j));
                out << ',' << buf;
            }
            out << '\n';
        }
    }
    if (!out) throw std::runtime_error("mixing file write failed: " + path);
}

namespace detail {

// Interpret a flat bank of FIRs as a (mic, source) grid. mic_major: rows
// ordered (mic0 src0), (mic0 src1), ...; src_major: (mic0 src0), (mic1 src0), ...
inline MixingSystem assemble_rir(const std::vector<Eigen::VectorXd>& firs, int d, int n_src,
                                 const std::string& layout, int max_len) {
    if (static_cast<int>(firs.size()) != d * n_src)
        throw std::invalid_argument("load_rir: expected " + std::to_string(d * n_src) +
                                    " impulse responses, found " + std::to_string(firs.size()));
    if (layout != "mic_major" && layout != "src_major")
        throw std::invalid_argument("load_rir: unknown layout: " + layout);
    Eigen::Index full_len = 0;
    for (const auto& f : firs) full_len = std::max(full_len, f.size());
    const Eigen::Index kept = max_len > 0 ? std::min<Eigen::Index>(max_len, full_len) : full_len;

    MixingSystem sys;
    sys.taps.assign(kept, Eigen::MatrixXd::Zero(d, n_src));
    double total = 0.0, tail = 0.0;
    for (int idx = 0; idx < d * n_src; ++idx) {
        const int i = layout == "mic_major" ? idx / n_src : idx % d;
        const int j = layout == "mic_major" ? idx % n_src : idx / d;
        const Eigen::VectorXd& f = firs[idx];
        total += f.squaredNorm();
        for (Eigen::Index t = 0; t < f.size(); ++t) {
            if (t < kept)
                sys.taps[t](i, j) = f[t];
            else
                tail += f[t] * f[t];
        }
    }
    sys.truncation_tail = total > 0.0 ? tail / total : 0.0;
    sys.max_condition = mixing_condition(sys.taps);
    sys.condition_ok = sys.max_condition <= 100.0;
    return sys;
}

} // namespace detail

// Externally produced impulse responses, from a multichannel WAV (one FIR per
// channel) or a CSV (one FIR per row; a leading "mic,source,taps" header and
// the two index columns, as written by save_mixing, are accepted and checked).
// max_len > 0 truncates, with the discarded energy fraction reported.
inline MixingSystem load_rir(const std::string& path, int d, int n_src,
                             const std::string& layout, int max_len = 0) {
    if (d < 1 || n_src < 1) throw std::invalid_argument("load_rir: bad geometry");
    std::vector<Eigen::VectorXd> firs;
    const bool is_wav = path.size() >= 4 && path.substr(path.size() - 4) == ".wav";
    if (is_wav) {
        const TimeSignal sig = read_wav(path);
        for (int c = 0; c < sig.channels(); ++c) firs.push_back(sig.samples.col(c));
    } else {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open impulse-response file: " + path);
        std::string line;
        bool indexed = false;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (firs.empty() && line.rfind("mic,source", 0) == 0) {
                indexed = true;
                continue;
            }
            std::vector<double> vals;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
            std::size_t skip = 0;
            if (indexed) {
                if (vals.size() < 3) throw std::runtime_error("load_rir: malformed row: " + path);
                const int want_i = static_cast<int>(firs.size()) / n_src;
                const int want_j = static_cast<int>(firs.size()) % n_src;
                if (static_cast<int>(vals[0]) != want_i || static_cast<int>(vals[1]) != want_j)
                    throw std::runtime_error("load_rir: index columns out of order: " + path);
                skip = 2;
            }
            Eigen::VectorXd f(vals.size() - skip);
            for (std::size_t t = skip; t < vals.size(); ++t)
                f[static_cast<Eigen::Index>(t - skip)] = vals[t];
            firs.push_back(std::move(f));
        }
        if (indexed && layout != "mic_major")
            throw std::invalid_argument("load_rir: indexed CSV implies mic_major layout");
    }
    return detail::assemble_rir(firs, d, n_src, layout, max_len);
}

} // namespace hive
