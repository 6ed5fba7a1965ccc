#pragma once

// Independent vector extraction of a single source from K/2+1 parallel
// frequency bins. The source model is the spherically contoured Laplacian
// f(s_bar) ~ exp(-||s_bar||_2); the mixing vector is tied to the separating
// vector through the orthogonal constraint a = C w / sigma^2, which keeps the
// extracted source and the background decorrelated at every step. Gradient
// ascent runs either per bin on W (the classic scheme, optionally in whitened
// coordinates) or on the half-length filter parameters V (the manifold
// variant), where the per-bin gradients are pulled back through the linear
// bin-coupling map before the additive step.

#include "hive/manifold.hpp"
#include "hive/stft.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hive {

struct ObservationSet {
    SpectralTensor spec;                    // x^k, one d x N block per bin
    std::vector<Eigen::MatrixXcd> cov;      // per-bin Hermitian C^k
    std::vector<Eigen::MatrixXcd> whitener; // T^k with x_white = T x, empty when raw
    std::vector<Eigen::MatrixXcd> unwhiten; // (T^k)^{-1}
    int ill_conditioned = 0;                // bins whose eigenvalues hit the floor

    bool whitened() const { return !whitener.empty(); }
};

// Per-bin sample covariance C = E[x x^H] + lambda I with the relative ridge
// lambda = ridge_rel * tr(E[x x^H]) / d. Hermitian by construction.
inline std::vector<Eigen::MatrixXcd> sample_covariance(const SpectralTensor& spec,
                                                       double ridge_rel = 0.0) {
    const int d = spec.channels();
    const Eigen::Index n = spec.frames();
    if (n < d)
        throw std::invalid_argument("sample_covariance: fewer frames than channels");
    std::vector<Eigen::MatrixXcd> cov(spec.bins.size());
    for (std::size_t k = 0; k < spec.bins.size(); ++k) {
        const Eigen::MatrixXcd& x = spec.bins[k];
        Eigen::MatrixXcd c = (x * x.adjoint()) / static_cast<double>(n);
        c = 0.5 * (c + c.adjoint()).eval();
        if (ridge_rel > 0.0) {
            const double lambda = ridge_rel * c.real().trace() / d;
            c += lambda * Eigen::MatrixXcd::Identity(d, d);
        }
        cov[k] = std::move(c);
    }
    return cov;
}

inline ObservationSet make_observations(const SpectralTensor& spec, double ridge_rel = 0.0) {
    ObservationSet obs;
    obs.spec = spec;
    obs.cov = sample_covariance(spec, ridge_rel);
    return obs;
}

// Per-bin whitening x <- C^{-1/2} x via the Hermitian eigendecomposition of
// the unridged sample covariance. Eigenvalues below 1e-12 * trace are floored
// and the bin counted as ill-conditioned. The stored transforms map whitened
// separating vectors back: w_orig = T w_white (T is Hermitian).
inline ObservationSet whiten(const ObservationSet& obs, double ridge_rel = 0.0) {
    const int d = obs.spec.channels();
    ObservationSet out;
    out.spec = obs.spec;
    out.whitener.resize(obs.spec.bins.size());
    out.unwhiten.resize(obs.spec.bins.size());
    const auto raw_cov = sample_covariance(obs.spec, 0.0);
    for (std::size_t k = 0; k < raw_cov.size(); ++k) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(raw_cov[k]);
        if (eig.info() != Eigen::Success)
            throw std::runtime_error("whiten: eigendecomposition failed");
        Eigen::VectorXd lam = eig.eigenvalues();
        const double floor = std::max(1e-12 * lam.sum(), 1e-300);
        bool floored = false;
        for (int i = 0; i < d; ++i) {
            if (lam[i] < floor) {
                lam[i] = floor;
                floored = true;
            }
        }
        if (floored) ++out.ill_conditioned;
        const Eigen::MatrixXcd& u = eig.eigenvectors();
        out.whitener[k] = u * lam.cwiseSqrt().cwiseInverse().asDiagonal() * u.adjoint();
        out.unwhiten[k] = u * lam.cwiseSqrt().asDiagonal() * u.adjoint();
        out.spec.bins[k] = out.whitener[k] * obs.spec.bins[k];
    }
    out.cov = sample_covariance(out.spec, ridge_rel);
    return out;
}

struct SourceEstimate {
    Eigen::MatrixXcd s;      // (K/2+1) x N, row k = w^k applied to bin k
    Eigen::VectorXd sigma2;  // per-row sample variance, floored
    Eigen::MatrixXcd s_norm; // rows of s scaled to unit sample variance
};

// s^k(n) = (w^k)^H x^k(n) with w^k = column k of Wt.
inline SourceEstimate extract_source(const Eigen::MatrixXcd& Wt, const SpectralTensor& spec,
                                     double variance_floor = 1e-12) {
    const int bins = spec.n_bins();
    const Eigen::Index n = spec.frames();
    if (Wt.rows() != spec.channels() || Wt.cols() != bins)
        throw std::invalid_argument("extract_source: separator shape mismatch");
    SourceEstimate est;
    est.s.resize(bins, n);
    est.sigma2.resize(bins);
    est.s_norm.resize(bins, n);
    for (int k = 0; k < bins; ++k) {
        est.s.row(k) = Wt.col(k).adjoint() * spec.bins[k];
        const double var = est.s.row(k).squaredNorm() / static_cast<double>(n);
        est.sigma2[k] = std::max(var, variance_floor);
        est.s_norm.row(k) = est.s.row(k) / std::sqrt(est.sigma2[k]);
    }
    return est;
}

struct ScoreBlock {
    Eigen::MatrixXcd phi; // (K/2+1) x N score values
    Eigen::VectorXd nu;   // per-bin normalization E[phi_k conj(s_bar^k)]
};

// Spherical-Laplacian score phi_k(n) = s_bar^k(n) / max(||s_bar(n)||_2, eps).
// With this model nu_k = E[|s_bar^k|^2 / ||s_bar||] is real and nonnegative;
// the conjugation lives on phi inside the gradient average (see bin_gradient).
inline ScoreBlock score_spherical(const Eigen::MatrixXcd& s_norm, double eps = 1e-12) {
    ScoreBlock sc;
    const Eigen::Index bins = s_norm.rows(), n = s_norm.cols();
    sc.phi.resize(bins, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double r = std::max(s_norm.col(j).norm(), eps);
        sc.phi.col(j) = s_norm.col(j) / r;
    }
    sc.nu = (sc.phi.cwiseProduct(s_norm.conjugate())).real().rowwise().mean();
    return sc;
}

// Orthogonal constraint: a = C w / sigma2. When sigma2 = w^H C w exactly,
// a^H w = 1 and the background output is sample-decorrelated from s.
inline Eigen::VectorXcd orthogonal_mixing(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& c,
                                          double sigma2) {
    return (c * w) / sigma2;
}

// Background separator B = [g, -gamma I] assembled from a = [gamma; g];
// B a = 0, so z = B x carries no target component at the constraint point.
inline Eigen::MatrixXcd background_extract(const Eigen::VectorXcd& a, const Eigen::MatrixXcd& x) {
    const Eigen::Index d = a.size();
    return a.tail(d - 1) * x.row(0) - a[0] * x.bottomRows(d - 1);
}

struct BinGradient {
    Eigen::VectorXcd grad;
    bool degenerate = false; // |nu| under the floor; gradient zeroed
};

// One bin of the contrast gradient: grad = a - E[conj(phi_k) xbar^k] / nu_k
// with xbar = x / sigma_k. The conjugation on phi is the convention under
// which the gradient vanishes (to Monte-Carlo error) at separating solutions;
// with it, the d=1 case gives E[conj(phi) s_bar] = nu and grad = 0 exactly.
inline BinGradient bin_gradient(const Eigen::VectorXcd& a, const Eigen::RowVectorXcd& phi,
                                const Eigen::MatrixXcd& xbar, double nu, double eps = 1e-12) {
    BinGradient g;
    if (std::abs(nu) < eps) {
        g.grad = Eigen::VectorXcd::Zero(a.size());
        g.degenerate = true;
        return g;
    }
    const double n = static_cast<double>(phi.size());
    g.grad = a - (xbar * phi.adjoint()) / (nu * n);
    return g;
}

struct ContrastReport {
    double value = 0.0;
    int excluded_bins = 0; // bins skipped for |gamma| < eps or singular C_z
};

// Monitoring objective: E[log f(s_bar)] - sum_k log sigma_k^2
//   - sum_k E[z^H C_z^{-1} z] + (d-2) sum_k log|gamma_k|^2, additive constant
// dropped. With the sample C_z the middle term is d-1 per bin by the trace
// identity; it is still evaluated numerically so the report reflects the data.
inline ContrastReport contrast_value(const Eigen::MatrixXcd& Wt, const ObservationSet& obs,
                                     double variance_floor = 1e-12) {
    const int d = obs.spec.channels();
    const int bins = obs.spec.n_bins();
    const Eigen::Index n = obs.spec.frames();
    const SourceEstimate est = extract_source(Wt, obs.spec, variance_floor);

    ContrastReport rep;
    double model = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) model -= est.s_norm.col(j).norm();
    rep.value = model / static_cast<double>(n);

    for (int k = 0; k < bins; ++k) {
        rep.value -= std::log(est.sigma2[k]);
        if (d == 1) continue;
        const Eigen::VectorXcd w = Wt.col(k);
        const double sig2 = std::max(
            (w.adjoint() * obs.cov[k] * w).real()(0, 0), variance_floor);
        const Eigen::VectorXcd a = orthogonal_mixing(w, obs.cov[k], sig2);
        if (std::abs(a[0]) < variance_floor) {
            ++rep.excluded_bins;
            continue;
        }
        const Eigen::MatrixXcd z = background_extract(a, obs.spec.bins[k]);
        const Eigen::MatrixXcd cz = (z * z.adjoint()) / static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cz);
        if (eig.info() != Eigen::Success ||
            eig.eigenvalues().minCoeff() < 1e-12 * std::max(cz.real().trace(), 1e-300)) {
            ++rep.excluded_bins;
            continue;
        }
        const Eigen::MatrixXcd solved = eig.eigenvectors() *
            eig.eigenvalues().cwiseInverse().asDiagonal() *
            eig.eigenvectors().adjoint() * z;
        rep.value -= z.cwiseProduct(solved.conjugate()).real().sum() / static_cast<double>(n);
        rep.value += (d - 2) * std::log(std::norm(a[0]));
    }
    return rep;
}

namespace detail {

// Shared per-iteration pipeline: extract, score, per-bin mixing vectors and
// gradients. omega column k is the bin-k gradient.
struct Pipeline {
    SourceEstimate est;
    ScoreBlock score;
    Eigen::MatrixXcd omega;
    int degenerate_bins = 0;
};

inline Pipeline run_pipeline(const Eigen::MatrixXcd& Wt, const ObservationSet& obs,
                             double variance_floor) {
    Pipeline p;
    p.est = extract_source(Wt, obs.spec, variance_floor);
    p.score = score_spherical(p.est.s_norm, variance_floor);
    const int bins = obs.spec.n_bins();
    p.omega.resize(Wt.rows(), bins);
    for (int k = 0; k < bins; ++k) {
        const Eigen::VectorXcd w = Wt.col(k);
        const double sig2 = std::max(
            (w.adjoint() * obs.cov[k] * w).real()(0, 0), variance_floor);
        const Eigen::VectorXcd a = orthogonal_mixing(w, obs.cov[k], sig2);
        const Eigen::MatrixXcd xbar = obs.spec.bins[k] / std::sqrt(p.est.sigma2[k]);
        const BinGradient bg =
            bin_gradient(a, p.score.phi.row(k), xbar, p.score.nu[k], variance_floor);
        if (bg.degenerate) ++p.degenerate_bins;
        p.omega.col(k) = bg.grad;
    }
    if (!p.omega.allFinite())
        throw std::runtime_error("gradient stack contains non-finite entries");
    return p;
}

} // namespace detail

// One classic gradient pass: w^k <- w^k + mu grad^k per bin, then rescale
// every w^k to unit output variance (no cross-bin structure is enforced, so
// the per-bin scale is free).
inline Eigen::MatrixXcd ogive_iteration(const Eigen::MatrixXcd& Wt, const ObservationSet& obs,
                                        double mu, double variance_floor = 1e-12,
                                        int* degenerate_bins = nullptr) {
    if (mu < 0.0) throw std::invalid_argument("ogive_iteration: mu must be >= 0");
    const detail::Pipeline p = detail::run_pipeline(Wt, obs, variance_floor);
    if (degenerate_bins) *degenerate_bins = p.degenerate_bins;
    Eigen::MatrixXcd next = Wt + mu * p.omega;
    const Eigen::Index n = obs.spec.frames();
    for (int k = 0; k < obs.spec.n_bins(); ++k) {
        const double var =
            (next.col(k).adjoint() * obs.spec.bins[k]).squaredNorm() / static_cast<double>(n);
        next.col(k) /= std::sqrt(std::max(var, variance_floor));
    }
    return next;
}

// One manifold-constrained pass: gradients are formed at W = expand(V),
// pulled back to the parameter space, applied additively, then V is returned
// to the manifold chart: purely real first and last columns, unit-norm
// columns (the scale freedom lives in the column norms).
inline Eigen::MatrixXcd hive_iteration(const Eigen::MatrixXcd& Vt, const ObservationSet& obs,
                                       const ManifoldMapping& map, double mu,
                                       double variance_floor = 1e-12,
                                       int* degenerate_bins = nullptr) {
    if (mu < 0.0) throw std::invalid_argument("hive_iteration: mu must be >= 0");
    const Eigen::MatrixXcd Wt = expand(Vt, map);
    const detail::Pipeline p = detail::run_pipeline(Wt, obs, variance_floor);
    if (degenerate_bins) *degenerate_bins = p.degenerate_bins;
    Eigen::MatrixXcd next = Vt + mu * pullback_gradient(p.omega, map);
    next.col(0) = next.col(0).real().cast<cplx>();
    next.col(next.cols() - 1) = next.col(next.cols() - 1).real().cast<cplx>();
    for (Eigen::Index l = 0; l < next.cols(); ++l) {
        const double nrm = next.col(l).norm();
        if (nrm > 0.0) next.col(l) /= nrm;
    }
    return next;
}

enum class Algorithm { ogive, ogive_whitened, hive };

inline Algorithm algorithm_from_string(const std::string& name) {
    if (name == "ogive") return Algorithm::ogive;
    if (name == "ogive_whitened") return Algorithm::ogive_whitened;
    if (name == "hive") return Algorithm::hive;
    throw std::invalid_argument("unknown algorithm: " + name);
}

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::ogive: return "ogive";
        case Algorithm::ogive_whitened: return "ogive_whitened";
        default: return "hive";
    }
}

struct RunConfig {
    Algorithm algorithm = Algorithm::hive;
    double mu = 0.05;
    int max_iter = 100;
    double variance_floor = 1e-12;
    double ridge_rel = 1e-6;
    std::uint64_t seed = 0;  // recorded for reproducibility; the updates are deterministic
    int sir_stride = 1;      // evaluate the SIR callback every this many iterations
    int contrast_stride = 1; // evaluate the contrast every this many iterations
    bool timing = false;     // fill wallclock_ms (off keeps traces byte-identical)
};

struct TraceRow {
    int iter = 0;
    double contrast = std::numeric_limits<double>::quiet_NaN();
    double sir_db = std::numeric_limits<double>::quiet_NaN();
    double grad_norm = 0.0;
    double wallclock_ms = 0.0;
};

struct RunResult {
    std::vector<TraceRow> trace;
    Eigen::MatrixXcd Wt; // final separator in the original (unwhitened) coordinates
    Eigen::MatrixXcd Vt; // manifold parameters; empty for the classic algorithms
    int degenerate_bins = 0;
    int ill_conditioned_bins = 0;
};

// Full batch run. Row i of the trace describes the state after i updates:
// contrast and gradient norm are evaluated there, and the update that row's
// gradient induces produces row i+1's state. sir_fn, when provided, receives
// the separator mapped to original coordinates; rows where a stride skips a
// metric carry NaN.
inline RunResult run(const SpectralTensor& spec, const RunConfig& cfg,
                     const std::function<double(const Eigen::MatrixXcd&)>& sir_fn = {}) {
    if (cfg.mu <= 0.0) throw std::invalid_argument("run: mu must be positive");
    if (cfg.max_iter < 0) throw std::invalid_argument("run: max_iter must be >= 0");
    if (cfg.sir_stride < 1 || cfg.contrast_stride < 1)
        throw std::invalid_argument("run: strides must be >= 1");

    const int d = spec.channels();
    const int bins = spec.n_bins();
    ObservationSet obs = make_observations(spec, cfg.ridge_rel);
    RunResult res;

    ManifoldMapping map;
    Eigen::MatrixXcd Vt;
    Eigen::MatrixXcd Wt;
    if (cfg.algorithm == Algorithm::hive) {
        map = build_mapping(spec.fft_len);
        Vt = Eigen::MatrixXcd::Zero(d, map.n_params());
        Vt.row(0).setOnes(); // v^l = e1: listen to the first microphone
    } else {
        Wt = Eigen::MatrixXcd::Zero(d, bins);
        Wt.row(0).setOnes();
        if (cfg.algorithm == Algorithm::ogive_whitened) {
            obs = whiten(obs, cfg.ridge_rel);
            res.ill_conditioned_bins = obs.ill_conditioned;
            // start at T^{-1} e1 so the initial separator in original
            // coordinates is e1, the same as the unwhitened algorithms
            for (int k = 0; k < bins; ++k) Wt.col(k) = obs.unwhiten[k].col(0);
        }
    }

    auto to_original = [&](const Eigen::MatrixXcd& w) {
        if (!obs.whitened()) return w;
        Eigen::MatrixXcd orig(w.rows(), w.cols());
        for (int k = 0; k < bins; ++k) orig.col(k) = obs.whitener[k] * w.col(k);
        return orig;
    };

    const auto t0 = std::chrono::steady_clock::now();
    res.trace.reserve(cfg.max_iter + 1);
    for (int it = 0; it <= cfg.max_iter; ++it) {
        try {
            const Eigen::MatrixXcd cur =
                cfg.algorithm == Algorithm::hive ? expand(Vt, map) : Wt;
            const detail::Pipeline p = detail::run_pipeline(cur, obs, cfg.variance_floor);
            res.degenerate_bins = std::max(res.degenerate_bins, p.degenerate_bins);

            Eigen::MatrixXcd pb;
            if (cfg.algorithm == Algorithm::hive) pb = pullback_gradient(p.omega, map);

            TraceRow row;
            row.iter = it;
            row.grad_norm = cfg.algorithm == Algorithm::hive ? pb.norm() : p.omega.norm();
            if (it % cfg.contrast_stride == 0 || it == cfg.max_iter)
                row.contrast = contrast_value(cur, obs, cfg.variance_floor).value;
            if (sir_fn && (it % cfg.sir_stride == 0 || it == cfg.max_iter))
                row.sir_db = sir_fn(to_original(cur));
            if (cfg.timing)
                row.wallclock_ms = std::chrono::duration<double, std::milli>(
                                       std::chrono::steady_clock::now() - t0)
                                       .count();
            res.trace.push_back(row);

            if (it == cfg.max_iter) break;
            if (cfg.algorithm == Algorithm::hive) {
                Eigen::MatrixXcd next = Vt + cfg.mu * pb;
                next.col(0) = next.col(0).real().cast<cplx>();
                next.col(next.cols() - 1) = next.col(next.cols() - 1).real().cast<cplx>();
                for (Eigen::Index l = 0; l < next.cols(); ++l) {
                    const double nrm = next.col(l).norm();
                    if (nrm > 0.0) next.col(l) /= nrm;
                }
                Vt = std::move(next);
            } else {
                Eigen::MatrixXcd next = Wt + cfg.mu * p.omega;
                const Eigen::Index n = obs.spec.frames();
                for (int k = 0; k < bins; ++k) {
                    const double var = (next.col(k).adjoint() * obs.spec.bins[k]).squaredNorm() /
                                       static_cast<double>(n);
                    next.col(k) /= std::sqrt(std::max(var, cfg.variance_floor));
                }
                Wt = std::move(next);
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("iteration " + std::to_string(it) + ": " + e.what());
        }
    }

    if (cfg.algorithm == Algorithm::hive) {
        res.Vt = Vt;
        res.Wt = expand(Vt, map);
    } else {
        res.Wt = to_original(Wt);
    }
    return res;
}

// Checkpoint: one matrix row per line, entries as re,im pairs, full
// round-trip precision.
inline void write_checkpoint(const std::string& path, const Eigen::MatrixXcd& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j).real());
            out << buf << ',';
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j).imag());
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

inline Eigen::MatrixXcd read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::vector<std::vector<cplx>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() % 2 != 0)
            throw std::runtime_error("checkpoint row has an odd entry count: " + path);
        std::vector<cplx> row(vals.size() / 2);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = cplx(vals[2 * j], vals[2 * j + 1]);
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("checkpoint rows have inconsistent lengths: " + path);
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXcd m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    return m;
}

} // namespace hive
