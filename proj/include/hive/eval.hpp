#pragma once

// Interference metrics against ground-truth source images, plus the trace
// file format shared by the algorithms and the command-line tools. SIR is
// computed in the analysis domain on the truncated bin set; the discarded
// mirror bins are accounted for with conjugate-symmetry weights, so the
// totals match what full-spectrum energies would give for real signals.

#include "hive/ive.hpp"
#include "hive/stft.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hive {

struct SirReport {
    double sir_db = 0.0;
    Eigen::VectorXd per_bin_db;     // breakdown over bins, same weights applied
    bool zero_interference = false; // +inf sentinel returned
    int target = 0;                 // which image was treated as the target
};

namespace detail {

// conjugate-symmetry weights: the DC and Nyquist bins have no mirror
inline double bin_weight(int k, int n_bins) { return (k == 0 || k == n_bins - 1) ? 1.0 : 2.0; }

inline double to_db(double num, double den) {
    if (den <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(num / den);
}

} // namespace detail

// Weighted output-power ratio of the separator applied to the target images
// versus the interference images. Zero interference power yields the +inf
// sentinel with the flag set.
inline SirReport sir(const Eigen::MatrixXcd& Wt, const SpectralTensor& target,
                     const SpectralTensor& interf) {
    const int bins = target.n_bins();
    if (interf.n_bins() != bins || Wt.cols() != bins || Wt.rows() != target.channels() ||
        target.frames() != interf.frames())
        throw std::invalid_argument("sir: geometry mismatch");
    SirReport rep;
    rep.per_bin_db.resize(bins);
    double num = 0.0, den = 0.0;
    for (int k = 0; k < bins; ++k) {
        const double c = detail::bin_weight(k, bins);
        const double pt = c * (Wt.col(k).adjoint() * target.bins[k]).squaredNorm();
        const double pi = c * (Wt.col(k).adjoint() * interf.bins[k]).squaredNorm();
        num += pt;
        den += pi;
        rep.per_bin_db[k] = detail::to_db(pt, pi);
    }
    rep.sir_db = detail::to_db(num, den);
    rep.zero_interference = den <= 0.0;
    return rep;
}

// Blind extraction fixes no source ordering, so the achieved SIR is measured
// against the image the separator is actually passing: the one with the
// largest weighted output power. The remaining images form the interference.
inline SirReport sir_multi(const Eigen::MatrixXcd& Wt,
                           const std::vector<SpectralTensor>& images) {
    if (images.empty()) throw std::invalid_argument("sir_multi: no images");
    const int bins = images.front().n_bins();
    std::vector<double> power(images.size(), 0.0);
    for (std::size_t j = 0; j < images.size(); ++j)
        for (int k = 0; k < bins; ++k)
            power[j] += detail::bin_weight(k, bins) *
                        (Wt.col(k).adjoint() * images[j].bins[k]).squaredNorm();
    std::size_t target = 0;
    for (std::size_t j = 1; j < images.size(); ++j)
        if (power[j] > power[target]) target = j;

    SpectralTensor interf = images.front();
    for (int k = 0; k < bins; ++k) {
        interf.bins[k].setZero();
        for (std::size_t j = 0; j < images.size(); ++j)
            if (j != target) interf.bins[k] += images[j].bins[k];
    }
    SirReport rep = sir(Wt, images[target], interf);
    rep.target = static_cast<int>(target);
    return rep;
}

namespace detail {

inline void format_value(std::ostream& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

} // namespace detail

inline void write_trace(const std::string& path, const std::vector<TraceRow>& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open trace for writing: " + path);
    out << "iter,contrast,sir_db,grad_norm,wallclock_ms\n";
    for (const TraceRow& r : trace) {
        out << r.iter << ',';
        detail::format_value(out, r.contrast);
        out << ',';
        detail::format_value(out, r.sir_db);
        out << ',';
        detail::format_value(out, r.grad_norm);
        out << ',';
        detail::format_value(out, r.wallclock_ms);
        out << '\n';
    }
    if (!out) throw std::runtime_error("trace write failed: " + path);
}

inline std::vector<TraceRow> read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "iter,contrast,sir_db,grad_norm,wallclock_ms")
        throw std::runtime_error("trace header mismatch: " + path);
    std::vector<TraceRow> trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) throw std::runtime_error("trace row has wrong arity: " + path);
        TraceRow r;
        r.iter = std::stoi(cells[0]);
        r.contrast = std::stod(cells[1]);
        r.sir_db = std::stod(cells[2]);
        r.grad_norm = std::stod(cells[3]);
        r.wallclock_ms = std::stod(cells[4]);
        trace.push_back(r);
    }
    return trace;
}

// Standalone SVG line plot of one trace field against the iteration index;
// NaN entries (strided-out metrics) are skipped. No external renderer is
// involved — the file is self-contained.
inline void write_sir_plot(const std::string& path,
                           const std::vector<std::pair<std::string, std::vector<TraceRow>>>& traces,
                           const std::string& field = "sir_db") {
    if (traces.empty()) throw std::invalid_argument("write_sir_plot: no traces");
    if (field != "sir_db" && field != "contrast" && field != "grad_norm")
        throw std::invalid_argument("write_sir_plot: unknown field: " + field);
    auto pick = [&](const TraceRow& r) {
        return field == "sir_db" ? r.sir_db : field == "contrast" ? r.contrast : r.grad_norm;
    };

    double xmax = 1.0, ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto& [name, rows] : traces) {
        for (const TraceRow& r : rows) {
            const double v = pick(r);
            if (!std::isfinite(v)) continue;
            xmax = std::max(xmax, static_cast<double>(r.iter));
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (!std::isfinite(ymin)) {
        ymin = 0.0;
        ymax = 1.0;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 1.0;
        ymax += 1.0;
    }

    const double w = 640, h = 420, ml = 64, mr = 150, mt = 24, mb = 48;
    auto px = [&](double it) { return ml + (w - ml - mr) * it / xmax; };
    auto py = [&](double v) { return h - mb - (h - mb - mt) * (v - ymin) / (ymax - ymin); };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open plot for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
        << h - mb << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
        << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = ymin + (ymax - ymin) * tick / 4.0;
        const double x = xmax * tick / 4.0;
        out << "<text x=\"" << ml - 8 << "\" y=\"" << py(v) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        out << buf << "</text>\n";
        out << "<text x=\"" << px(x) << "\" y=\"" << h - mb + 16
            << "\" text-anchor=\"middle\" font-size=\"11\">" << static_cast<long>(x)
            << "</text>\n";
    }
    out << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 8
        << "\" text-anchor=\"middle\" font-size=\"12\">iteration</text>\n"
        << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << (mt + h - mb) / 2 << ")\">" << field << "</text>\n";

    int idx = 0;
    for (const auto& [name, rows] : traces) {
        const char* color = palette[idx % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const TraceRow& r : rows) {
            const double v = pick(r);
            if (!std::isfinite(v)) continue;
            out << px(r.iter) << ',' << py(v) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << w - mr + 12 << "\" y=\"" << mt + 16 * idx + 10
            << "\" font-size=\"11\" fill=\"" << color << "\">" << name << "</text>\n";
        ++idx;
    }
    out << "</svg>\n";
    if (!out) throw std::runtime_error("plot write failed: " + path);
}

} // namespace hive
