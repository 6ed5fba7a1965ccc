#pragma once

// Flat key=value configuration files: scenario descriptors and experiment
// settings. Lines are `key = value`, '#' starts a comment, keys are unique,
// and unknown keys are rejected — a typo should fail loudly before any
// computation starts.

#include "hive/ive.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hive {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using KvMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

} // namespace detail

inline KvMap parse_kv(std::istream& in, const std::string& origin) {
    KvMap kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, val).second)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                              "'");
    }
    return kv;
}

inline KvMap read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_kv(in, path);
}

// Synthesis scenario: what to generate and with which mixing system. Either
// filter_len (generated FIR system) or rir_path (external responses) selects
// the mixing source.
struct ScenarioDesc {
    int d = 2;
    long samples = 40000;
    std::uint64_t seed = 1;
    std::string kind = "laplacian_am"; // or laplacian_iid
    int filter_len = 1;
    std::string rir_path;
    std::string rir_layout = "mic_major";
    int n_src = 0; // 0: same as d
    int block_len = 512;
    int sample_rate = 16000;

    int source_count() const { return n_src > 0 ? n_src : d; }
};

inline ScenarioDesc scenario_from_kv(const KvMap& kv, const std::string& origin) {
    static const std::set<std::string> known = {"d",        "samples",    "seed",
                                                "kind",     "filter_len", "rir_path",
                                                "rir_layout", "n_src",    "block_len",
                                                "sample_rate"};
    for (const auto& [k, v] : kv)
        if (!known.count(k)) throw ConfigError(origin + ": unknown scenario key '" + k + "'");
    ScenarioDesc s;
    auto get = [&](const char* key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (const auto* v = get("d")) s.d = static_cast<int>(detail::to_long("d", *v));
    if (const auto* v = get("samples")) s.samples = detail::to_long("samples", *v);
    if (const auto* v = get("seed"))
        s.seed = static_cast<std::uint64_t>(detail::to_long("seed", *v));
    if (const auto* v = get("kind")) s.kind = *v;
    if (const auto* v = get("filter_len"))
        s.filter_len = static_cast<int>(detail::to_long("filter_len", *v));
    if (const auto* v = get("rir_path")) s.rir_path = *v;
    if (const auto* v = get("rir_layout")) s.rir_layout = *v;
    if (const auto* v = get("n_src")) s.n_src = static_cast<int>(detail::to_long("n_src", *v));
    if (const auto* v = get("block_len"))
        s.block_len = static_cast<int>(detail::to_long("block_len", *v));
    if (const auto* v = get("sample_rate"))
        s.sample_rate = static_cast<int>(detail::to_long("sample_rate", *v));

    if (s.d < 2) throw ConfigError(origin + ": d must be >= 2");
    if (s.samples < 1) throw ConfigError(origin + ": samples must be positive");
    if (s.kind != "laplacian_am" && s.kind != "laplacian_iid")
        throw ConfigError(origin + ": unknown kind '" + s.kind + "'");
    if (s.filter_len < 1) throw ConfigError(origin + ": filter_len must be >= 1");
    if (s.block_len < 1) throw ConfigError(origin + ": block_len must be >= 1");
    if (s.rir_layout != "mic_major" && s.rir_layout != "src_major")
        throw ConfigError(origin + ": rir_layout must be mic_major or src_major");
    if (s.rir_path.empty() && s.n_src > 0 && s.n_src != s.d)
        throw ConfigError(origin + ": generated systems are square; n_src must equal d");
    return s;
}

inline ScenarioDesc read_scenario(const std::string& path) {
    return scenario_from_kv(read_kv_file(path), path);
}

inline void write_scenario(const std::string& path, const ScenarioDesc& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open scenario file for writing: " + path);
    out << "d = " << s.d << "\n"
        << "samples = " << s.samples << "\n"
        << "seed = " << s.seed << "\n"
        << "kind = " << s.kind << "\n";
    if (s.rir_path.empty())
        out << "filter_len = " << s.filter_len << "\n";
    else
        out << "rir_path = " << s.rir_path << "\n"
            << "rir_layout = " << s.rir_layout << "\n";
    if (s.n_src > 0) out << "n_src = " << s.n_src << "\n";
    out << "block_len = " << s.block_len << "\n"
        << "sample_rate = " << s.sample_rate << "\n";
    if (!out) throw std::runtime_error("scenario write failed: " + path);
}

// Analysis + algorithm settings for an extraction run. Documented defaults:
// window=hann, hop=fft_len/4, mu=0.05.
struct ExperimentConfig {
    int fft_len = 512;
    int hop = 0; // 0: fft_len / 4
    std::string window = "hann";
    RunConfig run;

    int effective_hop() const { return hop > 0 ? hop : fft_len / 4; }

    void validate(const std::string& origin) const {
        if (fft_len < 4 || fft_len % 4 != 0)
            throw ConfigError(origin + ": fft_len must be a positive multiple of 4");
        if (hop < 0 || hop > fft_len)
            throw ConfigError(origin + ": hop must lie in [1, fft_len]");
        if (run.mu <= 0.0) throw ConfigError(origin + ": mu must be positive");
        if (run.max_iter < 0) throw ConfigError(origin + ": max_iter must be >= 0");
        if (run.sir_stride < 1 || run.contrast_stride < 1)
            throw ConfigError(origin + ": strides must be >= 1");
        try {
            window_from_string(window);
        } catch (const std::exception& e) {
            throw ConfigError(origin + ": " + e.what());
        }
    }
};

inline ExperimentConfig experiment_from_kv(const KvMap& kv, const std::string& origin) {
    static const std::set<std::string> known = {
        "fft_len", "hop",        "window",          "algorithm", "mu",
        "max_iter", "seed",      "variance_floor",  "ridge_rel", "sir_stride",
        "contrast_stride", "timing"};
    for (const auto& [k, v] : kv)
        if (!known.count(k)) throw ConfigError(origin + ": unknown experiment key '" + k + "'");
    ExperimentConfig c;
    auto get = [&](const char* key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (const auto* v = get("fft_len"))
        c.fft_len = static_cast<int>(detail::to_long("fft_len", *v));
    if (const auto* v = get("hop")) c.hop = static_cast<int>(detail::to_long("hop", *v));
    if (const auto* v = get("window")) c.window = *v;
    if (const auto* v = get("algorithm")) {
        try {
            c.run.algorithm = algorithm_from_string(*v);
        } catch (const std::exception& e) {
            throw ConfigError(origin + ": " + e.what());
        }
    }
    if (const auto* v = get("mu")) c.run.mu = detail::to_double("mu", *v);
    if (const auto* v = get("max_iter"))
        c.run.max_iter = static_cast<int>(detail::to_long("max_iter", *v));
    if (const auto* v = get("seed"))
        c.run.seed = static_cast<std::uint64_t>(detail::to_long("seed", *v));
    if (const auto* v = get("variance_floor"))
        c.run.variance_floor = detail::to_double("variance_floor", *v);
    if (const auto* v = get("ridge_rel")) c.run.ridge_rel = detail::to_double("ridge_rel", *v);
    if (const auto* v = get("sir_stride"))
        c.run.sir_stride = static_cast<int>(detail::to_long("sir_stride", *v));
    if (const auto* v = get("contrast_stride"))
        c.run.contrast_stride = static_cast<int>(detail::to_long("contrast_stride", *v));
    if (const auto* v = get("timing")) c.run.timing = detail::to_bool("timing", *v);
    c.validate(origin);
    return c;
}

} // namespace hive
