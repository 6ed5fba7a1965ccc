#pragma once

// The four batch verbs behind the command-line tool. A synthesized scenario
// is a directory:
//   scenario.cfg     descriptor, round-trippable through the config parser
//   observation.wav  d-channel mixture (sum of the images)
//   image_<j>.wav    per-source microphone images — the SIR ground truth
//   mixing.csv       FIR taps of generated systems
// Extraction and sweeps read that layout back; everything stays reproducible
// from the descriptor alone.

#include "hive/config.hpp"
#include "hive/eval.hpp"
#include "hive/mixture.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <vector>

namespace hive {

inline std::filesystem::path out_root(const std::string& flag_dir) {
    if (!flag_dir.empty()) return flag_dir;
    if (const char* env = std::getenv("HIVE_OUT_DIR"); env && *env) return env;
    return ".";
}

inline void cmd_synth(const ScenarioDesc& desc, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const SourceBank bank =
        gen_sources(desc.source_count(), desc.samples, desc.seed, desc.kind, desc.block_len);
    MixingSystem sys;
    if (desc.rir_path.empty()) {
        sys = gen_mixing(desc.d, desc.filter_len, desc.seed);
        if (!sys.condition_ok)
            std::cerr << "warning: mixing draw kept with condition "
                      << sys.max_condition << " after " << sys.resample_attempts + 1
                      << " attempts\n";
    } else {
        sys = load_rir(desc.rir_path, desc.d, desc.source_count(), desc.rir_layout);
        if (sys.truncation_tail > 0.0)
            std::cerr << "note: truncated impulse responses, tail energy fraction "
                      << sys.truncation_tail << "\n";
    }
    MixOutput out = mix(bank, sys);
    out.observation.sample_rate = desc.sample_rate;
    write_scenario((dir / "scenario.cfg").string(), desc);
    write_wav((dir / "observation.wav").string(), out.observation);
    for (std::size_t j = 0; j < out.images.size(); ++j) {
        out.images[j].sample_rate = desc.sample_rate;
        write_wav((dir / ("image_" + std::to_string(j) + ".wav")).string(), out.images[j]);
    }
    save_mixing((dir / "mixing.csv").string(), sys);
}

struct ScenarioData {
    TimeSignal observation;
    std::vector<TimeSignal> images;
};

inline ScenarioData read_scenario_dir(const std::filesystem::path& dir) {
    const auto obs_path = dir / "observation.wav";
    if (!std::filesystem::exists(obs_path))
        throw ConfigError("scenario directory has no observation.wav: " + dir.string());
    ScenarioData data;
    data.observation = read_wav(obs_path.string());
    for (int j = 0;; ++j) {
        const auto p = dir / ("image_" + std::to_string(j) + ".wav");
        if (!std::filesystem::exists(p)) break;
        data.images.push_back(read_wav(p.string()));
    }
    return data;
}

struct ExtractOutputs {
    std::string trace_path;      // defaults to <dir>/trace.csv
    std::string audio_path;      // ISTFT of the extracted source, when set
    std::string checkpoint_path; // final V_t (manifold) or W_t, when set
};

inline RunResult cmd_extract(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                             const ExtractOutputs& outputs) {
    cfg.validate("extract");
    const ScenarioData data = read_scenario_dir(dir);
    const SpectralTensor spec =
        stft(data.observation, cfg.fft_len, cfg.effective_hop(), window_from_string(cfg.window));
    std::vector<SpectralTensor> image_specs;
    image_specs.reserve(data.images.size());
    for (const TimeSignal& img : data.images)
        image_specs.push_back(stft(img, cfg.fft_len, cfg.effective_hop(),
                                   window_from_string(cfg.window)));

    std::function<double(const Eigen::MatrixXcd&)> sir_fn;
    if (image_specs.size() >= 2)
        sir_fn = [&image_specs](const Eigen::MatrixXcd& Wt) {
            return sir_multi(Wt, image_specs).sir_db;
        };

    const RunResult res = run(spec, cfg.run, sir_fn);

    const std::string trace_path =
        outputs.trace_path.empty() ? (dir / "trace.csv").string() : outputs.trace_path;
    write_trace(trace_path, res.trace);
    if (!outputs.audio_path.empty()) {
        const SourceEstimate est = extract_source(res.Wt, spec, cfg.run.variance_floor);
        TimeSignal audio = istft(spectral_from_rows(est.s, spec));
        audio.sample_rate = data.observation.sample_rate;
        write_wav(outputs.audio_path, audio);
    }
    if (!outputs.checkpoint_path.empty())
        write_checkpoint(outputs.checkpoint_path,
                         cfg.run.algorithm == Algorithm::hive ? res.Vt : res.Wt);
    return res;
}

// One row per analysis length, one column per algorithm, final-iteration SIR
// in dB. A failing cell records "error" and the sweep continues.
inline void cmd_sweep(const std::filesystem::path& dir, const ExperimentConfig& base,
                      const std::vector<int>& fft_lens, const std::string& out_csv) {
    if (fft_lens.empty()) throw ConfigError("sweep: no fft lengths given");
    for (int len : fft_lens)
        if (len < 4 || len % 4 != 0)
            throw ConfigError("sweep: fft_len " + std::to_string(len) +
                              " is not a positive multiple of 4");
    static const Algorithm algos[] = {Algorithm::ogive, Algorithm::ogive_whitened,
                                      Algorithm::hive};
    std::ofstream out(out_csv);
    if (!out) throw std::runtime_error("cannot open sweep output: " + out_csv);
    out << "fft_len,ogive,ogive_whitened,hive\n";
    for (int len : fft_lens) {
        out << len;
        for (Algorithm a : algos) {
            ExperimentConfig cfg = base;
            cfg.fft_len = len;
            cfg.hop = 0; // the shift is always one quarter of the length
            cfg.run.algorithm = a;
            out << ',';
            try {
                const RunResult res = cmd_extract(dir, cfg, ExtractOutputs{
                    (dir / ("sweep_trace_" + std::to_string(len) + "_" + to_string(a) + ".csv"))
                        .string(), "", ""});
                const double final_sir = res.trace.back().sir_db;
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.6g", final_sir);
                out << buf;
            } catch (const std::exception& e) {
                std::cerr << "sweep cell fft_len=" << len << " algorithm=" << to_string(a)
                          << " failed: " << e.what() << "\n";
                out << "error";
            }
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("sweep write failed: " + out_csv);
}

inline void cmd_plot(const std::vector<std::string>& trace_paths, const std::string& out_svg,
                     const std::string& field = "sir_db") {
    if (trace_paths.empty()) throw ConfigError("plot: no traces given");
    std::vector<std::pair<std::string, std::vector<TraceRow>>> traces;
    traces.reserve(trace_paths.size());
    for (const std::string& p : trace_paths)
        traces.emplace_back(std::filesystem::path(p).stem().string(), read_trace(p));
    write_sir_plot(out_svg, traces, field);
}

} // namespace hive
