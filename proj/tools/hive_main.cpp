// Batch front-end: synthesize ground-truth scenarios, run extractions,
// sweep analysis lengths, and plot traces. Exit codes: 0 success, 2 bad
// configuration, 3 runtime/numerical failure.

#include "CLI11.hpp"

#include "hive/commands.hpp"

#include <iostream>
#include <string>
#include <vector>

namespace {

// Overlay semantics shared by all verbs: values from --config files are
// defaults, explicitly passed flags win.
void put(hive::KvMap& kv, const std::string& key, const std::string& val) { kv[key] = val; }

struct FlagSet {
    CLI::App* cmd;
    hive::KvMap values;

    void add_int(const char* flag, const char* key, const char* desc) {
        cmd->add_option_function<long>(
               flag, [this, key](long v) { put(values, key, std::to_string(v)); }, desc)
            ->type_name("INT");
    }
    void add_double(const char* flag, const char* key, const char* desc) {
        cmd->add_option_function<double>(
               flag,
               [this, key](double v) {
                   char buf[64];
                   std::snprintf(buf, sizeof buf, "%.17g", v);
                   put(values, key, buf);
               },
               desc)
            ->type_name("FLOAT");
    }
    void add_string(const char* flag, const char* key, const char* desc) {
        cmd->add_option_function<std::string>(
            flag, [this, key](const std::string& v) { put(values, key, v); }, desc);
    }
    void add_flag(const char* flag, const char* key, const char* desc) {
        cmd->add_flag_callback(
            flag, [this, key]() { put(values, key, "true"); }, desc);
    }
};

hive::KvMap overlay(const std::string& config_path, const hive::KvMap& flags) {
    hive::KvMap kv;
    if (!config_path.empty()) kv = hive::read_kv_file(config_path);
    for (const auto& [k, v] : flags) kv[k] = v;
    return kv;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"blind source extraction experiments"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a ground-truth scenario directory");
    std::string synth_config, synth_out;
    synth->add_option("--config", synth_config, "scenario descriptor file");
    synth->add_option("--out", synth_out, "output directory (default: $HIVE_OUT_DIR/scenario)");
    FlagSet synth_flags{synth, {}};
    synth_flags.add_int("-d,--channels", "d", "microphones / sources");
    synth_flags.add_int("--samples", "samples", "signal length in samples");
    synth_flags.add_int("--seed", "seed", "scenario seed");
    synth_flags.add_string("--kind", "kind", "source kind: laplacian_am | laplacian_iid");
    synth_flags.add_int("--filter-len", "filter_len", "generated mixing FIR length");
    synth_flags.add_string("--rir-path", "rir_path", "external impulse responses (wav/csv)");
    synth_flags.add_string("--rir-layout", "rir_layout", "mic_major | src_major");
    synth_flags.add_int("--n-src", "n_src", "source count (default d)");
    synth_flags.add_int("--block-len", "block_len", "envelope block length");
    synth_flags.add_int("--sample-rate", "sample_rate", "sample rate written to WAVs");

    // ---- shared experiment flags ----
    auto add_experiment_flags = [](CLI::App* cmd, FlagSet& fs) {
        fs.cmd = cmd;
        fs.add_string("--algorithm", "algorithm", "ogive | ogive_whitened | hive");
        fs.add_int("--fft-len", "fft_len", "analysis DFT length (multiple of 4)");
        fs.add_int("--hop", "hop", "frame shift (default fft_len/4)");
        fs.add_string("--window", "window", "hann | rect");
        fs.add_double("--mu", "mu", "gradient step size");
        fs.add_int("--max-iter", "max_iter", "iteration count");
        fs.add_int("--seed", "seed", "run seed (recorded in the trace config)");
        fs.add_double("--variance-floor", "variance_floor", "numerical floor");
        fs.add_double("--ridge-rel", "ridge_rel", "relative covariance ridge");
        fs.add_int("--sir-stride", "sir_stride", "SIR evaluation stride");
        fs.add_int("--contrast-stride", "contrast_stride", "contrast evaluation stride");
        fs.add_flag("--timing", "timing", "record wall-clock times in the trace");
    };

    // ---- extract ----
    auto* extract = app.add_subcommand("extract", "run one extraction on a scenario");
    std::string ex_scenario, ex_config, ex_trace, ex_audio, ex_checkpoint;
    extract->add_option("--scenario", ex_scenario, "scenario directory")->required();
    extract->add_option("--config", ex_config, "experiment config file");
    extract->add_option("--trace", ex_trace, "trace CSV path (default <scenario>/trace.csv)");
    extract->add_option("--audio", ex_audio, "write the extracted source as WAV");
    extract->add_option("--checkpoint", ex_checkpoint, "write the final parameters as CSV");
    FlagSet ex_flags{extract, {}};
    add_experiment_flags(extract, ex_flags);

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "tabulate final SIR across analysis lengths");
    std::string sw_scenario, sw_config, sw_out;
    std::vector<int> sw_lens;
    sweep->add_option("--scenario", sw_scenario, "scenario directory")->required();
    sweep->add_option("--config", sw_config, "experiment config file");
    sweep->add_option("--fft-lens", sw_lens, "lengths, e.g. 32,64,128")
        ->required()
        ->delimiter(',');
    sweep->add_option("--out", sw_out, "summary CSV path")->required();
    FlagSet sw_flags{sweep, {}};
    add_experiment_flags(sweep, sw_flags);

    // ---- plot ----
    auto* plot = app.add_subcommand("plot", "render traces as a standalone SVG");
    std::vector<std::string> pl_traces;
    std::string pl_out, pl_field = "sir_db";
    plot->add_option("--traces", pl_traces, "trace CSV paths")->required()->delimiter(',');
    plot->add_option("--out", pl_out, "SVG path")->required();
    plot->add_option("--field", pl_field, "sir_db | contrast | grad_norm");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) {
            const hive::KvMap kv = overlay(synth_config, synth_flags.values);
            const hive::ScenarioDesc desc = hive::scenario_from_kv(kv, "synth");
            const auto dir = synth_out.empty() ? hive::out_root("") / "scenario"
                                               : std::filesystem::path(synth_out);
            hive::cmd_synth(desc, dir);
            std::cout << "scenario written to " << dir.string() << "\n";
        } else if (extract->parsed()) {
            const hive::KvMap kv = overlay(ex_config, ex_flags.values);
            const hive::ExperimentConfig cfg = hive::experiment_from_kv(kv, "extract");
            const hive::RunResult res = hive::cmd_extract(
                ex_scenario, cfg, hive::ExtractOutputs{ex_trace, ex_audio, ex_checkpoint});
            const hive::TraceRow& last = res.trace.back();
            std::cout << "final iter=" << last.iter << " contrast=" << last.contrast
                      << " sir_db=" << last.sir_db << " grad_norm=" << last.grad_norm << "\n";
        } else if (sweep->parsed()) {
            const hive::KvMap kv = overlay(sw_config, sw_flags.values);
            const hive::ExperimentConfig cfg = hive::experiment_from_kv(kv, "sweep");
            hive::cmd_sweep(sw_scenario, cfg, sw_lens, sw_out);
            std::cout << "sweep table written to " << sw_out << "\n";
        } else if (plot->parsed()) {
            hive::cmd_plot(pl_traces, pl_out, pl_field);
            std::cout << "plot written to " << pl_out << "\n";
        }
    } catch (const hive::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
