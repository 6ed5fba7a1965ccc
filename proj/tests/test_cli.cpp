#include <catch2/catch_amalgamated.hpp>

#include "hive/config.hpp"
#include "hive/eval.hpp"
#include "hive/wav.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kCli = HIVE_CLI_PATH;
const fs::path kRoot = "/tmp/hive_cli_test";

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Workspace {
    Workspace() {
        fs::remove_all(kRoot);
        fs::create_directories(kRoot);
    }
};

fs::path make_scenario(const std::string& name, int seed = 5) {
    const fs::path dir = kRoot / name;
    const std::string flags =
        "synth -d 2 --samples 4000 --seed " + std::to_string(seed) +
        " --kind laplacian_am --filter-len 1 --block-len 64 --out " + dir.string();
    REQUIRE(run_cli(flags) == 0);
    return dir;
}

} // namespace

TEST_CASE("help exits cleanly and unknown verbs do not", "[cli]") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("synth --help") == 0);
    CHECK(run_cli("transmogrify") == 2);
    CHECK(run_cli("") == 2); // a subcommand is required
}

TEST_CASE("synthesis is deterministic and correctly shaped", "[cli]") {
    Workspace ws;
    const fs::path a = make_scenario("scen_a");
    const fs::path b = make_scenario("scen_b");
    CHECK(slurp(a / "observation.wav") == slurp(b / "observation.wav"));
    CHECK(slurp(a / "image_0.wav") == slurp(b / "image_0.wav"));
    CHECK(slurp(a / "mixing.csv") == slurp(b / "mixing.csv"));

    const hive::TimeSignal obs = hive::read_wav((a / "observation.wav").string());
    CHECK(obs.channels() == 2);
    CHECK(obs.length() == 4000);
    REQUIRE(fs::exists(a / "image_1.wav"));
    CHECK_FALSE(fs::exists(a / "image_2.wav"));

    const hive::ScenarioDesc desc = hive::read_scenario((a / "scenario.cfg").string());
    CHECK(desc.d == 2);
    CHECK(desc.samples == 4000);
    CHECK(desc.seed == 5);
    CHECK(desc.kind == "laplacian_am");
    CHECK(desc.filter_len == 1);
    CHECK(desc.block_len == 64);
}

TEST_CASE("a changed seed changes the scenario", "[cli]") {
    Workspace ws;
    const fs::path a = make_scenario("seed_a", 5);
    const fs::path b = make_scenario("seed_b", 6);
    CHECK(slurp(a / "observation.wav") != slurp(b / "observation.wav"));
}

TEST_CASE("extraction writes a trace with the initial state at max_iter 0", "[cli]") {
    Workspace ws;
    const fs::path dir = make_scenario("scen");
    const fs::path trace = kRoot / "t0.csv";
    REQUIRE(run_cli("extract --scenario " + dir.string() +
                    " --algorithm hive --fft-len 16 --max-iter 0 --trace " +
                    trace.string()) == 0);
    const auto rows = hive::read_trace(trace.string());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].iter == 0);
    CHECK(std::isfinite(rows[0].sir_db)); // images provide ground truth
    CHECK(rows[0].wallclock_ms == 0.0);
}

TEST_CASE("classic and whitened runs share only the initial SIR row", "[cli]") {
    Workspace ws;
    const fs::path dir = make_scenario("scen");
    const fs::path ta = kRoot / "ogive.csv", tb = kRoot / "whitened.csv";
    const std::string common = "extract --scenario " + dir.string() +
                               " --fft-len 16 --max-iter 6 --seed 1 --trace ";
    REQUIRE(run_cli(common + ta.string() + " --algorithm ogive") == 0);
    REQUIRE(run_cli(common + tb.string() + " --algorithm ogive_whitened") == 0);
    const auto ra = hive::read_trace(ta.string());
    const auto rb = hive::read_trace(tb.string());
    REQUIRE(ra.size() == 7);
    REQUIRE(rb.size() == 7);
    CHECK(std::abs(ra[0].sir_db - rb[0].sir_db) < 1e-6);
    CHECK(ra.back().sir_db != rb.back().sir_db);
}

TEST_CASE("extraction can emit audio and a checkpoint", "[cli]") {
    Workspace ws;
    const fs::path dir = make_scenario("scen");
    const fs::path audio = kRoot / "out.wav", ck = kRoot / "ck.csv";
    REQUIRE(run_cli("extract --scenario " + dir.string() +
                    " --algorithm hive --fft-len 16 --max-iter 3 --audio " + audio.string() +
                    " --checkpoint " + ck.string()) == 0);
    const hive::TimeSignal out = hive::read_wav(audio.string());
    CHECK(out.channels() == 1);
    CHECK(out.length() >= 4000); // analysis padding may extend the tail
    const Eigen::MatrixXcd v = hive::read_checkpoint(ck.string());
    CHECK(v.rows() == 2);
    CHECK(v.cols() == 5); // fft_len/4 + 1 manifold parameters
    // default trace path lands inside the scenario directory
    CHECK(fs::exists(dir / "trace.csv"));
}

TEST_CASE("config files seed the flags and flags win", "[cli]") {
    Workspace ws;
    const fs::path dir = make_scenario("scen");
    const fs::path cfg = kRoot / "exp.cfg";
    {
        std::ofstream out(cfg);
        out << "algorithm = ogive\nfft_len = 16\nmax_iter = 2\nmu = 0.05\n";
    }
    const fs::path trace = kRoot / "cfgrun.csv";
    REQUIRE(run_cli("extract --scenario " + dir.string() + " --config " + cfg.string() +
                    " --max-iter 4 --trace " + trace.string()) == 0);
    CHECK(hive::read_trace(trace.string()).size() == 5); // flag overrode the file

    {
        std::ofstream out(cfg);
        out << "algorithm = ogive\nfft_leng = 16\n"; // typo must be fatal
    }
    CHECK(run_cli("extract --scenario " + dir.string() + " --config " + cfg.string() +
                  " --trace " + trace.string()) == 2);
}

TEST_CASE("bad configurations exit with code 2, runtime failures with 3", "[cli]") {
    Workspace ws;
    const fs::path dir = make_scenario("scen");
    CHECK(run_cli("extract --scenario " + dir.string() + " --algorithm newton") == 2);
    CHECK(run_cli("extract --scenario " + dir.string() + " --fft-len 50") == 2);
    CHECK(run_cli("extract --scenario " + kRoot.string() + "/absent --fft-len 16") == 2);
    CHECK(run_cli("extract --scenario " + dir.string() + " --fft-len 16 --mu -1") == 2);
    // valid config, impossible computation: more channels in the separator
    // than frames cannot happen via CLI, so misuse a plot schema instead
    const fs::path bogus = kRoot / "bogus.csv";
    {
        std::ofstream out(bogus);
        out << "not,a,trace\n";
    }
    CHECK(run_cli("plot --traces " + bogus.string() + " --out " + (kRoot / "x.svg").string()) ==
          3);
}

TEST_CASE("sweeps tabulate every requested length deterministically", "[cli]") {
    Workspace ws;
    const fs::path dir = make_scenario("scen");
    const fs::path table = kRoot / "table.csv";
    const std::string cmd = "sweep --scenario " + dir.string() +
                            " --fft-lens 16,32 --max-iter 3 --sir-stride 3 --contrast-stride 3 "
                            "--out " + table.string();
    REQUIRE(run_cli(cmd) == 0);
    const std::string first = slurp(table);
    std::istringstream lines(first);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "fft_len,ogive,ogive_whitened,hive");
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        CHECK(line.find("error") == std::string::npos);
    }
    CHECK(rows == 2);

    REQUIRE(run_cli(cmd) == 0);
    CHECK(slurp(table) == first);

    CHECK(run_cli("sweep --scenario " + dir.string() + " --fft-lens 50 --out " +
                  table.string()) == 2);
}

TEST_CASE("plot renders one polyline per parseable trace", "[cli]") {
    Workspace ws;
    const fs::path dir = make_scenario("scen");
    const fs::path t1 = kRoot / "p1.csv", t2 = kRoot / "p2.csv";
    REQUIRE(run_cli("extract --scenario " + dir.string() +
                    " --algorithm hive --fft-len 16 --max-iter 4 --trace " + t1.string()) == 0);
    REQUIRE(run_cli("extract --scenario " + dir.string() +
                    " --algorithm ogive --fft-len 16 --max-iter 2 --trace " + t2.string()) == 0);
    const fs::path svg = kRoot / "plot.svg";
    REQUIRE(run_cli("plot --traces " + t1.string() + "," + t2.string() + " --out " +
                    svg.string()) == 0);
    const std::string text = slurp(svg);
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("p1") != std::string::npos);
    CHECK(text.find("p2") != std::string::npos);

    CHECK(run_cli("plot --out " + svg.string()) == 2); // --traces is required
    CHECK(run_cli("plot --traces " + (kRoot / "absent.csv").string() + " --out " +
                  svg.string()) == 3);
}

TEST_CASE("the output directory environment variable provides the default", "[cli]") {
    Workspace ws;
    const fs::path envroot = kRoot / "envout";
    const std::string cmd = "HIVE_OUT_DIR=" + envroot.string() + " " + kCli +
                            " synth -d 2 --samples 1000 --seed 2 --kind laplacian_iid "
                            ">/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(rc));
    REQUIRE(WEXITSTATUS(rc) == 0);
    CHECK(fs::exists(envroot / "scenario" / "observation.wav"));
}
