#include <catch2/catch_amalgamated.hpp>

#include "hive/mixture.hpp"
#include "hive/stft.hpp"

#include <cstdio>
#include <fstream>

namespace {

double kurtosis(const Eigen::VectorXd& x) {
    const double mean = x.mean();
    const Eigen::ArrayXd c = x.array() - mean;
    const double m2 = c.square().mean();
    const double m4 = c.square().square().mean();
    return m4 / (m2 * m2);
}

} // namespace

TEST_CASE("source generation is a pure function of the seed", "[mixture]") {
    const auto a = hive::gen_sources(2, 5000, 42, "laplacian_am", 256);
    const auto b = hive::gen_sources(2, 5000, 42, "laplacian_am", 256);
    for (int j = 0; j < 2; ++j)
        REQUIRE((a.sources[j] - b.sources[j]).cwiseAbs().maxCoeff() == 0.0);
    const auto c = hive::gen_sources(2, 5000, 43, "laplacian_am", 256);
    CHECK((a.sources[0] - c.sources[0]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("iid Laplacian sources are super-Gaussian and unit power", "[mixture]") {
    const auto bank = hive::gen_sources(2, 100000, 7, "laplacian_iid");
    for (int j = 0; j < 2; ++j) {
        const double power = bank.sources[j].squaredNorm() / 100000.0;
        REQUIRE(std::abs(power - 1.0) < 1e-12);
        REQUIRE(kurtosis(bank.sources[j]) > 4.5); // Gaussian would sit near 3
    }
}

TEST_CASE("generated sources are sample-uncorrelated", "[mixture]") {
    const auto bank = hive::gen_sources(2, 100000, 19, "laplacian_am", 512);
    const double corr = bank.sources[0].dot(bank.sources[1]) /
                        (bank.sources[0].norm() * bank.sources[1].norm());
    CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("amplitude modulation changes the envelope, not the power", "[mixture]") {
    const auto am = hive::gen_sources(1, 60000, 5, "laplacian_am", 512);
    const auto iid = hive::gen_sources(1, 60000, 5, "laplacian_iid");
    REQUIRE(std::abs(am.sources[0].squaredNorm() / 60000.0 - 1.0) < 1e-12);
    // the modulated source has heavier tails than its iid carrier
    CHECK(kurtosis(am.sources[0]) > kurtosis(iid.sources[0]));
    CHECK(am.block_len == 512);
    CHECK(iid.block_len == 0);
}

TEST_CASE("unknown source kinds are rejected", "[mixture]") {
    CHECK_THROWS_AS(hive::gen_sources(1, 100, 1, "gaussian"), std::invalid_argument);
    CHECK_THROWS_AS(hive::gen_sources(0, 100, 1, "laplacian_iid"), std::invalid_argument);
    CHECK_THROWS_AS(hive::gen_sources(1, 0, 1, "laplacian_iid"), std::invalid_argument);
}

TEST_CASE("instantaneous mixing systems are constant across bins", "[mixture]") {
    const auto sys = hive::gen_mixing(2, 1, 3);
    REQUIRE(sys.filter_len() == 1);
    CHECK(sys.condition_ok);
    CHECK(sys.max_condition <= 100.0);
    // per-source unit energy
    for (int j = 0; j < 2; ++j) REQUIRE(std::abs(sys.taps[0].col(j).norm() - 1.0) < 1e-12);
}

TEST_CASE("mixing generation is deterministic and well-conditioned", "[mixture]") {
    const auto a = hive::gen_mixing(3, 8, 77);
    const auto b = hive::gen_mixing(3, 8, 77);
    REQUIRE(a.filter_len() == 8);
    for (int t = 0; t < 8; ++t)
        REQUIRE((a.taps[t] - b.taps[t]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.condition_ok);
    CHECK(a.max_condition <= 100.0);
}

TEST_CASE("the direct path dominates the reflections", "[mixture]") {
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto sys = hive::gen_mixing(2, 16, seed);
        double later = 0.0;
        for (int t = 1; t < sys.filter_len(); ++t)
            later = std::max(later, sys.taps[t].squaredNorm());
        if (sys.taps[0].squaredNorm() > later) ++wins;
    }
    CHECK(wins >= 4);
}

TEST_CASE("mixing through a unit delta returns the source", "[mixture]") {
    hive::SourceBank bank = hive::gen_sources(1, 2000, 9, "laplacian_iid");
    hive::MixingSystem sys;
    sys.taps = {Eigen::MatrixXd::Identity(1, 1)};
    const auto out = hive::mix(bank, sys);
    REQUIRE(out.images.size() == 1);
    CHECK((out.observation.samples.col(0) - bank.sources[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("observations equal the sum of images bit-exactly", "[mixture]") {
    const auto bank = hive::gen_sources(3, 3000, 13, "laplacian_am", 128);
    const auto sys = hive::gen_mixing(3, 4, 13);
    const auto out = hive::mix(bank, sys);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3000, 3);
    for (const auto& img : out.images) sum += img.samples;
    CHECK((out.observation.samples - sum).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("convolution matches a naive tap loop", "[mixture]") {
    const auto bank = hive::gen_sources(2, 300, 23, "laplacian_iid");
    const auto sys = hive::gen_mixing(2, 5, 23);
    const auto out = hive::mix(bank, sys);
    for (int i = 0; i < 2; ++i) {
        for (int n = 0; n < 300; ++n) {
            double want = 0.0;
            for (int j = 0; j < 2; ++j)
                for (int t = 0; t < 5 && t <= n; ++t)
                    want += sys.taps[t](i, j) * bank.sources[j][n - t];
            REQUIRE(std::abs(out.observation.samples(n, i) - want) < 1e-12);
        }
    }
}

TEST_CASE("instantaneous mixtures obey analysis-domain linearity", "[mixture]") {
    const auto bank = hive::gen_sources(2, 4096, 31, "laplacian_am", 256);
    const auto sys = hive::gen_mixing(2, 1, 31);
    const auto out = hive::mix(bank, sys);
    const Eigen::Matrix2d a = sys.taps[0];

    const auto spec_obs = hive::stft(out.observation, 64, 16, hive::Window::hann);
    hive::TimeSignal s0, s1;
    s0.samples = bank.sources[0];
    s1.samples = bank.sources[1];
    const auto spec_s0 = hive::stft(s0, 64, 16, hive::Window::hann);
    const auto spec_s1 = hive::stft(s1, 64, 16, hive::Window::hann);
    for (int k = 0; k < spec_obs.n_bins(); ++k) {
        Eigen::MatrixXcd stacked(2, spec_obs.frames());
        stacked.row(0) = spec_s0.bins[k].row(0);
        stacked.row(1) = spec_s1.bins[k].row(0);
        REQUIRE((spec_obs.bins[k] - a.cast<hive::cplx>() * stacked).cwiseAbs().maxCoeff() <
                1e-8);
    }
}

TEST_CASE("mixing systems round-trip through CSV", "[mixture]") {
    const auto sys = hive::gen_mixing(2, 6, 55);
    const std::string path = "/tmp/hive_test_mixing.csv";
    hive::save_mixing(path, sys);
    const auto back = hive::load_rir(path, 2, 2, "mic_major");
    REQUIRE(back.filter_len() == 6);
    for (int t = 0; t < 6; ++t)
        REQUIRE((back.taps[t] - sys.taps[t]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a delta CSV loads as the identity instantaneous system", "[mixture]") {
    const std::string path = "/tmp/hive_test_delta.csv";
    {
        std::ofstream out(path);
        // rows in mic-major order: (0,0) (0,1) (1,0) (1,1)
        out << "1,0,0\n0,0,0\n0,0,0\n1,0,0\n";
    }
    const auto sys = hive::load_rir(path, 2, 2, "mic_major");
    REQUIRE(sys.filter_len() == 3);
    CHECK((sys.taps[0] - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(sys.taps[1].cwiseAbs().maxCoeff() == 0.0);
    CHECK(sys.taps[2].cwiseAbs().maxCoeff() == 0.0);
    CHECK(sys.max_condition == 1.0);
}

TEST_CASE("impulse responses load from multichannel WAV in both layouts", "[mixture]") {
    const std::string path = "/tmp/hive_test_rir.wav";
    hive::TimeSignal sig;
    sig.samples = Eigen::MatrixXd::Zero(4, 4);
    // channel c holds a delta scaled by c+1 at tap c
    for (int c = 0; c < 4; ++c) sig.samples(c, c) = c + 1;
    hive::write_wav(path, sig);

    const auto mm = hive::load_rir(path, 2, 2, "mic_major");
    CHECK(mm.taps[0](0, 0) == 1.0); // channel 0 -> mic 0, src 0
    CHECK(mm.taps[1](0, 1) == 2.0); // channel 1 -> mic 0, src 1
    CHECK(mm.taps[2](1, 0) == 3.0);
    CHECK(mm.taps[3](1, 1) == 4.0);

    const auto sm = hive::load_rir(path, 2, 2, "src_major");
    CHECK(sm.taps[1](1, 0) == 2.0); // channel 1 -> mic 1, src 0
    CHECK(sm.taps[2](0, 1) == 3.0);
}

TEST_CASE("truncation reports the discarded energy fraction", "[mixture]") {
    const std::string path = "/tmp/hive_test_long.csv";
    Eigen::VectorXd fir(600);
    hive::Rng rng(99);
    for (int t = 0; t < 600; ++t) fir[t] = rng.gauss() * std::exp(-t / 80.0);
    {
        std::ofstream out(path);
        char buf[64];
        for (int rep = 0; rep < 4; ++rep) {
            for (int t = 0; t < 600; ++t) {
                std::snprintf(buf, sizeof buf, "%.17g", fir[t]);
                out << (t ? "," : "") << buf;
            }
            out << "\n";
        }
    }
    const auto sys = hive::load_rir(path, 2, 2, "mic_major", 256);
    REQUIRE(sys.filter_len() == 256);
    const double want = fir.tail(600 - 256).squaredNorm() / fir.squaredNorm();
    CHECK(std::abs(sys.truncation_tail - want) < 1e-12);
}

TEST_CASE("impulse-response loading validates its inputs", "[mixture]") {
    CHECK_THROWS_AS(hive::load_rir("/tmp/does_not_exist_hive.csv", 2, 2, "mic_major"),
                    std::runtime_error);
    const std::string path = "/tmp/hive_test_short.csv";
    {
        std::ofstream out(path);
        out << "1,0\n0,1\n"; // only 2 rows for a 2x2 system
    }
    CHECK_THROWS_AS(hive::load_rir(path, 2, 2, "mic_major"), std::invalid_argument);
    CHECK_THROWS_AS(hive::load_rir(path, 1, 2, "diagonal"), std::invalid_argument);
}
