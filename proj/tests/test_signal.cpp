#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pqvit/rng.hpp"
#include "pqvit/signal.hpp"

using namespace pqvit;

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

DisturbanceParams base_params(DisturbanceClass cls) {
    DisturbanceParams p;
    p.cls = cls;
    return p;
}
}  // namespace

TEST_CASE("time grid validation") {
    TimeGrid grid;
    CHECK(grid.fs == 3200.0);
    CHECK(grid.f0 == 50.0);
    CHECK(grid.n_samples == 650);
    grid.validate();

    TimeGrid bad = grid;
    bad.fs = 90.0;  // below Nyquist for 50 Hz
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("class table is a 17-entry bijection") {
    CHECK(kNumClasses == 17);
    CHECK(class_name(DisturbanceClass::Normal) == "normal");
    CHECK(class_name(DisturbanceClass::Notch) == "notch");
    CHECK(class_name(class_from_id(12)) == "sag & oscillatory transient");
    CHECK_THROWS_AS(class_from_id(17), std::out_of_range);
    CHECK_THROWS_AS(class_from_id(-1), std::out_of_range);
}

TEST_CASE("pure sine, zero phase") {
    TimeGrid grid;
    Signal s = synthesize_clean(DisturbanceClass::Normal,
                                base_params(DisturbanceClass::Normal), grid);
    REQUIRE(s.samples.size() == 650);
    CHECK(s.samples[0] == 0.0);
    for (std::size_t k = 0; k < 650; ++k)
        CHECK(s.samples[k] ==
              doctest::Approx(std::sin(kTwoPi * 50.0 * double(k) / 3200.0))
                  .epsilon(1e-12));
}

TEST_CASE("full-depth interruption annihilates the waveform") {
    TimeGrid grid;
    DisturbanceParams p = base_params(DisturbanceClass::Interruption);
    p.alpha = 1.0;
    p.t1 = 0.0;
    p.t2 = grid.duration();
    Signal s = synthesize_clean(DisturbanceClass::Interruption, p, grid);
    for (double v : s.samples) CHECK(v == 0.0);
}

TEST_CASE("harmonic sum matches per-sample oracle") {
    TimeGrid grid;
    DisturbanceParams p = base_params(DisturbanceClass::Harmonics);
    p.harmonic_amps = {0.15, 0.10, 0.05};
    Signal s = synthesize_clean(DisturbanceClass::Harmonics, p, grid);
    for (std::size_t k = 0; k < grid.n_samples; ++k) {
        const double t = double(k) / grid.fs;
        // independent direct evaluation of the four-sinusoid sum
        double expect = std::sin(kTwoPi * 50.0 * t);
        expect += 0.15 * std::sin(3.0 * kTwoPi * 50.0 * t);
        expect += 0.10 * std::sin(5.0 * kTwoPi * 50.0 * t);
        expect += 0.05 * std::sin(7.0 * kTwoPi * 50.0 * t);
        CHECK(s.samples[k] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("synthesize_clean rejects mismatched or out-of-range params") {
    TimeGrid grid;
    DisturbanceParams wrong = base_params(DisturbanceClass::Swell);
    CHECK_THROWS_AS(synthesize_clean(DisturbanceClass::Sag, wrong, grid),
                    std::invalid_argument);

    DisturbanceParams bad = base_params(DisturbanceClass::Sag);
    bad.alpha = 1.5;
    bad.t1 = 0.02;
    bad.t2 = 0.08;
    CHECK_THROWS_AS(synthesize_clean(DisturbanceClass::Sag, bad, grid),
                    std::out_of_range);

    DisturbanceParams bad_window = base_params(DisturbanceClass::Sag);
    bad_window.alpha = 0.5;
    bad_window.t1 = 0.1;
    bad_window.t2 = 0.05;
    CHECK_THROWS_AS(synthesize_clean(DisturbanceClass::Sag, bad_window, grid),
                    std::out_of_range);
}

TEST_CASE("sample_params populates only relevant fields and is deterministic") {
    TimeGrid grid;
    DisturbanceParams p0 = sample_params(DisturbanceClass::Normal, 123, grid);
    CHECK(p0.alpha == 0.0);
    CHECK(p0.beta == 0.0);
    CHECK(p0.lambda == 0.0);
    CHECK(p0.k_tr == 0.0);
    CHECK(p0.t2 == 0.0);
    CHECK(p0.phase0 >= 0.0);
    CHECK(p0.phase0 < kTwoPi);

    DisturbanceParams a = sample_params(DisturbanceClass::Sag, 42, grid);
    DisturbanceParams b = sample_params(DisturbanceClass::Sag, 42, grid);
    CHECK(a.alpha == b.alpha);
    CHECK(a.t1 == b.t1);
    CHECK(a.t2 == b.t2);
    CHECK(a.phase0 == b.phase0);
}

TEST_CASE("sag alpha is uniform over [0.1, 0.9] across 10^4 seeds") {
    TimeGrid grid;
    const int n = 10000, bins = 10;
    std::array<int, 10> hist{};
    double lo = 1e9, hi = -1e9;
    for (int seed = 0; seed < n; ++seed) {
        const double a = sample_params(DisturbanceClass::Sag, std::uint64_t(seed), grid).alpha;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
        int bin = int((a - 0.1) / 0.8 * bins);
        if (bin == bins) bin = bins - 1;
        REQUIRE(bin >= 0);
        REQUIRE(bin < bins);
        ++hist[std::size_t(bin)];
    }
    CHECK(lo >= 0.1);
    CHECK(hi <= 0.9);
    // chi-square vs uniform; critical value for 9 dof at p = 0.001
    double chi2 = 0.0;
    const double expect = double(n) / bins;
    for (int c : hist) chi2 += (c - expect) * (c - expect) / expect;
    CHECK(chi2 < 27.877);
}

TEST_CASE("awgn variance and limits") {
    TimeGrid grid;
    Signal sine = synthesize_clean(DisturbanceClass::Normal,
                                   base_params(DisturbanceClass::Normal), grid);

    SUBCASE("snr 300 dB is numerically the identity") {
        Signal out = add_awgn(sine, 300.0, 7);
        for (std::size_t k = 0; k < sine.samples.size(); ++k)
            CHECK(std::abs(out.samples[k] - sine.samples[k]) < 1e-6);
    }

    SUBCASE("all-zero signal has no defined SNR") {
        Signal zero = sine;
        for (auto& v : zero.samples) v = 0.0;
        CHECK_THROWS_AS(add_awgn(zero, 30.0, 7), std::domain_error);
    }

    SUBCASE("empirical SNR within 30 +- 0.1 dB at n = 10^6") {
        TimeGrid big;
        big.n_samples = 1000000;
        Signal s = synthesize_clean(DisturbanceClass::Normal,
                                    base_params(DisturbanceClass::Normal), big);
        Signal noisy = add_awgn(s, 30.0, 99);
        double p_sig = 0.0, p_noise = 0.0;
        for (std::size_t k = 0; k < big.n_samples; ++k) {
            p_sig += s.samples[k] * s.samples[k];
            const double d = noisy.samples[k] - s.samples[k];
            p_noise += d * d;
        }
        const double snr = 10.0 * std::log10(p_sig / p_noise);
        CHECK(snr == doctest::Approx(30.0).epsilon(0.1 / 30.0));
        // unit sine: sigma^2 = 0.5/1000
        CHECK(p_noise / double(big.n_samples) ==
              doctest::Approx(5e-4).epsilon(0.01));
    }
}

TEST_CASE("injected noise is Gaussian to first moments") {
    TimeGrid big;
    big.n_samples = 200000;
    Signal s = synthesize_clean(DisturbanceClass::Normal,
                                base_params(DisturbanceClass::Normal), big);
    Signal noisy = add_awgn(s, 30.0, 5);
    std::vector<double> r(big.n_samples);
    double mean = 0.0;
    for (std::size_t k = 0; k < big.n_samples; ++k) {
        r[k] = noisy.samples[k] - s.samples[k];
        mean += r[k];
    }
    mean /= double(big.n_samples);
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : r) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= double(big.n_samples);
    m3 /= double(big.n_samples);
    m4 /= double(big.n_samples);
    const double skew = m3 / std::pow(m2, 1.5);
    const double ex_kurt = m4 / (m2 * m2) - 3.0;
    CHECK(std::abs(skew) < 0.1);
    CHECK(std::abs(ex_kurt) < 0.2);
}

TEST_CASE("sag and swell RMS envelopes over the event window") {
    TimeGrid grid;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        for (DisturbanceClass cls : {DisturbanceClass::Sag, DisturbanceClass::Swell}) {
            DisturbanceParams p = sample_params(cls, seed, grid);
            p.phase0 = 0.0;  // align the window to whole cycles below
            // snap window to whole fundamental periods
            const double T0 = grid.period();
            p.t1 = std::ceil(p.t1 / T0) * T0;
            p.t2 = p.t1 + std::max(1.0, std::floor((p.t2 - p.t1) / T0)) * T0;
            if (p.t2 > grid.duration()) continue;
            Signal s = synthesize_clean(cls, p, grid);

            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t k = 0; k < grid.n_samples; ++k) {
                const double t = double(k) / grid.fs;
                if (t >= p.t1 && t < p.t2) {
                    sum += s.samples[k] * s.samples[k];
                    ++count;
                }
            }
            REQUIRE(count > 0);
            const double rms = std::sqrt(sum / double(count));
            const double expect = (cls == DisturbanceClass::Sag ? 1.0 - p.alpha
                                                                : 1.0 + p.beta) /
                                  std::sqrt(2.0);
            CHECK(rms == doctest::Approx(expect).epsilon(0.02));
        }
    }
}

TEST_CASE("swell composites peak inside the event window") {
    TimeGrid grid;
    const DisturbanceClass classes[] = {
        DisturbanceClass::Swell, DisturbanceClass::HarmonicsSwell,
        DisturbanceClass::FlickerSwell, DisturbanceClass::SwellTransient,
        DisturbanceClass::SwellHarmonics};
    for (DisturbanceClass cls : classes) {
        for (std::uint64_t seed = 100; seed < 140; ++seed) {
            DisturbanceParams p = sample_params(cls, seed, grid);
            Signal s = synthesize_clean(cls, p, grid);
            double in_max = 0.0, out_max = 0.0;
            for (std::size_t k = 0; k < grid.n_samples; ++k) {
                const double t = double(k) / grid.fs;
                const double a = std::abs(s.samples[k]);
                if (t >= p.t1 && t < p.t2)
                    in_max = std::max(in_max, a);
                else
                    out_max = std::max(out_max, a);
            }
            CHECK(in_max > out_max);
        }
    }
}

TEST_CASE("clean normal signal crosses zero every 32 samples") {
    TimeGrid grid;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        DisturbanceParams p = sample_params(DisturbanceClass::Normal, seed, grid);
        Signal s = synthesize_clean(DisturbanceClass::Normal, p, grid);
        std::vector<std::size_t> crossings;
        for (std::size_t k = 1; k < grid.n_samples; ++k)
            if ((s.samples[k - 1] < 0.0) != (s.samples[k] < 0.0))
                crossings.push_back(k);
        REQUIRE(crossings.size() >= 2);
        for (std::size_t i = 1; i < crossings.size(); ++i) {
            const double gap = double(crossings[i] - crossings[i - 1]);
            CHECK(std::abs(gap - 32.0) <= 1.0);
        }
    }
}

TEST_CASE("every class synthesizes finite waveforms from sampled params") {
    TimeGrid grid;
    for (int id = 0; id < kNumClasses; ++id) {
        const DisturbanceClass cls = class_from_id(id);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            DisturbanceParams p = sample_params(cls, seed, grid);
            Signal s = synthesize_clean(cls, p, grid);
            REQUIRE(s.samples.size() == grid.n_samples);
            for (double v : s.samples) CHECK(std::isfinite(v));
        }
    }
}
