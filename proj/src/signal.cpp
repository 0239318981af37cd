#include "pqvit/signal.hpp"

#include <cmath>
#include <stdexcept>

#include "pqvit/rng.hpp"

namespace pqvit {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Parameter ranges used by sample_params and validated in synthesize_clean.
struct Range {
    double lo, hi;
    bool contains(double v) const { return v >= lo && v <= hi; }
};
constexpr Range kSagAlpha{0.1, 0.9};
constexpr Range kInterruptionAlpha{0.9, 1.0};
constexpr Range kSwellBeta{0.1, 0.8};
// In flicker composites the swell must outgrow the +-lambda flicker
// modulation for the event window to dominate: (1+beta)(1-lambda) > 1+lambda
// requires beta > 2*lambda/(1-lambda) ~ 0.22 at lambda = 0.1.
constexpr Range kSwellBetaFlicker{0.25, 0.8};
constexpr Range kHarmonicAmp{0.05, 0.15};
constexpr Range kFlickerLambda{0.05, 0.1};
constexpr Range kFlickerFreq{8.0, 25.0};
constexpr Range kTransientMag{0.1, 0.8};
constexpr Range kTransientTau{0.008, 0.040};
constexpr Range kTransientFreq{300.0, 900.0};
constexpr Range kSpikeMag{0.2, 0.8};
constexpr Range kPulseWidth{0.01, 0.05};  // fraction of fundamental period
constexpr Range kNotchDepth{0.1, 0.4};
constexpr Range kEventPeriods{1.0, 9.0};
}  // namespace

void TimeGrid::validate() const {
    if (!(fs > 2.0 * f0))
        throw std::invalid_argument("TimeGrid: fs must exceed 2*f0 (Nyquist)");
    if (n_samples < 1) throw std::invalid_argument("TimeGrid: n_samples must be >= 1");
}

const std::string& class_name(DisturbanceClass c) {
    static const std::array<std::string, kNumClasses> names = {
        "normal",
        "sag",
        "swell",
        "interruption",
        "transients/spike/impulse",
        "oscillatory transient",
        "harmonics",
        "harmonics & sag",
        "harmonics & swell",
        "flicker",
        "flicker & sag",
        "flicker & swell",
        "sag & oscillatory transient",
        "swell & oscillatory transient",
        "sag & harmonics",
        "swell & harmonics",
        "notch",
    };
    return names[static_cast<std::size_t>(c)];
}

DisturbanceClass class_from_id(int id) {
    if (id < 0 || id >= kNumClasses)
        throw std::out_of_range("class id must be in [0, 16]");
    return static_cast<DisturbanceClass>(id);
}

ClassTraits class_traits(DisturbanceClass c) {
    ClassTraits t;
    switch (c) {
        case DisturbanceClass::Normal: break;
        case DisturbanceClass::Sag: t.sag = true; break;
        case DisturbanceClass::Swell: t.swell = true; break;
        case DisturbanceClass::Interruption: t.sag = t.interruption = true; break;
        case DisturbanceClass::SpikeImpulse: t.spike = true; break;
        case DisturbanceClass::OscillatoryTransient: t.transient = true; break;
        case DisturbanceClass::Harmonics: t.harmonics = true; break;
        case DisturbanceClass::HarmonicsSag: t.harmonics = t.sag = true; break;
        case DisturbanceClass::HarmonicsSwell: t.harmonics = t.swell = true; break;
        case DisturbanceClass::Flicker: t.flicker = true; break;
        case DisturbanceClass::FlickerSag: t.flicker = t.sag = true; break;
        case DisturbanceClass::FlickerSwell: t.flicker = t.swell = true; break;
        case DisturbanceClass::SagTransient: t.sag = t.transient = true; break;
        case DisturbanceClass::SwellTransient: t.swell = t.transient = true; break;
        case DisturbanceClass::SagHarmonics: t.sag = t.harmonics = true; break;
        case DisturbanceClass::SwellHarmonics: t.swell = t.harmonics = true; break;
        case DisturbanceClass::Notch: t.notch = true; break;
    }
    return t;
}

namespace {

void validate_params(DisturbanceClass cls, const DisturbanceParams& p,
                     const TimeGrid& grid) {
    if (p.cls != cls)
        throw std::invalid_argument("params were sampled for class " +
                                    std::to_string(int(p.cls)) + ", not class " +
                                    std::to_string(int(cls)));
    const ClassTraits t = class_traits(cls);
    if (t.windowed()) {
        if (!(p.t1 >= 0.0 && p.t1 < p.t2 && p.t2 <= grid.duration() + 1e-12))
            throw std::out_of_range("event window must satisfy 0 <= t1 < t2 <= duration");
    }
    if (t.sag && !(p.alpha >= 0.0 && p.alpha <= 1.0))
        throw std::out_of_range("sag depth alpha must be in [0, 1]");
    if (t.swell && !(p.beta > 0.0))
        throw std::out_of_range("swell rise beta must be positive");
    if (t.flicker && !(p.lambda > 0.0 && p.f_flicker > 0.0))
        throw std::out_of_range("flicker requires positive lambda and frequency");
    if (t.transient && !(p.k_tr > 0.0 && p.f_tr > 0.0 && p.tau_tr > 0.0))
        throw std::out_of_range("transient requires positive magnitude/frequency/decay");
    if (t.spike && (p.spike_starts.empty() || !(p.k_tr > 0.0) || !(p.spike_width > 0.0)))
        throw std::out_of_range("spike requires pulses, magnitude and width");
    if (t.notch && !(p.k_notch > 0.0 && p.notch_width > 0.0))
        throw std::out_of_range("notch requires positive depth and width");
}

}  // namespace

Signal synthesize_clean(DisturbanceClass cls, const DisturbanceParams& params,
                        const TimeGrid& grid) {
    grid.validate();
    validate_params(cls, params, grid);
    const ClassTraits tr = class_traits(cls);
    const double w0 = kTwoPi * grid.f0;
    const double T0 = grid.period();

    Signal out;
    out.label = cls;
    out.params = params;
    out.samples.resize(grid.n_samples);

    for (std::size_t k = 0; k < grid.n_samples; ++k) {
        const double t = double(k) / grid.fs;
        const bool in_window = (t >= params.t1 && t < params.t2);

        double env = 1.0;
        if (tr.sag && in_window) env *= 1.0 - params.alpha;
        if (tr.swell && in_window) env *= 1.0 + params.beta;
        if (tr.flicker) env *= 1.0 + params.lambda * std::sin(kTwoPi * params.f_flicker * t);

        const double fund = std::sin(w0 * t + params.phase0);
        double v = env * fund;

        if (tr.harmonics) {
            static const int orders[3] = {3, 5, 7};
            for (int h = 0; h < 3; ++h)
                v += params.harmonic_amps[h] *
                     std::sin(orders[h] * w0 * t + params.harmonic_phases[h]);
        }
        if (tr.transient && in_window) {
            const double dt = t - params.t1;
            v += params.k_tr * std::exp(-dt / params.tau_tr) *
                 std::sin(kTwoPi * params.f_tr * dt);
        }
        if (tr.spike) {
            const double width = params.spike_width * T0;
            for (double start : params.spike_starts)
                if (t >= start && t < start + width) {
                    v += params.k_tr * sgn(fund);
                    break;
                }
        }
        if (tr.notch) {
            // One pulse per fundamental cycle at a fixed phase offset.
            const double phase_time =
                std::fmod(t + T0 - params.notch_phase * T0, T0);
            if (phase_time < params.notch_width * T0) v -= params.k_notch * sgn(fund);
        }
        out.samples[k] = v;
    }
    return out;
}

DisturbanceParams sample_params(DisturbanceClass cls, std::uint64_t seed,
                                const TimeGrid& grid) {
    Rng rng(seed);
    const ClassTraits tr = class_traits(cls);
    const double T0 = grid.period();

    DisturbanceParams p;
    p.cls = cls;
    p.phase0 = rng.uniform(0.0, kTwoPi);

    if (tr.windowed()) {
        const double dur =
            rng.uniform(kEventPeriods.lo, kEventPeriods.hi) * T0;
        p.t1 = rng.uniform(0.0, grid.duration() - dur);
        p.t2 = p.t1 + dur;
    }
    if (tr.sag) {
        const Range& r = tr.interruption ? kInterruptionAlpha : kSagAlpha;
        p.alpha = rng.uniform(r.lo, r.hi);
    }
    if (tr.swell) {
        const Range& r = tr.flicker ? kSwellBetaFlicker : kSwellBeta;
        p.beta = rng.uniform(r.lo, r.hi);
    }
    if (tr.harmonics)
        for (int h = 0; h < 3; ++h) {
            p.harmonic_amps[h] = rng.uniform(kHarmonicAmp.lo, kHarmonicAmp.hi);
            p.harmonic_phases[h] = rng.uniform(0.0, kTwoPi);
        }
    if (tr.flicker) {
        p.lambda = rng.uniform(kFlickerLambda.lo, kFlickerLambda.hi);
        p.f_flicker = rng.uniform(kFlickerFreq.lo, kFlickerFreq.hi);
    }
    if (tr.transient) {
        p.k_tr = rng.uniform(kTransientMag.lo, kTransientMag.hi);
        p.f_tr = rng.uniform(kTransientFreq.lo, kTransientFreq.hi);
        p.tau_tr = rng.uniform(kTransientTau.lo, kTransientTau.hi);
    }
    if (tr.spike) {
        p.k_tr = rng.uniform(kSpikeMag.lo, kSpikeMag.hi);
        p.spike_width = rng.uniform(kPulseWidth.lo, kPulseWidth.hi);
        const std::size_t n_pulses = 1 + rng.uniform_int(3);
        for (std::size_t i = 0; i < n_pulses; ++i)
            p.spike_starts.push_back(
                rng.uniform(0.0, grid.duration() - p.spike_width * T0));
    }
    if (tr.notch) {
        p.k_notch = rng.uniform(kNotchDepth.lo, kNotchDepth.hi);
        p.notch_width = rng.uniform(kPulseWidth.lo, kPulseWidth.hi);
        p.notch_phase = rng.uniform();
    }
    return p;
}

Signal add_awgn(const Signal& signal, double snr_db, std::uint64_t seed) {
    if (signal.samples.empty())
        throw std::invalid_argument("add_awgn: empty signal");
    if (!std::isfinite(snr_db))
        throw std::invalid_argument("add_awgn: snr_db must be finite");

    double power = 0.0;
    for (double v : signal.samples) power += v * v;
    power /= double(signal.samples.size());
    if (power == 0.0)
        throw std::domain_error("add_awgn: all-zero signal has no defined SNR");

    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    Rng rng(seed);
    Signal out = signal;
    out.seed = seed;
    for (double& v : out.samples) v += sigma * rng.normal();
    return out;
}

}  // namespace pqvit
