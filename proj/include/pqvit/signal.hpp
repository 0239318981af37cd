#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pqvit {

struct TimeGrid {
    double fs = 3200.0;      // sampling frequency, Hz
    double f0 = 50.0;        // fundamental frequency, Hz
    std::size_t n_samples = 650;

    double duration() const { return double(n_samples) / fs; }
    double period() const { return 1.0 / f0; }
    void validate() const;
};

// The 17 disturbance classes. Ids are the wire/label values everywhere.
enum class DisturbanceClass : int {
    Normal = 0,
    Sag = 1,
    Swell = 2,
    Interruption = 3,
    SpikeImpulse = 4,
    OscillatoryTransient = 5,
    Harmonics = 6,
    HarmonicsSag = 7,
    HarmonicsSwell = 8,
    Flicker = 9,
    FlickerSag = 10,
    FlickerSwell = 11,
    SagTransient = 12,
    SwellTransient = 13,
    SagHarmonics = 14,
    SwellHarmonics = 15,
    Notch = 16,
};

constexpr int kNumClasses = 17;

const std::string& class_name(DisturbanceClass c);
DisturbanceClass class_from_id(int id);

// Which parametric constituents a class is built from.
struct ClassTraits {
    bool sag = false;          // also covers interruption (deeper alpha)
    bool interruption = false;
    bool swell = false;
    bool harmonics = false;
    bool flicker = false;
    bool transient = false;
    bool spike = false;
    bool notch = false;
    bool windowed() const { return sag || interruption || swell || transient; }
};
ClassTraits class_traits(DisturbanceClass c);

struct DisturbanceParams {
    DisturbanceClass cls = DisturbanceClass::Normal;
    double phase0 = 0.0;                      // rad, all classes
    double alpha = 0.0;                       // sag depth, p.u.
    double beta = 0.0;                        // swell rise, p.u.
    double t1 = 0.0, t2 = 0.0;                // event window, s
    std::array<double, 3> harmonic_amps{};    // 3rd/5th/7th, p.u.
    std::array<double, 3> harmonic_phases{};  // rad
    double lambda = 0.0;                      // flicker depth, p.u.
    double f_flicker = 0.0;                   // Hz
    double k_tr = 0.0;                        // transient/spike magnitude, p.u.
    double f_tr = 0.0;                        // transient oscillation, Hz
    double tau_tr = 0.0;                      // transient decay, s
    double k_notch = 0.0;                     // notch depth, p.u.
    double notch_width = 0.0;                 // fraction of fundamental period
    double notch_phase = 0.0;                 // pulse offset, fraction of period
    std::vector<double> spike_starts;         // pulse start times, s
    double spike_width = 0.0;                 // pulse width, fraction of period
};

struct Signal {
    std::vector<double> samples;
    DisturbanceClass label = DisturbanceClass::Normal;
    DisturbanceParams params;
    std::uint64_t seed = 0;
};

// Noiseless waveform of the chosen class; purely deterministic.
Signal synthesize_clean(DisturbanceClass cls, const DisturbanceParams& params,
                        const TimeGrid& grid);

// Uniform draw of every parameter relevant to `cls` inside its documented
// range. Same (class, seed) gives identical params.
DisturbanceParams sample_params(DisturbanceClass cls, std::uint64_t seed,
                                const TimeGrid& grid);

// Zero-mean white Gaussian noise at the requested SNR relative to the
// signal's empirical mean square power.
Signal add_awgn(const Signal& signal, double snr_db, std::uint64_t seed);

}  // namespace pqvit
