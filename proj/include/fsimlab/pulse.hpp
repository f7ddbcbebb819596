#ifndef FSIMLAB_PULSE_HPP
#define FSIMLAB_PULSE_HPP

#include <string>
#include <vector>

#include "fsimlab/common.hpp"

namespace fsimlab {

/// Sampled real-valued control signal in flux units.
struct Waveform {
    std::vector<double> samples;
    double sample_rate_gsps = 1.0;

    double dt_ns() const { return 1.0 / sample_rate_gsps; }
    std::size_t size() const { return samples.size(); }
};

/// Three-exponential settling model: unit step settles as
/// s(t) = 1 + sum_i alpha_i exp(-t / tau_i).
struct SettlingModel {
    std::array<double, 3> alpha{0.0, 0.0, 0.0};  // fractional amplitudes
    std::array<double, 3> tau_ns{1.0, 1.0, 1.0};

    bool identity() const { return alpha[0] == 0 && alpha[1] == 0 && alpha[2] == 0; }
    double dc_gain() const { return 1.0 + alpha[0] + alpha[1] + alpha[2]; }
    /// Step response at time t >= 0.
    double step_response(double t_ns) const;

    /// q2 / q3 / coupler rows of the settling parameter table.
    static SettlingModel table_q2();
    static SettlingModel table_q3();
    static SettlingModel table_coupler();
};

/// Convolves a waveform with the settling impulse response, implemented as
/// three first-order recursive filters. Discretization is zero-order-hold
/// exact: step inputs reproduce s(t) at the sample times.
Waveform apply_settling(const Waveform& w, const SettlingModel& m);

/// Inverse filter: apply_settling(predistort(w)) == w sample-exactly up to
/// roundoff. Throws when the instantaneous gain 1 + sum(alpha) is zero.
Waveform predistort(const Waveform& w, const SettlingModel& m);

/// Component-wise mean of two models after sorting components by tau.
SettlingModel average_settling(const SettlingModel& m1, const SettlingModel& m2);

struct QuantizeResult {
    Waveform waveform;
    bool clipped = false;
};

/// Rounds samples to multiples of 2/2^bits (half away from zero); samples
/// outside [-1, 1] are clipped and flagged.
QuantizeResult quantize(const Waveform& w, int bits);

inline double dac_lsb(int bits) { return 2.0 / std::pow(2.0, bits); }

/// Least-squares (alpha_i, tau_i) fit to measured step-response samples.
SettlingModel fit_settling(const Waveform& step_response, const SettlingModel& initial_guess,
                           double tol = 1e-4);

/// Convolution with a normalized Gaussian kernel (truncated at 4 sigma);
/// models the finite control-line bandwidth.
Waveform gaussian_filter(const Waveform& w, double sigma_ns);

enum class PulseShape { rectangular, smoothed, cosine };

/// Three synchronized flux waveforms: two qubit channels and one coupler
/// channel. Samples are excursions from the channel idle bias (qubits at
/// their idle frequency, coupler at the OFF bias), so pads are exact zeros.
struct PulseProgram {
    Waveform q0_bias, q1_bias, coupler_bias;
    double duration_ns = 0.0;
    double pad_ns = 0.0;
    PulseShape shape = PulseShape::rectangular;
    double smoothing_rise_ns = 0.0;

    std::size_t size() const { return coupler_bias.size(); }
    double total_ns() const { return duration_ns + 2.0 * pad_ns; }
};

struct PulseAmplitudes {
    double q0 = 0.0;
    double q1 = 0.0;
    double coupler = 0.0;
};

/// Builds the three-channel program. The shape applies to the coupler
/// channel; detuning pulses stay rectangular. smoothed convolves the
/// rectangle with a normalized Gaussian of the given rise time, cosine uses
/// amp*(1-cos(2 pi t/duration))/2 over the flat-top window.
PulseProgram make_pulse(double duration_ns, double pad_ns, const PulseAmplitudes& amps,
                        PulseShape shape, double sample_rate_gsps = 1.0,
                        double smoothing_rise_ns = 3.0);

/// Concatenates two programs back to back (gap_ns of zero fill between).
PulseProgram concat_pulses(const PulseProgram& first, const PulseProgram& second,
                           double gap_ns = 0.0);

void waveform_to_csv(const Waveform& w, const std::string& path);
Waveform waveform_from_csv(const std::string& path);

}  // namespace fsimlab

#endif
