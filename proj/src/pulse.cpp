#include "fsimlab/pulse.hpp"

#include <algorithm>
#include <fstream>

#include "fsimlab/optimize.hpp"

namespace fsimlab {

double SettlingModel::step_response(double t_ns) const {
    if (t_ns < 0) return 0.0;
    double s = 1.0;
    for (int i = 0; i < 3; ++i) s += alpha[i] * std::exp(-t_ns / tau_ns[i]);
    return s;
}

SettlingModel SettlingModel::table_q2() {
    return {{-0.0046, -0.0100, -0.0494}, {858.0, 104.0, 10.0}};
}

SettlingModel SettlingModel::table_q3() {
    return {{-0.0061, -0.0082, -0.0597}, {996.0, 94.0, 9.0}};
}

SettlingModel SettlingModel::table_coupler() {
    return average_settling(table_q2(), table_q3());
}

namespace {

struct FilterCoeffs {
    std::array<double, 3> decay;   // exp(-dt/tau)
    std::array<double, 3> charge;  // 1 - decay
};

FilterCoeffs coeffs_for(const SettlingModel& m, double dt_ns) {
    FilterCoeffs c{};
    for (int i = 0; i < 3; ++i) {
        if (m.tau_ns[i] <= 0) throw std::invalid_argument("settling: tau must be positive");
        c.decay[i] = std::exp(-dt_ns / m.tau_ns[i]);
        c.charge[i] = 1.0 - c.decay[i];
    }
    return c;
}

}  // namespace

Waveform apply_settling(const Waveform& w, const SettlingModel& m) {
    if (m.identity()) return w;
    const FilterCoeffs c = coeffs_for(m, w.dt_ns());
    Waveform out = w;
    std::array<double, 3> state{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < w.samples.size(); ++k) {
        const double u = w.samples[k];
        double y = u;
        for (int i = 0; i < 3; ++i) {
            y += m.alpha[i] * (u - state[i]);
            state[i] += c.charge[i] * (u - state[i]);
        }
        out.samples[k] = y;
    }
    return out;
}

Waveform predistort(const Waveform& w, const SettlingModel& m) {
    if (m.identity()) return w;
    // instantaneous gain seen at a step edge
    const double g0 = 1.0 + m.alpha[0] + m.alpha[1] + m.alpha[2];
    if (std::abs(g0) < 1e-12) throw std::invalid_argument("predistort: model not invertible");
    const FilterCoeffs c = coeffs_for(m, w.dt_ns());
    Waveform out = w;
    std::array<double, 3> state{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < w.samples.size(); ++k) {
        double acc = w.samples[k];
        for (int i = 0; i < 3; ++i) acc += m.alpha[i] * state[i];
        const double u = acc / g0;
        for (int i = 0; i < 3; ++i) state[i] += c.charge[i] * (u - state[i]);
        out.samples[k] = u;
    }
    return out;
}

SettlingModel average_settling(const SettlingModel& m1, const SettlingModel& m2) {
    auto sorted = [](const SettlingModel& m) {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(),
                  [&](int a, int b) { return m.tau_ns[a] > m.tau_ns[b]; });
        SettlingModel s;
        for (int i = 0; i < 3; ++i) {
            s.alpha[i] = m.alpha[idx[i]];
            s.tau_ns[i] = m.tau_ns[idx[i]];
        }
        return s;
    };
    const SettlingModel a = sorted(m1);
    const SettlingModel b = sorted(m2);
    SettlingModel avg;
    for (int i = 0; i < 3; ++i) {
        avg.alpha[i] = 0.5 * (a.alpha[i] + b.alpha[i]);
        avg.tau_ns[i] = 0.5 * (a.tau_ns[i] + b.tau_ns[i]);
    }
    return avg;
}

QuantizeResult quantize(const Waveform& w, int bits) {
    if (bits < 2) throw std::invalid_argument("quantize: bits must be >= 2");
    const double lsb = dac_lsb(bits);
    QuantizeResult r;
    r.waveform = w;
    for (auto& v : r.waveform.samples) {
        if (v > 1.0) {
            v = 1.0;
            r.clipped = true;
        } else if (v < -1.0) {
            v = -1.0;
            r.clipped = true;
        }
        const double q = std::round(std::abs(v) / lsb) * lsb;  // round-half-away-from-zero
        v = std::copysign(q, v);
    }
    return r;
}

SettlingModel fit_settling(const Waveform& step_response, const SettlingModel& initial_guess,
                           double tol) {
    const double dt = step_response.dt_ns();
    auto unpack = [](const std::vector<double>& x) {
        SettlingModel m;
        for (int i = 0; i < 3; ++i) {
            m.alpha[i] = x[i];
            m.tau_ns[i] = std::exp(x[3 + i]);  // log-space keeps tau positive
        }
        return m;
    };
    auto cost = [&](const std::vector<double>& x) {
        const SettlingModel m = unpack(x);
        double ss = 0.0;
        for (std::size_t k = 0; k < step_response.size(); ++k) {
            const double r = step_response.samples[k] - m.step_response(k * dt);
            ss += r * r;
        }
        return ss;
    };
    std::vector<double> x0;
    for (int i = 0; i < 3; ++i) x0.push_back(initial_guess.alpha[i]);
    for (int i = 0; i < 3; ++i) x0.push_back(std::log(initial_guess.tau_ns[i]));
    NelderMeadResult r = nelder_mead(cost, x0, {.f_tol = tol * tol, .max_evals = 4000,
                                                .initial_step = 0.05});
    return unpack(r.x);
}

namespace {

std::size_t sample_count(double duration_ns, double pad_ns, double rate) {
    return static_cast<std::size_t>(std::llround((duration_ns + 2.0 * pad_ns) * rate));
}

std::vector<double> rectangular_channel(double duration_ns, double pad_ns, double amp,
                                        double rate) {
    const std::size_t n = sample_count(duration_ns, pad_ns, rate);
    std::vector<double> s(n, 0.0);
    const double dt = 1.0 / rate;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (k + 0.5) * dt;  // sample represents [k, k+1) dt
        if (t > pad_ns && t < pad_ns + duration_ns) s[k] = amp;
    }
    return s;
}

std::vector<double> gaussian_smooth(const std::vector<double>& in, double sigma_ns, double rate) {
    if (sigma_ns <= 0) return in;
    const double dt = 1.0 / rate;
    const int half = std::max(1, static_cast<int>(std::ceil(4.0 * sigma_ns / dt)));
    std::vector<double> kernel(2 * half + 1);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        const double t = i * dt;
        kernel[i + half] = std::exp(-0.5 * t * t / (sigma_ns * sigma_ns));
        sum += kernel[i + half];
    }
    for (auto& k : kernel) k /= sum;
    std::vector<double> out(in.size(), 0.0);
    for (std::size_t n = 0; n < in.size(); ++n) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
            const long long j = static_cast<long long>(n) + i;
            if (j >= 0 && j < static_cast<long long>(in.size())) acc += kernel[i + half] * in[j];
        }
        out[n] = acc;
    }
    return out;
}

std::vector<double> cosine_channel(double duration_ns, double pad_ns, double amp, double rate) {
    const std::size_t n = sample_count(duration_ns, pad_ns, rate);
    std::vector<double> s(n, 0.0);
    const double dt = 1.0 / rate;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (k + 0.5) * dt;
        if (t > pad_ns && t < pad_ns + duration_ns)
            s[k] = amp * 0.5 * (1.0 - std::cos(2.0 * kPi * (t - pad_ns) / duration_ns));
    }
    return s;
}

}  // namespace

Waveform gaussian_filter(const Waveform& w, double sigma_ns) {
    if (sigma_ns <= 0) return w;
    Waveform out = w;
    out.samples = gaussian_smooth(w.samples, sigma_ns, w.sample_rate_gsps);
    return out;
}

PulseProgram make_pulse(double duration_ns, double pad_ns, const PulseAmplitudes& amps,
                        PulseShape shape, double sample_rate_gsps, double smoothing_rise_ns) {
    if (duration_ns <= 0) throw std::invalid_argument("make_pulse: duration must be positive");
    PulseProgram p;
    p.duration_ns = duration_ns;
    p.pad_ns = pad_ns;
    p.shape = shape;
    p.smoothing_rise_ns = (shape == PulseShape::smoothed) ? smoothing_rise_ns : 0.0;
    const double rate = sample_rate_gsps;
    p.q0_bias = {rectangular_channel(duration_ns, pad_ns, amps.q0, rate), rate};
    p.q1_bias = {rectangular_channel(duration_ns, pad_ns, amps.q1, rate), rate};
    switch (shape) {
        case PulseShape::rectangular:
            p.coupler_bias = {rectangular_channel(duration_ns, pad_ns, amps.coupler, rate), rate};
            break;
        case PulseShape::smoothed:
            p.coupler_bias = {
                gaussian_smooth(rectangular_channel(duration_ns, pad_ns, amps.coupler, rate),
                                smoothing_rise_ns, rate),
                rate};
            break;
        case PulseShape::cosine:
            p.coupler_bias = {cosine_channel(duration_ns, pad_ns, amps.coupler, rate), rate};
            break;
    }
    return p;
}

PulseProgram concat_pulses(const PulseProgram& first, const PulseProgram& second, double gap_ns) {
    if (first.coupler_bias.sample_rate_gsps != second.coupler_bias.sample_rate_gsps)
        throw std::invalid_argument("concat_pulses: sample rates differ");
    const double rate = first.coupler_bias.sample_rate_gsps;
    const std::size_t gap = static_cast<std::size_t>(std::llround(gap_ns * rate));
    auto join = [&](const Waveform& a, const Waveform& b) {
        Waveform w;
        w.sample_rate_gsps = rate;
        w.samples = a.samples;
        w.samples.insert(w.samples.end(), gap, 0.0);
        w.samples.insert(w.samples.end(), b.samples.begin(), b.samples.end());
        return w;
    };
    PulseProgram p;
    p.q0_bias = join(first.q0_bias, second.q0_bias);
    p.q1_bias = join(first.q1_bias, second.q1_bias);
    p.coupler_bias = join(first.coupler_bias, second.coupler_bias);
    p.duration_ns = first.total_ns() + gap_ns + second.total_ns();
    p.pad_ns = 0.0;
    p.shape = first.shape;
    return p;
}

void waveform_to_csv(const Waveform& w, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("waveform_to_csv: cannot open " + path);
    f << "time_ns,value\r\n";
    const double dt = w.dt_ns();
    f.precision(17);
    for (std::size_t k = 0; k < w.samples.size(); ++k)
        f << k * dt << "," << w.samples[k] << "\r\n";
}

Waveform waveform_from_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("waveform_from_csv: cannot open " + path);
    std::string line;
    std::getline(f, line);  // header
    Waveform w;
    double t0 = 0.0, t1 = 0.0;
    std::size_t n = 0;
    while (std::getline(f, line)) {
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        const double t = std::stod(line.substr(0, comma));
        const double v = std::stod(line.substr(comma + 1));
        if (n == 0) t0 = t;
        if (n == 1) t1 = t;
        w.samples.push_back(v);
        ++n;
    }
    if (n >= 2 && t1 > t0) w.sample_rate_gsps = 1.0 / (t1 - t0);
    return w;
}

}  // namespace fsimlab
