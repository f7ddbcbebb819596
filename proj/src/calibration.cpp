#include "fsimlab/calibration.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fsimlab {

double MonotoneCurve::operator()(double xq) const {
    if (x.size() < 2) return y.empty() ? 0.0 : y.front();
    // Linear extension beyond the knots.
    if (xq <= x.front()) {
        const double s = (y[1] - y[0]) / (x[1] - x[0]);
        return y[0] + s * (xq - x[0]);
    }
    if (xq >= x.back()) {
        const std::size_t n = x.size();
        const double s = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
        return y[n - 1] + s * (xq - x[n - 1]);
    }
    std::size_t i = 0;
    while (i + 2 < x.size() && xq > x[i + 1]) ++i;

    // Fritsch-Carlson slopes on the local stencil.
    auto secant = [&](std::size_t k) { return (y[k + 1] - y[k]) / (x[k + 1] - x[k]); };
    auto slope = [&](std::size_t k) -> double {
        if (k == 0) return secant(0);
        if (k + 1 >= x.size()) return secant(x.size() - 2);
        const double s0 = secant(k - 1), s1 = secant(k);
        if (s0 * s1 <= 0) return 0.0;
        const double h0 = x[k] - x[k - 1], h1 = x[k + 1] - x[k];
        const double w0 = 2 * h1 + h0, w1 = h1 + 2 * h0;
        return (w0 + w1) / (w0 / s0 + w1 / s1);
    };
    const double h = x[i + 1] - x[i];
    const double t = (xq - x[i]) / h;
    const double m0 = slope(i), m1 = slope(i + 1);
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y[i] + (t3 - 2 * t2 + t) * h * m0 +
           (-2 * t3 + 3 * t2) * y[i + 1] + (t3 - t2) * h * m1;
}

namespace {

constexpr int kB01 = 0, kB10 = 1, kB11 = 2;

double wrap360(double deg) {
    double d = std::fmod(deg, 360.0);
    if (d < 0) d += 360.0;
    return d;
}

double p11_return(const PulseProgram& prog, const DeviceModel& model) {
    const Matrix5cd u = evolve_block(condition_program(prog, model), model);
    return std::norm(u(kB11, kB11));
}

double p_transfer(const PulseProgram& prog, const DeviceModel& model) {
    const Matrix5cd u = evolve_block(condition_program(prog, model), model);
    return std::norm(u(kB10, kB01));
}

double phi_ramsey_deg(const PulseProgram& prog, const DeviceModel& model) {
    const Matrix5cd u = evolve_block(condition_program(prog, model), model);
    const double phase_a = std::arg(u(kB10, kB10));
    const double phase_b = std::arg(u(kB11, kB11) * std::conj(u(kB01, kB01)));
    return rad_to_deg(wrap_angle(phase_b - phase_a));
}

double theta_from_transfer(double pop) {
    pop = std::min(std::max(pop, 0.0), 1.0);
    return rad_to_deg(std::asin(std::sqrt(pop)));
}

struct SweepResult {
    double best_x = 0.0;
    double best_val = 0.0;
    double worst_val = 0.0;
};

/// Dense sweep with parabolic refinement around the extremum.
SweepResult sweep_extremum(double lo, double hi, double step,
                           const std::function<double(double)>& f, bool maximize) {
    SweepResult r;
    std::vector<double> xs, vs;
    for (double x = lo; x <= hi + 1e-15; x += step) {
        xs.push_back(x);
        vs.push_back(f(x));
    }
    std::size_t bi = 0;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const bool better = maximize ? vs[i] > vs[bi] : vs[i] < vs[bi];
        if (better) bi = i;
    }
    r.best_x = xs[bi];
    r.best_val = vs[bi];
    r.worst_val = vs[bi];
    for (double v : vs) {
        if (maximize ? v < r.worst_val : v > r.worst_val) r.worst_val = v;
    }
    if (bi > 0 && bi + 1 < vs.size()) {
        const double ym = vs[bi - 1], y0 = vs[bi], yp = vs[bi + 1];
        const double denom = ym - 2 * y0 + yp;
        if (std::abs(denom) > 1e-15) {
            const double shift = 0.5 * (ym - yp) / denom;
            if (std::abs(shift) <= 1.0) {
                r.best_x = xs[bi] + shift * step;
                r.best_val = f(r.best_x);
            }
        }
    }
    return r;
}

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
    return buf;
}

}  // namespace

CphaseControls CphaseFamily::controls_for_phi(double phi_deg) const {
    if (points.empty()) throw std::runtime_error("cphase family empty");
    const double p = wrap360(phi_deg);
    CphaseControls c;
    c.delta_mhz = phi_to_delta(p);
    c.amp_c = std::max(phi_to_amp(p), 0.0);
    // Qubit excursions follow the detuning; interpolate from the points.
    // They are smooth in delta, so recompute from the device instead.
    return c;
}

PulseProgram CphaseFamily::program_for_phi(double phi_deg, const DeviceModel& model) const {
    CphaseControls c = controls_for_phi(phi_deg);
    PulseAmplitudes amps = detuning_amplitudes(c.delta_mhz, model);
    amps.coupler = c.amp_c;
    return make_pulse(duration_ns, pad_ns, amps, PulseShape::rectangular,
                      model.sample_rate_gsps);
}

double IswapFamily::amp_c_for_theta(double theta_deg) const {
    const double f = std::min(std::max(theta_to_fraction(theta_deg), 0.0), 1.2);
    return amp_c_0 + f * (amp_c_90 - amp_c_0);
}

double IswapFamily::amp_q0_for_fraction(double fraction) const {
    const double f = std::min(std::max(fraction, 0.0), 1.2);
    return amp_q0_0 + f * (amp_q0 - amp_q0_0);
}

PulseProgram IswapFamily::program_for_theta(double theta_deg, const DeviceModel& model) const {
    const double f = std::min(std::max(theta_to_fraction(theta_deg), 0.0), 1.2);
    PulseAmplitudes amps{amp_q0_for_fraction(f), amp_q1, amp_c_0 + f * (amp_c_90 - amp_c_0)};
    return make_pulse(duration_ns, pad_ns, amps, PulseShape::rectangular,
                      model.sample_rate_gsps);
}

CphaseFamily calibrate_cphase_family(double phi_step_deg, double gate_len_ns,
                                     const DeviceModel& model, const CalOptions& opts) {
    if (phi_step_deg <= 0) throw std::invalid_argument("calibrate_cphase: bad phi step");
    CphaseFamily fam;
    fam.duration_ns = gate_len_ns;
    fam.pad_ns = opts.pad_ns;
    const double t_flat = gate_len_ns;
    const double sweep_step = opts.sweep_lsb_step * dac_lsb(model.dac_bits);

    std::vector<double> deltas;
    for (double d = -opts.delta_span_mhz; d <= opts.delta_span_mhz + 1e-9;
         d += opts.delta_step_mhz)
        deltas.push_back(model.eta_mhz + d);

    std::vector<CphasePoint> pts(deltas.size());
    std::vector<std::uint8_t> valid(deltas.size(), 0);

    // The full diabatic swap exists while 4G^2 = (1000/t)^2 - d^2 > 0.
    auto swap_coupling = [&](double det_from_eta) -> std::optional<double> {
        const double total = 1000.0 / t_flat;
        const double disc = total * total - det_from_eta * det_from_eta;
        if (disc <= 1e-6) return std::nullopt;
        return std::sqrt(disc) / 2.0;  // coupling matrix element sqrt(2) g
    };

    parallel_for(
        deltas.size(),
        [&](std::size_t i) {
            const double delta = deltas[i];
            const double det = delta - model.eta_mhz;
            CphasePoint pt;
            pt.delta_mhz = delta;
            const PulseAmplitudes q_amps = detuning_amplitudes(delta, model);
            pt.amp_q0 = q_amps.q0;
            pt.amp_q1 = q_amps.q1;
            auto build = [&](double amp_c) {
                PulseAmplitudes a = q_amps;
                a.coupler = amp_c;
                return make_pulse(gate_len_ns, opts.pad_ns, a, PulseShape::rectangular,
                                  model.sample_rate_gsps);
            };
            const auto coupling = swap_coupling(det);
            if (coupling) {
                const double g_target = -(*coupling) / std::sqrt(2.0);
                const double guess =
                    coupler_bias_for_g(g_target, model) - model.coupler_off_bias;
                const auto s = sweep_extremum(
                    0.7 * guess, 1.3 * guess, sweep_step,
                    [&](double amp) { return 1.0 - p11_return(build(amp), model); }, false);
                pt.amp_c = s.best_x;
                pt.swap_contrast = s.worst_val - s.best_val;
                valid[i] = pt.swap_contrast > 0.3 ? 1 : 0;
                pt.extrapolated = !valid[i];
            } else {
                pt.extrapolated = true;
            }
            pts[i] = pt;
        },
        opts.threads);

    // Where the full swap no longer exists, extrapolate the amplitude toward
    // the zero-coupling bias (zero excursion at the span end) and measure the
    // phase along the way.
    auto nearest_valid = [&](std::size_t i, int dir) -> int {
        for (int j = int(i) + dir; j >= 0 && j < int(deltas.size()); j += dir)
            if (valid[j]) return j;
        return -1;
    };
    const double span_end_lo = deltas.front();
    const double span_end_hi = deltas.back();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (valid[i]) continue;
        const bool low_side = deltas[i] < model.eta_mhz;
        const int a = nearest_valid(i, low_side ? +1 : -1);
        if (a < 0) continue;
        const double edge_delta = deltas[a];
        const double span_end = low_side ? span_end_lo : span_end_hi;
        const double frac = (span_end != edge_delta)
                                ? (deltas[i] - edge_delta) / (span_end - edge_delta)
                                : 1.0;
        pts[i].amp_c = std::max(pts[a].amp_c * (1.0 - frac), 0.0);
    }

    parallel_for(
        pts.size(),
        [&](std::size_t i) {
            PulseAmplitudes a = detuning_amplitudes(pts[i].delta_mhz, model);
            a.coupler = pts[i].amp_c;
            const PulseProgram prog = make_pulse(gate_len_ns, opts.pad_ns, a,
                                                 PulseShape::rectangular, model.sample_rate_gsps);
            pts[i].phi_deg = phi_ramsey_deg(prog, model);
            pts[i].theta_residual_deg = theta_from_transfer(p_transfer(prog, model));
        },
        opts.threads);

    // Unwrap the measured phase along the detuning axis, anchored at the
    // on-resonance point where the diabatic swap gives exactly 180 degrees.
    std::size_t anchor = 0;
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (std::abs(deltas[i] - model.eta_mhz) < std::abs(deltas[anchor] - model.eta_mhz))
            anchor = i;
    std::vector<double> phi_u(pts.size());
    phi_u[anchor] = wrap360(pts[anchor].phi_deg);
    for (std::size_t i = anchor + 1; i < pts.size(); ++i)
        phi_u[i] = phi_u[i - 1] +
                   rad_to_deg(wrap_angle(deg_to_rad(pts[i].phi_deg - pts[i - 1].phi_deg)));
    for (std::size_t i = anchor; i-- > 0;)
        phi_u[i] = phi_u[i + 1] +
                   rad_to_deg(wrap_angle(deg_to_rad(pts[i].phi_deg - pts[i + 1].phi_deg)));
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i].phi_deg = phi_u[i];

    std::sort(pts.begin(), pts.end(),
              [](const CphasePoint& a, const CphasePoint& b) { return a.phi_deg < b.phi_deg; });
    // The unwrapped phase can run past a full circle when the detuning span
    // is generous; keep the single turn around the anchor and drop
    // non-monotone stragglers so the interpolation stays one-to-one.
    std::vector<CphasePoint> clean;
    for (const auto& p : pts) {
        if (p.phi_deg < -1.0 || p.phi_deg >= 361.0) continue;
        if (clean.empty() || p.phi_deg > clean.back().phi_deg + 1e-9) clean.push_back(p);
    }
    fam.points = std::move(clean);
    for (const auto& p : fam.points) {
        fam.phi_to_delta.x.push_back(p.phi_deg);
        fam.phi_to_delta.y.push_back(p.delta_mhz);
        fam.phi_to_amp.x.push_back(p.phi_deg);
        fam.phi_to_amp.y.push_back(p.amp_c);
    }
    return fam;
}

namespace {

PulseProgram with_preceding(const PulseProgram* preceding, const PulseProgram& prog) {
    if (!preceding) return prog;
    return concat_pulses(*preceding, prog, 0.0);
}

}  // namespace

IswapFamily calibrate_iswap_family(double gate_len_ns, const DeviceModel& model,
                                   const CalOptions& opts, const PulseProgram* preceding) {
    IswapFamily fam;
    fam.duration_ns = gate_len_ns;
    fam.pad_ns = opts.pad_ns;
    const double sweep_step = opts.sweep_lsb_step * dac_lsb(model.dac_bits);
    const PulseAmplitudes nominal = detuning_amplitudes(0.0, model);

    auto build = [&](double amp_q0, double amp_q1, double amp_c) {
        PulseAmplitudes a{amp_q0, amp_q1, amp_c};
        return with_preceding(preceding,
                              make_pulse(gate_len_ns, opts.pad_ns, a, PulseShape::rectangular,
                                         model.sample_rate_gsps));
    };

    // Step 1: coupler sweep for one full swap at the nominal resonance bias.
    const double g_full = -250.0 / gate_len_ns;
    const double guess = coupler_bias_for_g(g_full, model) - model.coupler_off_bias;
    double amp_q0 = nominal.q0, amp_q1 = nominal.q1;
    auto s1 = sweep_extremum(
        0.6 * guess, 1.4 * guess, sweep_step,
        [&](double c) { return p_transfer(build(amp_q0, amp_q1, c), model); }, true);

    // Step 2: one qubit's bias sweep to place the pair on resonance. The
    // window is wide enough to absorb bleed-through from a preceding gate.
    const double f_mean = 0.5 * (model.idle_f_q0_ghz + model.idle_f_q1_ghz);
    const double idle0 = freq_to_bias(model.idle_f_q0_ghz, model, QubitId::q0);
    const double b_lo = freq_to_bias(f_mean + 0.025, model, QubitId::q0) - idle0;
    const double b_hi = freq_to_bias(f_mean - 0.025, model, QubitId::q0) - idle0;
    auto s2 = sweep_extremum(
        std::min(b_lo, b_hi), std::max(b_lo, b_hi), std::abs(b_hi - b_lo) / 120.0,
        [&](double q) { return p_transfer(build(q, amp_q1, s1.best_x), model); }, true);
    amp_q0 = s2.best_x;

    // Step 3: fine coupler re-sweep with the corrected qubit bias.
    auto s3 = sweep_extremum(
        0.85 * s1.best_x, 1.15 * s1.best_x, sweep_step,
        [&](double c) { return p_transfer(build(amp_q0, amp_q1, c), model); }, true);

    fam.amp_q0 = amp_q0;
    fam.amp_q1 = amp_q1;
    fam.amp_c_90 = s3.best_x;
    fam.full_swap_population = s3.best_val;
    fam.flagged = s3.best_val < 0.99;

    // The theta = 0 endpoint: minimize the transferred population near the
    // OFF bias (exactly zero excursion in isolation; nonzero with bleed).
    // The qubit bias joins the search so the residual swap of a preceding
    // gate can be nulled regardless of its phase.
    auto s0 = sweep_extremum(
        -0.15 * s3.best_x, 0.15 * s3.best_x, sweep_step,
        [&](double c) { return p_transfer(build(amp_q0, amp_q1, c), model); }, false);
    fam.amp_c_0 = s0.best_x;
    fam.amp_q0_0 = amp_q0;
    {
        // Coarse 2D grid: the null pocket can sit several MHz away in bias
        // when a preceding pulse leaves a residual swap to cancel.
        double best = s0.best_val;
        for (int i = -8; i <= 8; ++i) {
            for (int j = -8; j <= 8; ++j) {
                const double q = amp_q0 + i * 1e-3;
                const double c = s0.best_x + j * 1.5e-3;
                const double v = p_transfer(build(q, amp_q1, c), model);
                if (v < best) {
                    best = v;
                    fam.amp_q0_0 = q;
                    fam.amp_c_0 = c;
                }
            }
        }
        for (int it = 0; it < 2; ++it) {  // local polish
            auto sq = sweep_extremum(
                fam.amp_q0_0 - 1e-3, fam.amp_q0_0 + 1e-3, 1e-4,
                [&](double q) { return p_transfer(build(q, amp_q1, fam.amp_c_0), model); },
                false);
            fam.amp_q0_0 = sq.best_x;
            auto sc = sweep_extremum(
                fam.amp_c_0 - 1.5e-3, fam.amp_c_0 + 1.5e-3, sweep_step,
                [&](double c) { return p_transfer(build(fam.amp_q0_0, amp_q1, c), model); },
                false);
            fam.amp_c_0 = sc.best_x;
        }
    }

    // Theta and conditional-phase curves along the interpolated biases.
    const int n_frac = 51;
    std::vector<double> thetas(n_frac), phis(n_frac), fracs(n_frac);
    const double phi_at_zero =
        phi_ramsey_deg(build(fam.amp_q0_0, amp_q1, fam.amp_c_0), model);
    parallel_for(
        std::size_t(n_frac),
        [&](std::size_t k) {
            const double f = double(k) / (n_frac - 1);
            const double amp = fam.amp_c_0 + f * (fam.amp_c_90 - fam.amp_c_0);
            const PulseProgram prog = build(fam.amp_q0_for_fraction(f), amp_q1, amp);
            fracs[k] = f;
            thetas[k] = theta_from_transfer(p_transfer(prog, model));
            phis[k] = rad_to_deg(
                wrap_angle(deg_to_rad(phi_ramsey_deg(prog, model) - phi_at_zero)));
        },
        opts.threads);
    for (int k = 0; k < n_frac; ++k) {
        if (!fam.theta_to_fraction.x.empty() &&
            thetas[k] <= fam.theta_to_fraction.x.back() + 1e-6)
            continue;
        fam.theta_to_fraction.x.push_back(thetas[k]);
        fam.theta_to_fraction.y.push_back(fracs[k]);
        fam.theta_to_phi_iswap.x.push_back(thetas[k]);
        fam.theta_to_phi_iswap.y.push_back(phis[k]);
    }
    return fam;
}

std::vector<std::pair<double, double>> default_fsim_grid() {
    std::vector<std::pair<double, double>> grid;
    for (int i = 0; i < 25; ++i)
        for (int j = 0; j < 21; ++j) grid.emplace_back(i * 90.0 / 24.0, j * 18.0);
    return grid;
}

GateRegistry calibrate_composite_fsim(const std::vector<std::pair<double, double>>& targets,
                                      const DeviceModel& model, const CalOptions& opts) {
    GateRegistry reg;
    reg.cphase_duration_ns = opts.cphase_duration_ns;
    reg.iswap_duration_ns = opts.iswap_duration_ns;
    reg.pad_ns = opts.pad_ns;
    const std::string stamp = opts.timestamp.empty() ? now_iso8601() : opts.timestamp;

    // Stage 1: the CPHASE registry on the requested granularity.
    const CphaseFamily cphase =
        calibrate_cphase_family(opts.phi_grid_step_deg, opts.cphase_duration_ns, model, opts);

    // Stage 2: per CPHASE entry, re-find the theta endpoints with the CPHASE
    // pulses played first.
    const int n_phi = int(std::lround(360.0 / opts.phi_grid_step_deg));
    struct Stage2 {
        double amp_q0_0, amp_q0_90, amp_q1, amp_c_0, amp_c_90;
    };
    std::vector<Stage2> stage2(n_phi);
    std::vector<std::uint8_t> measured(n_phi, 0);
    CalOptions sub = opts;
    sub.threads = 1;  // outer loop already parallel
    parallel_for(
        std::size_t(n_phi),
        [&](std::size_t k) {
            if (int(k) % opts.stage2_stride != 0) return;
            const double phi_c = double(k) * opts.phi_grid_step_deg;
            const PulseProgram pre = cphase.program_for_phi(phi_c, model);
            const IswapFamily fam =
                calibrate_iswap_family(opts.iswap_duration_ns, model, sub, &pre);
            stage2[k] = {fam.amp_q0_0, fam.amp_q0, fam.amp_q1, fam.amp_c_0, fam.amp_c_90};
            measured[k] = 1;
        },
        opts.threads);
    for (int k = 0; k < n_phi; ++k) {  // stride > 1: nearest measured entry
        if (measured[k]) continue;
        int best = -1, dist = n_phi;
        for (int j = 0; j < n_phi; ++j)
            if (measured[j]) {
                const int d = std::min(std::abs(j - k), n_phi - std::abs(j - k));
                if (d < dist) {
                    dist = d;
                    best = j;
                }
            }
        stage2[k] = stage2[best];
    }

    // Stage 3: theta interpolation curves with a 180-degree CPHASE in front.
    const PulseProgram pre180 = cphase.program_for_phi(180.0, model);
    const IswapFamily iswap180 =
        calibrate_iswap_family(opts.iswap_duration_ns, model, sub, &pre180);

    auto stage2_at = [&](double phi_c) -> const Stage2& {
        int k = int(std::lround(wrap360(phi_c) / opts.phi_grid_step_deg)) % n_phi;
        if (k < 0) k += n_phi;
        return stage2[k];
    };

    auto compose = [&](double phi_c, double amp_q0_i, double amp_q1_i, double amp_c_i) {
        const PulseProgram pre = cphase.program_for_phi(phi_c, model);
        const PulseProgram isw =
            make_pulse(opts.iswap_duration_ns, opts.pad_ns,
                       {amp_q0_i, amp_q1_i, amp_c_i}, PulseShape::rectangular,
                       model.sample_rate_gsps);
        return concat_pulses(pre, isw, 0.0);
    };

    // Per-target closed loop; sequential by nature.
    for (const auto& [theta_t, phi_t] : targets) {
        RegistryEntry e;
        e.target_theta_deg = theta_t;
        e.target_phi_deg = phi_t;
        e.timestamp = stamp;

        double theta_eff = theta_t;
        double phi_isw = iswap180.theta_to_phi_iswap(theta_t);
        double phi_c_eff = wrap360(phi_t - phi_isw);
        int adjustments = 0;
        for (;;) {
            const Stage2& s2 = stage2_at(phi_c_eff);
            const double frac =
                std::min(std::max(iswap180.theta_to_fraction(theta_eff), -0.1), 1.15);
            const double amp_c_i = s2.amp_c_0 + frac * (s2.amp_c_90 - s2.amp_c_0);
            const double amp_q0_i = s2.amp_q0_0 + frac * (s2.amp_q0_90 - s2.amp_q0_0);
            const PulseProgram prog = compose(phi_c_eff, amp_q0_i, s2.amp_q1, amp_c_i);
            const TomographyRun tom = unitary_tomography(prog, model, {});
            const double theta_m = rad_to_deg(tom.params.theta);
            const double phi_m = rad_to_deg(tom.params.phi);
            const double e_theta = theta_m - theta_t;
            const double e_phi = rad_to_deg(wrap_angle(deg_to_rad(phi_m - phi_t)));

            const bool done = std::abs(e_theta) <= 1.0 && std::abs(e_phi) <= 1.0;
            if (done || adjustments >= opts.max_adjustments) {
                e.cphase.delta_mhz = cphase.phi_to_delta(phi_c_eff);
                e.cphase.amp_c = std::max(cphase.phi_to_amp(phi_c_eff), 0.0);
                const PulseAmplitudes qa = detuning_amplitudes(e.cphase.delta_mhz, model);
                e.cphase.amp_q0 = qa.q0;
                e.cphase.amp_q1 = qa.q1;
                e.iswap_amp_q0 = amp_q0_i;
                e.iswap_amp_q1 = s2.amp_q1;
                e.iswap_amp_c = amp_c_i;
                e.iswap_fraction = frac;
                e.measured = tom.params;
                e.residual_theta_deg = e_theta;
                e.residual_phi_deg = e_phi;
                e.iterations = adjustments;
                e.converged = done;
                break;
            }
            if (std::abs(e_theta) > 1.0)
                theta_eff = std::min(std::max(theta_eff - (e_theta > 0 ? 1.0 : -1.0), -4.0), 94.0);
            if (std::abs(e_phi) > 1.0) phi_c_eff = wrap360(phi_c_eff - (e_phi > 0 ? 1.0 : -1.0));
            ++adjustments;
        }
        reg.entries.push_back(std::move(e));
    }
    return reg;
}

LookupResult registry_lookup(const GateRegistry& registry, double theta_deg, double phi_deg) {
    if (registry.entries.empty()) throw std::runtime_error("registry_lookup: empty registry");
    LookupResult r;
    double best = std::numeric_limits<double>::max();
    for (const auto& e : registry.entries) {
        const double dt = theta_deg - e.target_theta_deg;
        const double dp =
            rad_to_deg(wrap_angle(deg_to_rad(phi_deg - e.target_phi_deg)));
        const double d2 = dt * dt + dp * dp;
        if (d2 < best) {
            best = d2;
            r.entry = &e;
        }
    }
    r.off_grid = best > 1e-18;
    return r;
}

PulseProgram program_for_entry(const RegistryEntry& e, const GateRegistry& registry,
                               const DeviceModel& model) {
    const PulseProgram pre =
        make_pulse(registry.cphase_duration_ns, registry.pad_ns,
                   {e.cphase.amp_q0, e.cphase.amp_q1, e.cphase.amp_c},
                   PulseShape::rectangular, model.sample_rate_gsps);
    const PulseProgram isw =
        make_pulse(registry.iswap_duration_ns, registry.pad_ns,
                   {e.iswap_amp_q0, e.iswap_amp_q1, e.iswap_amp_c}, PulseShape::rectangular,
                   model.sample_rate_gsps);
    return concat_pulses(pre, isw, 0.0);
}

namespace {

using nlohmann::json;

json entry_to_json(const RegistryEntry& e) {
    return json{{"target_theta_deg", e.target_theta_deg},
                {"target_phi_deg", e.target_phi_deg},
                {"cphase",
                 {{"delta_mhz", e.cphase.delta_mhz},
                  {"amp_q0", e.cphase.amp_q0},
                  {"amp_q1", e.cphase.amp_q1},
                  {"amp_c", e.cphase.amp_c}}},
                {"iswap",
                 {{"amp_q0", e.iswap_amp_q0},
                  {"amp_q1", e.iswap_amp_q1},
                  {"amp_c", e.iswap_amp_c},
                  {"fraction", e.iswap_fraction}}},
                {"measured",
                 {{"theta", e.measured.theta},
                  {"phi", e.measured.phi},
                  {"delta_plus", e.measured.delta_plus},
                  {"delta_minus", e.measured.delta_minus},
                  {"delta_minus_off", e.measured.delta_minus_off}}},
                {"residual_theta_deg", e.residual_theta_deg},
                {"residual_phi_deg", e.residual_phi_deg},
                {"iterations", e.iterations},
                {"converged", e.converged},
                {"timestamp", e.timestamp}};
}

RegistryEntry entry_from_json(const json& j) {
    RegistryEntry e;
    e.target_theta_deg = j.at("target_theta_deg");
    e.target_phi_deg = j.at("target_phi_deg");
    e.cphase.delta_mhz = j.at("cphase").at("delta_mhz");
    e.cphase.amp_q0 = j.at("cphase").at("amp_q0");
    e.cphase.amp_q1 = j.at("cphase").at("amp_q1");
    e.cphase.amp_c = j.at("cphase").at("amp_c");
    e.iswap_amp_q0 = j.at("iswap").at("amp_q0");
    e.iswap_amp_q1 = j.at("iswap").at("amp_q1");
    e.iswap_amp_c = j.at("iswap").at("amp_c");
    e.iswap_fraction = j.at("iswap").at("fraction");
    e.measured.theta = j.at("measured").at("theta");
    e.measured.phi = j.at("measured").at("phi");
    e.measured.delta_plus = j.at("measured").at("delta_plus");
    e.measured.delta_minus = j.at("measured").at("delta_minus");
    e.measured.delta_minus_off = j.at("measured").at("delta_minus_off");
    e.residual_theta_deg = j.at("residual_theta_deg");
    e.residual_phi_deg = j.at("residual_phi_deg");
    e.iterations = j.at("iterations");
    e.converged = j.at("converged");
    e.timestamp = j.at("timestamp");
    return e;
}

}  // namespace

std::string GateRegistry::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["cphase_duration_ns"] = cphase_duration_ns;
    j["iswap_duration_ns"] = iswap_duration_ns;
    j["pad_ns"] = pad_ns;
    j["entries"] = json::array();
    for (const auto& e : entries) j["entries"].push_back(entry_to_json(e));
    return j.dump(2);
}

GateRegistry GateRegistry::from_json(const std::string& text) {
    const json j = json::parse(text);
    GateRegistry r;
    r.schema_version = j.at("schema_version");
    if (r.schema_version != 1)
        throw std::runtime_error("registry: unsupported schema version");
    r.cphase_duration_ns = j.at("cphase_duration_ns");
    r.iswap_duration_ns = j.at("iswap_duration_ns");
    r.pad_ns = j.at("pad_ns");
    for (const auto& je : j.at("entries")) r.entries.push_back(entry_from_json(je));
    return r;
}

void GateRegistry::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("registry save: cannot open " + path);
    f << to_json() << "\n";
}

GateRegistry GateRegistry::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("registry load: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

}  // namespace fsimlab
