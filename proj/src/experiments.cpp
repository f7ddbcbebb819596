#include "fsimlab/experiments.hpp"

#include <random>

#include "fsimlab/benchmarking.hpp"
#include "fsimlab/optimize.hpp"

namespace fsimlab {

namespace {

constexpr int kB01 = 0, kB10 = 1, kB11 = 2, kB02 = 4;  // block ordering (01,10,11,20,02)

double clamp01(double v) { return v < 0 ? 0.0 : (v > 1 ? 1.0 : v); }

/// <sigma_x> + i<sigma_y> estimated from sampled readout of the two
/// quadrature circuits.
complexd sampled_coherence(const QutritDensityMatrix& rho, QubitId which, std::uint64_t shots,
                           const DeviceModel& model, std::uint64_t seed) {
    // X quadrature: rotate by -Y/2 so X -> Z, then read out.
    Matrix2cd ry;
    ry << std::cos(kPi / 4), std::sin(kPi / 4), -std::sin(kPi / 4), std::cos(kPi / 4);
    Matrix2cd rx;
    rx << std::cos(kPi / 4), -kI * std::sin(kPi / 4), -kI * std::sin(kPi / 4), std::cos(kPi / 4);
    auto z_expect = [&](const Matrix2cd& pre, std::uint64_t s) {
        QutritDensityMatrix r = apply_single_qubit_unitary(rho, which, pre, model, false);
        const auto counts = sample_measurement(r, shots, false, model, s);
        std::uint64_t n0 = 0, n1 = 0;
        for (int i = 0; i < 9; ++i) {
            const int lvl = (which == QubitId::q0) ? i / 3 : i % 3;
            if (lvl == 0)
                n0 += counts[i];
            else
                n1 += counts[i];
        }
        return double(n0 - double(n1)) / double(shots);
    };
    const double ex = z_expect(ry, seed);
    const double ey = z_expect(rx, derive_seed(seed, 0x5eed));
    return complexd(ex, ey);
}

complexd coherence_of(const QutritDensityMatrix& rho, QubitId which, std::uint64_t shots,
                      const DeviceModel& model, std::uint64_t seed) {
    if (shots == 0) return qubit_coherence(rho, which);
    return sampled_coherence(rho, which, shots, model, seed);
}

}  // namespace

PulseAmplitudes detuning_amplitudes(double delta_mhz, const DeviceModel& model) {
    const double f_mean = 0.5 * (model.idle_f_q0_ghz + model.idle_f_q1_ghz);
    const double f0 = f_mean + delta_mhz / 2000.0;
    const double f1 = f_mean - delta_mhz / 2000.0;
    const double idle0 = freq_to_bias(model.idle_f_q0_ghz, model, QubitId::q0);
    const double idle1 = freq_to_bias(model.idle_f_q1_ghz, model, QubitId::q1);
    PulseAmplitudes a;
    a.q0 = freq_to_bias(f0, model, QubitId::q0) - idle0;
    a.q1 = freq_to_bias(f1, model, QubitId::q1) - idle1;
    return a;
}

SpectroscopyResult swap_spectroscopy(const std::vector<double>& coupler_bias_grid,
                                     const std::vector<double>& duration_grid_ns,
                                     const DeviceModel& model, const ScanOptions& opts) {
    SpectroscopyResult out;
    out.population.axis1 = coupler_bias_grid;
    out.population.axis2 = duration_grid_ns;
    out.population.axis1_name = "coupler_bias";
    out.population.axis2_name = "duration_ns";
    out.population.mode = ScanMode::population;
    out.population.values.resize(coupler_bias_grid.size(), duration_grid_ns.size());
    out.g_mhz.assign(coupler_bias_grid.size(), 0.0);
    out.below_noise.assign(coupler_bias_grid.size(), 0);

    const PulseAmplitudes resonance = detuning_amplitudes(0.0, model);
    parallel_for(
        coupler_bias_grid.size(),
        [&](std::size_t i) {
            for (std::size_t j = 0; j < duration_grid_ns.size(); ++j) {
                PulseAmplitudes amps = resonance;
                amps.coupler = coupler_bias_grid[i];
                const PulseProgram p = condition_program(
                    make_pulse(duration_grid_ns[j], opts.pad_ns, amps, opts.shape,
                               model.sample_rate_gsps, opts.smoothing_rise_ns),
                    model);
                double pop;
                if (opts.shots == 0 && !opts.noise) {
                    const Matrix5cd u = evolve_block(p, model);
                    pop = std::norm(u(kB10, kB01));
                } else {
                    QutritDensityMatrix rho = QutritDensityMatrix::computational(0, 1);
                    rho = evolve_density(rho, p, model, opts.noise);
                    if (opts.shots == 0) {
                        pop = rho.population(1, 0);
                    } else {
                        const auto counts = sample_measurement(
                            rho, opts.shots, false, model,
                            derive_seed(opts.seed, i * duration_grid_ns.size() + j));
                        pop = double(counts[idx9(1, 0)] + counts[idx9(1, 1)]) / double(opts.shots);
                    }
                }
                out.population.values(i, j) = pop;
            }
        },
        opts.threads);

    // Per-bias FFT of population vs duration; swap frequency = 2 g.
    const std::size_t n = duration_grid_ns.size();
    const double dt = n >= 2 ? duration_grid_ns[1] - duration_grid_ns[0] : 1.0;
    out.fft_bin_mhz = 1000.0 / (dt * double(n)) / 2.0;  // in g units (half the swap rate bin)
    for (std::size_t i = 0; i < coupler_bias_grid.size(); ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += out.population.values(i, j) / double(n);
        double best_pow = 0.0;
        std::size_t best_k = 0;
        std::vector<double> power(n / 2 + 1, 0.0);
        for (std::size_t k = 1; k <= n / 2; ++k) {
            complexd acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                acc += (out.population.values(i, j) - mean) *
                       std::exp(-kI * (2.0 * kPi * double(k) * double(j) / double(n)));
            power[k] = std::abs(acc);
            if (power[k] > best_pow) {
                best_pow = power[k];
                best_k = k;
            }
        }
        // Oscillation amplitude implied by the peak; flag when buried.
        const double osc_amp = 2.0 * best_pow / double(n);
        if (best_k == 0 || osc_amp < 0.02) {
            out.below_noise[i] = 1;
            out.g_mhz[i] = 0.0;
            continue;
        }
        double k_ref = double(best_k);
        if (best_k > 1 && best_k < n / 2) {  // parabolic refinement
            const double ym = power[best_k - 1], y0 = power[best_k], yp = power[best_k + 1];
            const double denom = ym - 2 * y0 + yp;
            if (std::abs(denom) > 1e-12) k_ref += 0.5 * (ym - yp) / denom;
        }
        const double swap_rate_mhz = 1000.0 * k_ref / (dt * double(n));
        out.g_mhz[i] = swap_rate_mhz / 2.0;
    }
    return out;
}

ScanResult landscape_scan(ScanMode mode, const std::vector<double>& delta_grid_mhz,
                          const std::vector<double>& coupler_grid, double duration_ns,
                          const DeviceModel& model, const ScanOptions& opts) {
    if (duration_ns <= 0) throw std::invalid_argument("landscape_scan: duration must be positive");
    ScanResult r;
    r.axis1 = delta_grid_mhz;
    r.axis2 = coupler_grid;
    r.axis1_name = "delta_mhz";
    r.axis2_name = "coupler_bias";
    r.mode = mode;
    r.values.resize(delta_grid_mhz.size(), coupler_grid.size());

    parallel_for(
        delta_grid_mhz.size(),
        [&](std::size_t i) {
            PulseAmplitudes amps = detuning_amplitudes(delta_grid_mhz[i], model);
            for (std::size_t j = 0; j < coupler_grid.size(); ++j) {
                amps.coupler = coupler_grid[j];
                const PulseProgram p = condition_program(
                    make_pulse(duration_ns, opts.pad_ns, amps, opts.shape,
                               model.sample_rate_gsps, opts.smoothing_rise_ns),
                    model);
                const std::uint64_t seed = derive_seed(opts.seed, i * coupler_grid.size() + j);
                r.values(i, j) = [&]() -> double {
                    switch (mode) {
                        case ScanMode::leakage:
                        case ScanMode::population: {
                            if (opts.shots == 0 && !opts.noise) {
                                const Matrix5cd u = evolve_block(p, model);
                                if (opts.leakage_proxy)
                                    // Partner (q0) reads |0> when the pair leaked to |02>.
                                    return std::norm(u(kB02, kB11)) + std::norm(u(kB01, kB11));
                                return std::norm(u(kB02, kB11));
                            }
                            QutritDensityMatrix rho = QutritDensityMatrix::computational(1, 1);
                            rho = evolve_density(rho, p, model, opts.noise);
                            if (opts.shots == 0) return rho.population(0, 2);
                            const auto counts =
                                sample_measurement(rho, opts.shots, true, model, seed);
                            if (opts.leakage_proxy) {
                                std::uint64_t q0_ground = 0;
                                for (int n1 = 0; n1 < 3; ++n1) q0_ground += counts[idx9(0, n1)];
                                return double(q0_ground) / double(opts.shots);
                            }
                            return double(counts[idx9(0, 2)]) / double(opts.shots);
                        }
                        case ScanMode::theta: {
                            double pop;
                            if (opts.shots == 0 && !opts.noise) {
                                const Matrix5cd u = evolve_block(p, model);
                                pop = std::norm(u(kB10, kB01));
                            } else {
                                QutritDensityMatrix rho = QutritDensityMatrix::computational(0, 1);
                                rho = evolve_density(rho, p, model, opts.noise);
                                if (opts.shots == 0) {
                                    pop = rho.population(1, 0);
                                } else {
                                    const auto counts =
                                        sample_measurement(rho, opts.shots, false, model, seed);
                                    pop = double(counts[idx9(1, 0)] + counts[idx9(1, 1)]) /
                                          double(opts.shots);
                                }
                            }
                            return rad_to_deg(std::asin(std::sqrt(clamp01(pop))));
                        }
                        case ScanMode::phi: {
                            if (opts.shots == 0 && !opts.noise) {
                                const Matrix5cd u = evolve_block(p, model);
                                const double phase_a = std::arg(u(kB10, kB10));
                                const double phase_b =
                                    std::arg(u(kB11, kB11) * std::conj(u(kB01, kB01)));
                                return rad_to_deg(wrap_angle(phase_b - phase_a));
                            }
                            // Branch A: X/2 on q0 only; branch B: q1 prepared in |1>.
                            auto branch = [&](bool excite_q1, std::uint64_t s) {
                                QutritDensityMatrix rho = QutritDensityMatrix::computational(0, 0);
                                if (excite_q1)
                                    rho = apply_single_qubit_gate(rho, QubitId::q1,
                                                                  SingleQubitGate::x_full, model,
                                                                  0.0, opts.noise);
                                rho = apply_single_qubit_gate(rho, QubitId::q0,
                                                              SingleQubitGate::x_half, model, 0.0,
                                                              opts.noise);
                                rho = evolve_density(rho, p, model, opts.noise);
                                const complexd c =
                                    coherence_of(rho, QubitId::q0, opts.shots, model, s);
                                return std::arg(kI * c);
                            };
                            const double pa = branch(false, seed);
                            const double pb = branch(true, derive_seed(seed, 0xb));
                            return rad_to_deg(wrap_angle(pb - pa));
                        }
                    }
                    return 0.0;
                }();
            }
        },
        opts.threads);
    return r;
}

TomographyRun unitary_tomography(const PulseProgram& program, const DeviceModel& model,
                                 const TomographyOptions& opts) {
    const PulseProgram p = condition_program(program, model);
    const double t_total_ns = double(p.size()) * p.coupler_bias.dt_ns();
    // Inter-qubit frame phase over the gate window; the off-diagonal elements
    // are reported in per-qubit frames and extraction removes it.
    const double psi10 =
        2.0 * kPi * (model.idle_f_q1_ghz - model.idle_f_q0_ghz) * t_total_ns;

    TomographyRun run;
    run.elements.psi10 = psi10;

    const bool fast = (opts.shots == 0 && !opts.noise);
    Matrix9cd u9;
    if (fast) u9 = evolve_unitary9(p, model);

    // One circuit per element: prepare, evolve, read one qubit's coherence.
    // prep codes: 0 = X/2 on q1; 1 = X/2 on q0; 2 = X on q1 then X/2 on q0.
    struct Circuit {
        int prep;
        QubitId measure;
        complexd* slot;
    };
    std::array<Circuit, 6> circuits{{{0, QubitId::q1, &run.elements.u11},
                                     {1, QubitId::q1, &run.elements.u12},
                                     {0, QubitId::q0, &run.elements.u21},
                                     {1, QubitId::q0, &run.elements.u22},
                                     {2, QubitId::q1, &run.elements.u12_excited},
                                     {2, QubitId::q0, &run.elements.u22_excited}}};

    if (fast) {
        // The noiseless circuits reduce to matrix elements of the evolved
        // unitary on the computational subspace.
        Matrix4cd u4;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) u4(r, c) = u9(kComputationalIdx[r], kComputationalIdx[c]);
        run.elements.u11 = u4(1, 1);
        run.elements.u12 = u4(1, 2);
        run.elements.u21 = u4(2, 1);
        run.elements.u22 = u4(2, 2);
        run.elements.u12_excited = u4(3, 3) * std::conj(u4(2, 1));
        run.elements.u22_excited = u4(3, 3) * std::conj(u4(1, 1));
    } else {
        int ci = 0;
        for (auto& c : circuits) {
            QutritDensityMatrix rho = QutritDensityMatrix::computational(0, 0);
            if (c.prep == 0)
                rho = apply_single_qubit_gate(rho, QubitId::q1, SingleQubitGate::x_half, model,
                                              0.0, opts.noise);
            if (c.prep == 1)
                rho = apply_single_qubit_gate(rho, QubitId::q0, SingleQubitGate::x_half, model,
                                              0.0, opts.noise);
            if (c.prep == 2) {
                rho = apply_single_qubit_gate(rho, QubitId::q1, SingleQubitGate::x_full, model,
                                              0.0, opts.noise);
                rho = apply_single_qubit_gate(rho, QubitId::q0, SingleQubitGate::x_half, model,
                                              0.0, opts.noise);
            }
            rho = evolve_density(rho, p, model, opts.noise);
            const complexd coh =
                coherence_of(rho, c.measure, opts.shots, model, derive_seed(opts.seed, ci));
            *c.slot = kI * coh;
            ++ci;
        }
    }

    // Off-diagonals are referenced to their own qubit's frame.
    const complexd frame = std::exp(-kI * psi10);
    run.elements.u12 *= frame;
    run.elements.u21 *= std::conj(frame);
    run.elements.u12_excited *= frame;

    // Consistency of magnitudes with a photon-conserving unitary.
    const double c_pair = std::abs(std::abs(run.elements.u11) - std::abs(run.elements.u22));
    const double s_pair = std::abs(std::abs(run.elements.u12) - std::abs(run.elements.u21));
    const double col = std::abs(std::norm(run.elements.u11) + std::norm(run.elements.u21) - 1.0);
    if (c_pair > opts.magnitude_tol || s_pair > opts.magnitude_tol || col > 3 * opts.magnitude_tol)
        run.magnitudes_flagged = true;

    run.params = extract_fsim_params(run.elements, &run.info, opts.magnitude_tol);
    return run;
}

LeakageResult leakage_per_cycle(const PulseProgram& gate, const std::vector<int>& depths,
                                const DeviceModel& model, const LeakageOptions& opts) {
    LeakageResult out;
    const GateKernel kernel =
        GateKernel::make(condition_program(gate, model), model, opts.noise);
    std::vector<int> sorted = depths;
    std::sort(sorted.begin(), sorted.end());
    const int max_depth = sorted.back();

    std::vector<std::vector<double>> p2_per_circuit(opts.n_circuits);
    parallel_for(std::size_t(opts.n_circuits), [&](std::size_t c) {
        std::mt19937_64 rng(derive_seed(opts.seed, c));
        std::uniform_int_distribution<int> pick(0, 5);
        QutritDensityMatrix rho = QutritDensityMatrix::computational(0, 0);
        std::vector<double> trace;
        std::size_t next = 0;
        for (int m = 1; m <= max_depth; ++m) {
            rho = apply_single_qubit_gate(rho, QubitId::q0, kXebGateSet[pick(rng)], model, 0.0,
                                          opts.noise);
            rho = apply_single_qubit_gate(rho, QubitId::q1, kXebGateSet[pick(rng)], model, 0.0,
                                          opts.noise);
            rho = kernel.apply(rho);
            if (next < sorted.size() && m == sorted[next]) {
                double pop2;
                if (opts.shots == 0) {
                    pop2 = 0.0;
                    for (int n0 = 0; n0 < 3; ++n0)
                        for (int n1 = 0; n1 < 3; ++n1)
                            if (n0 == 2 || n1 == 2) pop2 += rho.population(n0, n1);
                } else {
                    const auto counts = sample_measurement(rho, opts.shots, true, model,
                                                           derive_seed(opts.seed, 1000 + c * 97 + m));
                    std::uint64_t n2 = 0;
                    for (int i = 0; i < 9; ++i)
                        if (i / 3 == 2 || i % 3 == 2) n2 += counts[i];
                    pop2 = double(n2) / double(opts.shots);
                }
                trace.push_back(pop2);
                ++next;
            }
        }
        p2_per_circuit[c] = trace;
    });

    out.depths.assign(sorted.begin(), sorted.end());
    out.p2.assign(sorted.size(), 0.0);
    for (const auto& tr : p2_per_circuit)
        for (std::size_t k = 0; k < tr.size(); ++k) out.p2[k] += tr[k] / opts.n_circuits;

    // Fit p2(m) = b + (r/lambda)(1 - exp(-lambda m)): r is the per-cycle
    // injection rate (the initial slope) and the parameterization stays
    // smooth in the lambda -> 0 (linear-growth) limit.
    auto shape = [](double r, double lam, double b, double mdepth) {
        if (lam < 1e-9) return b + r * mdepth;
        return b + r / lam * (1.0 - std::exp(-lam * mdepth));
    };
    auto cost = [&](const std::vector<double>& x) {
        double ss = 0.0;
        for (std::size_t k = 0; k < out.depths.size(); ++k) {
            const double f = shape(x[0], std::exp(x[1]), x[2], out.depths[k]);
            ss += (f - out.p2[k]) * (f - out.p2[k]);
        }
        return ss;
    };
    double slope0 = out.p2.front() / std::max(1.0, out.depths.front());
    if (slope0 <= 0) slope0 = 1e-9;
    NelderMeadResult fit =
        nelder_mead(cost, {slope0, std::log(0.05), 0.0},
                    {.f_tol = 1e-20, .max_evals = 4000, .initial_step = 0.3});
    out.rate_per_cycle = fit.x[0];
    const double lam = std::exp(fit.x[1]);
    out.saturation = fit.x[2] + fit.x[0] / std::max(lam, 1e-9);
    // Non-monotone data shows up as a negative rate or a residual comparable
    // to the signal itself.
    const double scale = std::max(out.p2.back(), 1e-12);
    if (out.rate_per_cycle < -1e-12 || std::sqrt(fit.f / out.depths.size()) > 0.5 * scale)
        out.fit_failed = true;
    return out;
}

}  // namespace fsimlab
