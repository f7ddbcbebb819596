#include "fsimlab/device_sim.hpp"

#include <cstring>
#include <random>
#include <unordered_map>

#include <Eigen/Eigenvalues>

namespace fsimlab {

HamiltonianBlock hamiltonian_block(double g_mhz, double delta_mhz, double eta_mhz) {
    if (!std::isfinite(g_mhz) || !std::isfinite(delta_mhz) || !std::isfinite(eta_mhz))
        throw std::invalid_argument("hamiltonian_block: non-finite input");
    HamiltonianBlock b;
    b.g_mhz = g_mhz;
    b.delta_mhz = delta_mhz;
    b.eta_mhz = eta_mhz;
    const double s2g = std::sqrt(2.0) * g_mhz;
    b.h = Matrix5cd::Zero();
    b.h(0, 0) = 0.0;
    b.h(1, 1) = delta_mhz;
    b.h(2, 2) = delta_mhz;
    b.h(3, 3) = 2.0 * delta_mhz + eta_mhz;
    b.h(4, 4) = eta_mhz;
    b.h(0, 1) = b.h(1, 0) = g_mhz;
    b.h(2, 3) = b.h(3, 2) = s2g;
    b.h(2, 4) = b.h(4, 2) = s2g;
    return b;
}

Matrix9cd hamiltonian_full(double g_mhz, double delta_mhz, double eta_mhz) {
    Matrix9cd h = Matrix9cd::Zero();
    for (int n0 = 0; n0 < 3; ++n0)
        for (int n1 = 0; n1 < 3; ++n1)
            h(idx9(n0, n1), idx9(n0, n1)) =
                n0 * delta_mhz + eta_mhz * 0.5 * (n0 * (n0 - 1) + n1 * (n1 - 1));
    // g (a0+ a1 + a0 a1+) with qutrit-truncated ladders.
    for (int n0 = 0; n0 < 2; ++n0) {
        for (int n1 = 1; n1 < 3; ++n1) {
            const double elem = g_mhz * std::sqrt(double(n0 + 1)) * std::sqrt(double(n1));
            const int from = idx9(n0, n1);
            const int to = idx9(n0 + 1, n1 - 1);
            h(to, from) += elem;
            h(from, to) += elem;
        }
    }
    return h;
}

ControlTrace control_trace(const PulseProgram& program, const DeviceModel& model) {
    const std::size_t n = program.size();
    if (program.q0_bias.size() != n || program.q1_bias.size() != n)
        throw std::invalid_argument("control_trace: channel sample counts differ");
    ControlTrace tr;
    tr.dt_ns = program.coupler_bias.dt_ns();
    tr.g_mhz.resize(n);
    tr.delta_mhz.resize(n);
    tr.f_q0_ghz.resize(n);
    tr.f_q1_ghz.resize(n);
    const double idle_bias_q0 = freq_to_bias(model.idle_f_q0_ghz, model, QubitId::q0);
    const double idle_bias_q1 = freq_to_bias(model.idle_f_q1_ghz, model, QubitId::q1);
    for (std::size_t k = 0; k < n; ++k) {
        const double f0 = qubit_freq(idle_bias_q0 + program.q0_bias.samples[k], model, QubitId::q0);
        const double f1 = qubit_freq(idle_bias_q1 + program.q1_bias.samples[k], model, QubitId::q1);
        tr.f_q0_ghz[k] = f0;
        tr.f_q1_ghz[k] = f1;
        tr.delta_mhz[k] = (f0 - f1) * 1000.0;
        tr.g_mhz[k] = coupler_g(model.coupler_off_bias + program.coupler_bias.samples[k], model);
    }
    return tr;
}

PulseProgram condition_program(const PulseProgram& program, const DeviceModel& model) {
    PulseProgram out = program;
    // The line filter rings past the programmed window; extend it so the
    // tail is evolved rather than truncated.
    const std::size_t tail =
        model.line_sigma_ns > 0
            ? static_cast<std::size_t>(
                  std::ceil(4.0 * model.line_sigma_ns * program.coupler_bias.sample_rate_gsps))
            : 0;
    auto channel = [&](Waveform w, const SettlingModel& line, const SettlingModel& comp) {
        if (tail > 0) w.samples.insert(w.samples.end(), tail, 0.0);
        if (model.predistortion_enabled) w = predistort(w, comp);
        w = quantize(w, model.dac_bits).waveform;
        if (model.settling_enabled) w = apply_settling(w, line);
        if (model.line_sigma_ns > 0) w = gaussian_filter(w, model.line_sigma_ns);
        return w;
    };
    out.q0_bias = channel(program.q0_bias, model.settling_q0, model.settling_q0);
    out.q1_bias = channel(program.q1_bias, model.settling_q1, model.settling_q1);
    // The coupler line is compensated with the average of the two qubit
    // models; its true response may differ.
    out.coupler_bias = channel(program.coupler_bias, model.settling_coupler,
                               average_settling(model.settling_q0, model.settling_q1));
    out.duration_ns = program.duration_ns;
    out.pad_ns = program.pad_ns;
    return out;
}

namespace {

// exp(-i 2 pi H dt 1e-3) for Hermitian H in MHz, dt in ns.
template <typename Mat>
Mat expm_step(const Mat& h, double dt_ns) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const auto& vals = es.eigenvalues();
    const auto& vecs = es.eigenvectors();
    Mat out = Mat::Zero();
    Eigen::Matrix<complexd, Mat::RowsAtCompileTime, 1> phases;
    for (int i = 0; i < vals.size(); ++i)
        phases(i) = std::exp(-kI * (2.0 * kPi * vals(i) * dt_ns * 1e-3));
    out = vecs * phases.asDiagonal() * vecs.adjoint();
    return out;
}

struct PairKey {
    double a, b;
    bool operator==(const PairKey& o) const { return a == o.a && b == o.b; }
};

struct PairKeyHash {
    std::size_t operator()(const PairKey& k) const {
        std::uint64_t ha, hb;
        std::memcpy(&ha, &k.a, 8);
        std::memcpy(&hb, &k.b, 8);
        return std::hash<std::uint64_t>{}(ha ^ (hb * 0x9e3779b97f4a7c15ull));
    }
};

template <typename Mat, typename Builder>
Mat evolve_product(const ControlTrace& tr, const Builder& build) {
    Mat u = Mat::Identity();
    std::unordered_map<PairKey, Mat, PairKeyHash> cache;
    for (std::size_t k = 0; k < tr.g_mhz.size(); ++k) {
        const PairKey key{tr.g_mhz[k], tr.delta_mhz[k]};
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, expm_step<Mat>(build(key.a, key.b), tr.dt_ns)).first;
        u = it->second * u;
    }
    return u;
}

}  // namespace

Matrix5cd evolve_block(const PulseProgram& program, const DeviceModel& model) {
    const ControlTrace tr = control_trace(program, model);
    return evolve_product<Matrix5cd>(
        tr, [&](double g, double d) { return hamiltonian_block(g, d, model.eta_mhz).h; });
}

Matrix9cd evolve_unitary9(const PulseProgram& program, const DeviceModel& model) {
    const ControlTrace tr = control_trace(program, model);
    return evolve_product<Matrix9cd>(
        tr, [&](double g, double d) { return hamiltonian_full(g, d, model.eta_mhz); });
}

QutritDensityMatrix QutritDensityMatrix::pure(const Vector9cd& psi) {
    QutritDensityMatrix rho;
    rho.m = psi * psi.adjoint();
    return rho;
}

QutritDensityMatrix QutritDensityMatrix::computational(int n0, int n1) {
    Vector9cd psi = Vector9cd::Zero();
    psi(idx9(n0, n1)) = 1.0;
    return pure(psi);
}

bool QutritDensityMatrix::valid(double tol) const {
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(m.trace().real() - 1.0) > 1e-10 || std::abs(m.trace().imag()) > 1e-10)
        return false;
    Eigen::SelfAdjointEigenSolver<Matrix9cd> es(m);
    return es.eigenvalues().minCoeff() > -1e-10;
}

namespace {

// Per-qutrit amplitude damping over dt: |1>->|0> at rate 1/T1, |2>->|1> at
// 2/T1. Applied as Kraus ops that are diagonal or single-offdiagonal, so the
// update is done in place per index pair.
void apply_damping(Matrix9cd& rho, QubitId which, double p1, double p2) {
    const double a1 = std::sqrt(1.0 - p1);
    const double a2 = std::sqrt(1.0 - p2);
    auto level = [&](int idx) { return which == QubitId::q0 ? idx / 3 : idx % 3; };
    auto with_level = [&](int idx, int lvl) {
        return which == QubitId::q0 ? idx9(lvl, idx % 3) : idx9(idx / 3, lvl);
    };
    // K0 = diag(1, a1, a2) on the damped qutrit.
    const double k0[3] = {1.0, a1, a2};
    Matrix9cd out = Matrix9cd::Zero();
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) out(i, j) = k0[level(i)] * k0[level(j)] * rho(i, j);
    // K1 = sqrt(p1) |0><1|, K2 = sqrt(p2) |1><2|.
    for (int i = 0; i < 9; ++i) {
        for (int j = 0; j < 9; ++j) {
            if (level(i) == 1 && level(j) == 1)
                out(with_level(i, 0), with_level(j, 0)) += p1 * rho(i, j);
            if (level(i) == 2 && level(j) == 2)
                out(with_level(i, 1), with_level(j, 1)) += p2 * rho(i, j);
        }
    }
    rho = out;
}

// Gaussian-random-Z dephasing: coherence between levels n and m decays by
// exp(-(dt/Tphi) (n-m)^2). Mixture of unitaries, hence CPTP.
void apply_dephasing(Matrix9cd& rho, QubitId which, double lambda) {
    auto level = [&](int idx) { return which == QubitId::q0 ? idx / 3 : idx % 3; };
    for (int i = 0; i < 9; ++i) {
        for (int j = 0; j < 9; ++j) {
            const int d = level(i) - level(j);
            if (d != 0) rho(i, j) *= std::exp(-lambda * d * d);
        }
    }
}

void apply_step_noise(Matrix9cd& rho, const DeviceModel& model, double dt_ns, double f_q0_ghz,
                      double f_q1_ghz) {
    const double t1_q0 = t1_at_frequency(f_q0_ghz, model) * 1000.0;  // ns
    const double t1_q1 = t1_at_frequency(f_q1_ghz, model) * 1000.0;
    const double tphi = model.t_phi_us * 1000.0;
    apply_damping(rho, QubitId::q0, 1.0 - std::exp(-dt_ns / t1_q0),
                  1.0 - std::exp(-2.0 * dt_ns / t1_q0));
    apply_damping(rho, QubitId::q1, 1.0 - std::exp(-dt_ns / t1_q1),
                  1.0 - std::exp(-2.0 * dt_ns / t1_q1));
    apply_dephasing(rho, QubitId::q0, dt_ns / tphi);
    apply_dephasing(rho, QubitId::q1, dt_ns / tphi);
}

}  // namespace

QutritDensityMatrix evolve_density(const QutritDensityMatrix& rho_in, const PulseProgram& program,
                                   const DeviceModel& model, bool noise) {
    const ControlTrace tr = control_trace(program, model);
    QutritDensityMatrix rho = rho_in;
    std::unordered_map<PairKey, Matrix9cd, PairKeyHash> cache;
    for (std::size_t k = 0; k < tr.g_mhz.size(); ++k) {
        const PairKey key{tr.g_mhz[k], tr.delta_mhz[k]};
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache
                     .emplace(key, expm_step<Matrix9cd>(
                                       hamiltonian_full(key.a, key.b, model.eta_mhz), tr.dt_ns))
                     .first;
        rho.m = it->second * rho.m * it->second.adjoint();
        if (noise) apply_step_noise(rho.m, model, tr.dt_ns, tr.f_q0_ghz[k], tr.f_q1_ghz[k]);
    }
    return rho;
}

QutritDensityMatrix idle_noise(const QutritDensityMatrix& rho_in, double duration_ns,
                               const DeviceModel& model) {
    QutritDensityMatrix rho = rho_in;
    apply_step_noise(rho.m, model, duration_ns, model.idle_f_q0_ghz, model.idle_f_q1_ghz);
    return rho;
}

GateKernel GateKernel::make(const PulseProgram& conditioned_program, const DeviceModel& model,
                            bool noise) {
    GateKernel k;
    k.noise_ = noise;
    const ControlTrace tr = control_trace(conditioned_program, model);
    std::unordered_map<PairKey, Matrix9cd, PairKeyHash> cache;
    const double tphi = model.t_phi_us * 1000.0;
    for (std::size_t i = 0; i < tr.g_mhz.size(); ++i) {
        const PairKey key{tr.g_mhz[i], tr.delta_mhz[i]};
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache
                     .emplace(key, expm_step<Matrix9cd>(
                                       hamiltonian_full(key.a, key.b, model.eta_mhz), tr.dt_ns))
                     .first;
        Step s;
        s.u = it->second;
        const double t1_q0 = t1_at_frequency(tr.f_q0_ghz[i], model) * 1000.0;
        const double t1_q1 = t1_at_frequency(tr.f_q1_ghz[i], model) * 1000.0;
        s.p1_q0 = 1.0 - std::exp(-tr.dt_ns / t1_q0);
        s.p2_q0 = 1.0 - std::exp(-2.0 * tr.dt_ns / t1_q0);
        s.p1_q1 = 1.0 - std::exp(-tr.dt_ns / t1_q1);
        s.p2_q1 = 1.0 - std::exp(-2.0 * tr.dt_ns / t1_q1);
        s.lambda_phi = tr.dt_ns / tphi;
        k.steps_.push_back(std::move(s));
    }
    return k;
}

QutritDensityMatrix GateKernel::apply(const QutritDensityMatrix& rho_in) const {
    QutritDensityMatrix rho = rho_in;
    for (const Step& s : steps_) {
        rho.m = s.u * rho.m * s.u.adjoint();
        if (noise_) {
            apply_damping(rho.m, QubitId::q0, s.p1_q0, s.p2_q0);
            apply_damping(rho.m, QubitId::q1, s.p1_q1, s.p2_q1);
            apply_dephasing(rho.m, QubitId::q0, s.lambda_phi);
            apply_dephasing(rho.m, QubitId::q1, s.lambda_phi);
        }
    }
    return rho;
}

Matrix2cd single_qubit_matrix(SingleQubitGate gate, double z_angle) {
    auto axis_rot = [](double beta) {
        // pi/2 rotation about (cos b, sin b, 0).
        Matrix2cd u;
        const double c = std::cos(kPi / 4), s = std::sin(kPi / 4);
        const complexd nx = std::cos(beta), ny = std::sin(beta);
        u << c, -kI * s * (nx - kI * ny), -kI * s * (nx + kI * ny), c;
        return u;
    };
    switch (gate) {
        case SingleQubitGate::x_half: return axis_rot(0.0);
        case SingleQubitGate::y_half: return axis_rot(kPi / 2);
        case SingleQubitGate::xy_pp: return axis_rot(kPi / 4);
        case SingleQubitGate::xy_pm: return axis_rot(-kPi / 4);
        case SingleQubitGate::xy_mp: return axis_rot(3 * kPi / 4);
        case SingleQubitGate::xy_mm: return axis_rot(-3 * kPi / 4);
        case SingleQubitGate::x_full: {
            Matrix2cd u;
            u << 0, -kI, -kI, 0;
            return u;
        }
        case SingleQubitGate::z_phase: {
            Matrix2cd u = Matrix2cd::Identity();
            u(1, 1) = std::exp(kI * z_angle);
            return u;
        }
    }
    throw std::invalid_argument("single_qubit_matrix: bad gate tag");
}

namespace {

Matrix3cd embed_qutrit(const Matrix2cd& u) {
    Matrix3cd e = Matrix3cd::Identity();
    e.topLeftCorner<2, 2>() = u;
    return e;
}

Matrix9cd lift_single(const Matrix3cd& u3, QubitId which) {
    Matrix9cd u = Matrix9cd::Zero();
    for (int n0 = 0; n0 < 3; ++n0)
        for (int n1 = 0; n1 < 3; ++n1)
            for (int m0 = 0; m0 < 3; ++m0)
                for (int m1 = 0; m1 < 3; ++m1) {
                    const complexd v = (which == QubitId::q0)
                                           ? u3(n0, m0) * complexd(n1 == m1 ? 1.0 : 0.0)
                                           : u3(n1, m1) * complexd(n0 == m0 ? 1.0 : 0.0);
                    if (v != complexd(0.0)) u(idx9(n0, n1), idx9(m0, m1)) = v;
                }
    return u;
}

// Depolarizing channel on the computational levels of one qutrit, written as
// a Pauli mixture so it stays CPTP on the full space. The mixture weight is
// set so the XEB/RB decay constant equals lambda.
void apply_depolarizing(Matrix9cd& rho, QubitId which, double lambda) {
    if (lambda <= 0) return;
    const Matrix2cd x = (Matrix2cd() << 0, 1, 1, 0).finished();
    const Matrix2cd y = (Matrix2cd() << 0, -kI, kI, 0).finished();
    const Matrix2cd z = (Matrix2cd() << 1, 0, 0, -1).finished();
    Matrix9cd out = (1.0 - 0.75 * lambda) * rho;
    for (const auto& p : {x, y, z}) {
        const Matrix9cd lp = lift_single(embed_qutrit(p), which);
        out += (lambda / 4.0) * lp * rho * lp.adjoint();
    }
    rho = out;
}

}  // namespace

QutritDensityMatrix apply_single_qubit_unitary(const QutritDensityMatrix& rho_in, QubitId which,
                                               const Matrix2cd& u, const DeviceModel& model,
                                               bool with_error) {
    QutritDensityMatrix rho = rho_in;
    const Matrix9cd lifted = lift_single(embed_qutrit(u), which);
    rho.m = lifted * rho.m * lifted.adjoint();
    if (with_error) {
        // e_p = 1.5 * e_r for one qubit; the channel's decay constant is e_r.
        apply_depolarizing(rho.m, which, model.sq_pauli_error / 1.5);
    }
    return rho;
}

QutritDensityMatrix apply_single_qubit_gate(const QutritDensityMatrix& rho, QubitId which,
                                            SingleQubitGate gate, const DeviceModel& model,
                                            double z_angle, bool with_error) {
    return apply_single_qubit_unitary(rho, which, single_qubit_matrix(gate, z_angle), model,
                                      with_error);
}

complexd qubit_coherence(const QutritDensityMatrix& rho, QubitId which) {
    complexd acc = 0.0;
    for (int s = 0; s < 3; ++s) {
        const int i1 = (which == QubitId::q0) ? idx9(1, s) : idx9(s, 1);
        const int i0 = (which == QubitId::q0) ? idx9(0, s) : idx9(s, 0);
        acc += rho.m(i1, i0);
    }
    return 2.0 * acc;
}

std::array<double, 9> measurement_probabilities(const QutritDensityMatrix& rho,
                                                bool discriminate_2, const DeviceModel& model) {
    std::array<double, 9> probs{};
    for (int n0 = 0; n0 < 3; ++n0) {
        for (int n1 = 0; n1 < 3; ++n1) {
            const double p = rho.population(n0, n1);
            if (p <= 0) continue;
            for (int o0 = 0; o0 < 3; ++o0) {
                for (int o1 = 0; o1 < 3; ++o1) {
                    double q = p * model.readout_confusion_q0[n0][o0] *
                               model.readout_confusion_q1[n1][o1];
                    if (q == 0.0) continue;
                    int r0 = o0, r1 = o1;
                    if (!discriminate_2) {
                        if (r0 == 2) r0 = 1;
                        if (r1 == 2) r1 = 1;
                    }
                    probs[idx9(r0, r1)] += q;
                }
            }
        }
    }
    return probs;
}

std::array<std::uint64_t, 9> sample_measurement(const QutritDensityMatrix& rho,
                                                std::uint64_t shots, bool discriminate_2,
                                                const DeviceModel& model, std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("sample_measurement: shots must be >= 1");
    const std::array<double, 9> probs = measurement_probabilities(rho, discriminate_2, model);
    std::array<double, 9> cdf{};
    double acc = 0.0;
    for (int i = 0; i < 9; ++i) {
        acc += probs[i];
        cdf[i] = acc;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::array<std::uint64_t, 9> counts{};
    for (std::uint64_t s = 0; s < shots; ++s) {
        const double r = unit(rng) * acc;
        int i = 0;
        while (i < 8 && r > cdf[i]) ++i;
        ++counts[i];
    }
    return counts;
}

}  // namespace fsimlab
