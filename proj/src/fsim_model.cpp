#include "fsimlab/fsim_model.hpp"

namespace fsimlab {

bool FsimParams::finite() const {
    return std::isfinite(theta) && std::isfinite(phi) && std::isfinite(delta_plus) &&
           std::isfinite(delta_minus) && std::isfinite(delta_minus_off);
}

FsimParams FsimParams::normalized() const {
    FsimParams p = *this;
    p.theta = wrap_angle(p.theta);
    // theta -> -theta together with delta_minus_off -> delta_minus_off + pi
    // leaves the matrix unchanged.
    if (p.theta < 0) {
        p.theta = -p.theta;
        p.delta_minus_off += kPi;
    }
    // theta -> pi - theta with delta_plus and delta_minus_off shifted by pi.
    if (p.theta > kPi / 2) {
        p.theta = kPi - p.theta;
        p.delta_plus += kPi;
        p.delta_minus_off += kPi;
    }
    p.delta_plus = wrap_angle(p.delta_plus);
    // Shifting all three single-qubit phases by pi is a gauge move; use it to
    // place delta_plus in (-pi/2, pi/2].
    if (p.delta_plus <= -kPi / 2 || p.delta_plus > kPi / 2) {
        p.delta_plus = wrap_angle(p.delta_plus + kPi);
        p.delta_minus += kPi;
        p.delta_minus_off += kPi;
    }
    p.phi = wrap_angle(p.phi);
    p.delta_minus = wrap_angle(p.delta_minus);
    p.delta_minus_off = wrap_angle(p.delta_minus_off);
    return p;
}

TwoQubitUnitary build_fsim(const FsimParams& p) {
    if (!p.finite()) throw std::invalid_argument("build_fsim: non-finite parameters");
    const double c = std::cos(p.theta);
    const double s = std::sin(p.theta);
    const complexd e_pp = std::exp(kI * (p.delta_plus + p.delta_minus));
    const complexd e_pm = std::exp(kI * (p.delta_plus - p.delta_minus));
    const complexd e_off_m = std::exp(kI * (p.delta_plus - p.delta_minus_off));
    const complexd e_off_p = std::exp(kI * (p.delta_plus + p.delta_minus_off));
    const complexd e_11 = std::exp(kI * (2.0 * p.delta_plus + p.phi));
    TwoQubitUnitary u = TwoQubitUnitary::Zero();
    u(0, 0) = 1.0;
    u(1, 1) = e_pp * c;
    u(1, 2) = -kI * e_off_m * s;
    u(2, 1) = -kI * e_off_p * s;
    u(2, 2) = e_pm * c;
    u(3, 3) = e_11;
    return u;
}

TwoQubitUnitary build_fsim_conjugate_phase(double theta, double phi) {
    return build_fsim({theta, -phi, 0.0, 0.0, 0.0});
}

double unitary_overlap_error(const TwoQubitUnitary& target, const TwoQubitUnitary& actual) {
    constexpr double kUnitaryTol = 1e-9;
    if (!approx_unitary(target, kUnitaryTol) || !approx_unitary(actual, kUnitaryTol))
        throw std::invalid_argument("unitary_overlap_error: input is not unitary");
    const complexd tr = (target.adjoint() * actual).trace() / 4.0;
    double e = 1.0 - std::norm(tr);
    return e < 0 ? 0.0 : e;
}

double pauli_from_decay(double e_r, int n_qubits) {
    if (e_r < 0.0 || e_r > 1.0) throw std::invalid_argument("pauli_from_decay: e_r out of [0,1]");
    if (n_qubits < 1) throw std::invalid_argument("pauli_from_decay: n_qubits must be >= 1");
    const double dim = std::pow(2.0, n_qubits);
    return e_r * (1.0 + 1.0 / dim);
}

TwoQubitError two_qubit_error_from_cycle(double e_p_cycle, double e_p_q1, double e_p_q2) {
    for (double v : {e_p_cycle, e_p_q1, e_p_q2})
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument("two_qubit_error_from_cycle: error out of [0,1]");
    TwoQubitError out;
    double e = e_p_cycle - (e_p_q1 + e_p_q2);
    if (e < 0.0) {
        out.e_p = 0.0;
        out.clamped = true;
    } else {
        out.e_p = e;
    }
    return out;
}

double coherence_limit(double t_gate_ns, double t1_us) {
    if (t_gate_ns < 0.0 || t1_us <= 0.0)
        throw std::invalid_argument("coherence_limit: durations must be positive");
    return 1.5 * t_gate_ns / (3.0 * t1_us * 1000.0);
}

TomographyElements measure_tomography_elements(const TwoQubitUnitary& u, double psi10) {
    TomographyElements e;
    const complexd frame = std::exp(-kI * psi10);
    e.u11 = u(1, 1);
    e.u12 = u(1, 2) * frame;
    e.u21 = u(2, 1) * std::conj(frame);
    e.u22 = u(2, 2);
    e.u12_excited = u(3, 3) * std::conj(u(2, 1)) * frame;
    e.u22_excited = u(3, 3) * std::conj(u(1, 1));
    e.psi10 = psi10;
    return e;
}

FsimParams extract_fsim_params(const TomographyElements& elems, ExtractionInfo* info,
                               double magnitude_tol) {
    const double m11 = std::abs(elems.u11);
    const double m12 = std::abs(elems.u12);
    const double m21 = std::abs(elems.u21);
    const double m22 = std::abs(elems.u22);
    const double cap = 1.0 + magnitude_tol;
    for (double m : {m11, m12, m21, m22, std::abs(elems.u12_excited), std::abs(elems.u22_excited)})
        if (!(m <= cap))
            throw std::invalid_argument("extract_fsim_params: element magnitude out of range");

    ExtractionInfo local;
    constexpr double kTiny = 1e-6;
    FsimParams p;
    if (m11 < kTiny && m21 < kTiny) {
        // Both amplitudes of the |01> column vanished; not reachable from a
        // photon-conserving unitary, so flag and fall back to theta = pi/2
        // with phases taken from the off-diagonals alone.
        local.degenerate = true;
        local.big_swap_branch = true;
        p.theta = kPi / 2;
        const double two_dp = std::arg(-elems.u12 * elems.u21);
        p.delta_plus = wrap_angle(0.5 * two_dp);
        if (p.delta_plus <= -kPi / 2) p.delta_plus = wrap_angle(p.delta_plus + kPi);
        p.phi = wrap_angle(std::arg(elems.u12_excited * elems.u21) - two_dp);
        p.delta_minus = 0.0;
        p.delta_minus_off =
            wrap_angle(-(std::arg(-elems.u12 / kI) + elems.psi10) + p.delta_plus);
        if (info) *info = local;
        return p;
    }

    p.theta = std::atan2(m12, m11);
    local.big_swap_branch = m21 > m11;

    // Each table row recovers twice the corresponding single-qubit phase; the
    // half-angle lift is fixed by placing delta_plus in (-pi/2, pi/2] and
    // reading the remaining phases off the element arguments directly.
    const double two_dp = local.big_swap_branch ? std::arg(-elems.u12 * elems.u21)
                                                : std::arg(elems.u11 * elems.u22);
    p.delta_plus = 0.5 * two_dp;
    if (p.delta_plus <= -kPi / 2) p.delta_plus = wrap_angle(p.delta_plus + kPi);

    // The phi rows as printed return the conjugate-phase convention; the
    // swapped difference yields the phase of the e^{+i phi} |11> entry.
    p.phi = local.big_swap_branch
                ? wrap_angle(std::arg(elems.u12_excited * elems.u21) - two_dp)
                : wrap_angle(std::arg(elems.u22_excited) - std::arg(elems.u22));

    p.delta_minus = (m11 >= kTiny) ? wrap_angle(std::arg(elems.u11) - p.delta_plus) : 0.0;
    p.delta_minus_off =
        (m12 >= kTiny)
            ? wrap_angle(-(std::arg(-elems.u12 / kI) + elems.psi10) + p.delta_plus)
            : 0.0;

    if (info) *info = local;
    return p;
}

}  // namespace fsimlab
