#ifndef FSIMLAB_FSIM_MODEL_HPP
#define FSIMLAB_FSIM_MODEL_HPP

#include "fsimlab/common.hpp"

namespace fsimlab {

/// The five angles of an excitation-preserving two-qubit unitary: the swap
/// angle theta, the |11> conditional phase phi, and three single-qubit phases.
/// All angles are radians and stored unconstrained; normalized() maps onto the
/// canonical gauge (theta in [0, pi/2], phi in (-pi, pi], delta_plus in
/// (-pi/2, pi/2]) using the discrete symmetries of the matrix.
struct FsimParams {
    double theta = 0.0;
    double phi = 0.0;
    double delta_plus = 0.0;
    double delta_minus = 0.0;
    double delta_minus_off = 0.0;

    FsimParams normalized() const;
    bool finite() const;
};

/// 4x4 unitary in the |00>,|01>,|10>,|11> basis. First digit is qubit A,
/// second is qubit B.
using TwoQubitUnitary = Matrix4cd;

/// Complex matrix elements measured by the six depth-1 tomography circuits,
/// in the [|01>,|10>] subspace: u11,u22 diagonal, u12,u21 swap elements, plus
/// the two spectator-excited repeats used to reach the |11> phase.
/// u12_excited is the circuit that re-measures u12 with qubit B prepared in
/// |1> (the row labels swap between u12/u21 across the paper's tables; the
/// initial-state/measured-qubit columns are what this struct follows).
/// psi10 is the inter-qubit frame phase accumulated over the gate duration,
/// an input to extraction rather than a fitted quantity.
struct TomographyElements {
    complexd u11, u12, u21, u22;
    complexd u12_excited, u22_excited;
    double psi10 = 0.0;
};

struct ErrorRates {
    double e_r = 0.0;  // decay constant per cycle
    double e_p = 0.0;  // Pauli error, e_r * (1 + 1/2^n)
    int n_qubits = 1;
};

/// Builds the full five-parameter fSim matrix. The |11> entry carries
/// e^{i(2*delta_plus + phi)}; with all single-qubit phases zero the |11>
/// entry is e^{+i phi}.
TwoQubitUnitary build_fsim(const FsimParams& p);

/// Two-angle constructor matching the sign convention where the |11> entry
/// is e^{-i phi} (the convention used when quoting CZ = fSim(0, 180deg)).
TwoQubitUnitary build_fsim_conjugate_phase(double theta, double phi);

/// Pauli error between two unitaries: 1 - |Tr(target^dag actual)/4|^2.
/// Symmetric in its arguments and invariant under global phase.
/// Throws std::invalid_argument when either input fails a 1e-9 unitarity
/// check.
double unitary_overlap_error(const TwoQubitUnitary& target, const TwoQubitUnitary& actual);

/// e_p = e_r * (1 + 1/2^n): factor 1.5 for n=1, 1.25 for n=2.
double pauli_from_decay(double e_r, int n_qubits);

struct TwoQubitError {
    double e_p = 0.0;
    bool clamped = false;  // set when the subtraction went negative
};

/// Two-qubit Pauli error from a cycle error by subtracting the two
/// single-qubit gate errors; clamped at zero.
TwoQubitError two_qubit_error_from_cycle(double e_p_cycle, double e_p_q1, double e_p_q2);

/// Incoherent error floor 1.5 * t_gate / (3 T1).
double coherence_limit(double t_gate_ns, double t1_us);

struct ExtractionInfo {
    bool degenerate = false;    // both |u11| and |u21| vanished
    bool big_swap_branch = false;  // |u21| > |u11| rows were used
};

/// Recovers the five fSim parameters from measured tomography elements.
/// Implements the per-row conversion table including the |u21| vs |u11|
/// branches; the returned parameters are in the canonical gauge.
/// The shot-noise tolerance bounds acceptable element magnitudes
/// (|u| <= 1 + tol); violations throw std::invalid_argument.
FsimParams extract_fsim_params(const TomographyElements& elems, ExtractionInfo* info = nullptr,
                               double magnitude_tol = 0.05);

/// Closed-form result of running the six tomography circuits on a known
/// matrix: {u11, u12 e^{-i psi10}, u21 e^{+i psi10}, u22,
/// u33 u21^* e^{-i psi10}, u33 u11^*}. The off-diagonal frame factors model
/// each element being read out in its own qubit's rotating frame; products
/// used by extraction are frame-free and the psi10 row correction undoes the
/// rest.
TomographyElements measure_tomography_elements(const TwoQubitUnitary& u, double psi10 = 0.0);

}  // namespace fsimlab

#endif
