#ifndef FSIMLAB_BENCHMARKING_HPP
#define FSIMLAB_BENCHMARKING_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fsimlab/device_sim.hpp"

namespace fsimlab {

/// One random benchmarking sequence: per cycle, one gate from the six-gate
/// set on each qubit, followed by the interleaved two-qubit gate.
struct XebCircuit {
    int depth = 1;
    std::vector<std::array<SingleQubitGate, 2>> gates;  // [cycle][qubit]
    std::string gate_ref;
};

/// Default depth list: 12 log-spaced points from 5 to 700.
std::vector<int> default_xeb_depths();

std::vector<XebCircuit> generate_xeb_circuits(const std::vector<int>& depths, int n_per_depth,
                                              std::uint64_t seed,
                                              const std::string& gate_ref = "");

/// Exact four-outcome distribution of a circuit under ideal single-qubit
/// gates and the given fSim model.
Eigen::Vector4d expected_probs(const XebCircuit& circuit, const FsimParams& gate_model);

/// Cross-entropy fidelity of one circuit:
/// [S(P_inc,P_exp) - S(P_meas,P_exp)] / [S(P_inc,P_exp) - S(P_exp,P_exp)].
/// Throws when the denominator degenerates (expected distribution uniform).
double xeb_fidelity(const Eigen::Vector4d& p_measured, const Eigen::Vector4d& p_expected);

struct DecayFit {
    double a = 1.0, b = 0.0;
    double e_r = 0.0;              // depolarization per cycle, F = A (1-e_r)^m + B
    double e_r_exponential = 0.0;  // equivalent exponential-form constant
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    double rss = 0.0;
    bool converged = false;
    bool flagged = false;  // non-convergence or negative rate
};

/// Optional per-depth standard errors turn the least-squares fit into a
/// weighted (chi-square) fit, which matters when deep, noisy points would
/// otherwise drag the decay constant.
DecayFit fit_decay(const std::vector<double>& depths, const std::vector<double>& mean_fidelity,
                   const std::vector<double>* stderr_fidelity = nullptr);

struct XebResult {
    std::vector<double> depths;
    std::vector<double> mean_fidelity;
    std::vector<double> stderr_fidelity;
    DecayFit fit;
    double e_p_cycle = 0.0;
    TwoQubitError e_p_2q;
    std::uint64_t seed = 0;
};

struct BenchOptions {
    std::uint64_t shots = 0;  // 0 = expectation mode
    std::uint64_t seed = 1;
    bool noise = true;
    bool sq_gate_error = true;  // apply the single-qubit error channels
    unsigned threads = 0;
    double sq_e_p_subtraction = 7.5e-4;  // per qubit, used for e_p_2q
};

/// Runs the circuits against the simulated device (gate played as flux
/// pulses) and scores them against the model distribution.
XebResult xeb_on_device(const std::vector<XebCircuit>& circuits, const PulseProgram& gate,
                        const FsimParams& gate_model, const DeviceModel& model,
                        const BenchOptions& opts = {});

/// Closed-form path used by recovery tests: the device is the ideal model
/// with a depolarizing channel of strength e_r_cycle applied every cycle.
XebResult xeb_injected_depolarizing(const std::vector<XebCircuit>& circuits,
                                    const FsimParams& truth, double e_r_cycle,
                                    const BenchOptions& opts = {});

struct PurityResult {
    std::vector<double> depths;
    std::vector<double> mean_sqrt_purity;  // sqrt[(D Tr rho^2 - 1)/(D-1)]
    DecayFit fit;
    double e_p_cycle_incoherent = 0.0;
    TwoQubitError e_p_2q_incoherent;
};

/// Purity benchmarking over the same sequences: reconstructs the
/// computational-subspace state (|2> folded into |1>), fits the unitarity
/// decay, and converts to an incoherent Pauli error per cycle. Coherent
/// model errors do not move this number.
PurityResult purity_benchmark(const std::vector<XebCircuit>& circuits, const PulseProgram& gate,
                              const DeviceModel& model, const BenchOptions& opts = {});

struct RbResult {
    std::vector<double> depths;
    std::vector<double> survival;
    DecayFit fit;
    double e_p = 0.0;  // Pauli error per Clifford (or per interleaved gate)
};

struct RbOptions {
    int n_sequences = 8;
    std::uint64_t shots = 0;
    std::uint64_t seed = 1;
    bool noise = true;
    unsigned threads = 0;
};

/// Single-qubit Clifford randomized benchmarking with an exact inversion
/// gate. With an interleaved gate, returns that gate's error from the
/// interleaved/reference decay ratio.
RbResult single_qubit_rb(const DeviceModel& model, QubitId which, const std::vector<int>& depths,
                         const RbOptions& opts = {},
                         std::optional<SingleQubitGate> interleaved = std::nullopt);

/// Measured distributions for a fixed circuit set, the input to ex-situ
/// model optimization.
struct MeasuredXebData {
    std::vector<XebCircuit> circuits;
    std::vector<Eigen::Vector4d> probs;
};

struct FreeParams {
    bool theta = false, phi = false;
    bool delta_plus = true, delta_minus = true, delta_minus_off = true;
};

struct ExSituResult {
    FsimParams params;
    double cost_initial = 0.0, cost_final = 0.0;
    bool improved = false;
    int evals = 0;
};

/// Simplex optimization of the selected model parameters against
/// 1 - mean XEB fidelity of the measured data. Defaults optimize the three
/// single-qubit phases with theta and phi held fixed.
ExSituResult ex_situ_optimize(const FsimParams& initial, const FreeParams& free_params,
                              const MeasuredXebData& data, double cost_tol = 1e-4,
                              int max_evals = 500);

struct ErrorBudget {
    double total_2q = 0.0;       // per-gate Pauli error after SQ subtraction
    double incoherent_2q = 0.0;  // purity-limited part, same subtraction
    double coherent = 0.0;       // total - incoherent
    double leakage_per_cycle = 0.0;
};

ErrorBudget error_budget(double xeb_cycle_e_p, double purity_cycle_e_p, double leakage_rate,
                         double sq_e_p = 7.5e-4);

/// Runs one circuit on the device and returns the measured four-outcome
/// distribution (|2> folded) plus, optionally, the folded two-qubit state.
Eigen::Vector4d run_circuit_on_device(const XebCircuit& circuit, const PulseProgram& gate,
                                      const DeviceModel& model, const BenchOptions& opts,
                                      std::uint64_t circuit_seed,
                                      Eigen::Matrix4cd* folded_state = nullptr);

}  // namespace fsimlab

#endif
