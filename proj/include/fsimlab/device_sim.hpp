#ifndef FSIMLAB_DEVICE_SIM_HPP
#define FSIMLAB_DEVICE_SIM_HPP

#include <array>
#include <cstdint>

#include "fsimlab/device_model.hpp"
#include "fsimlab/fsim_model.hpp"
#include "fsimlab/pulse.hpp"

namespace fsimlab {

// Two-qutrit basis |n0 n1>, index 3*n0 + n1. The one- and two-excitation
// block uses the ordering (|01>, |10>, |11>, |20>, |02>).
inline constexpr int idx9(int n0, int n1) { return 3 * n0 + n1; }
inline constexpr std::array<int, 5> kBlockIdx{1, 3, 4, 6, 2};
inline constexpr std::array<int, 4> kComputationalIdx{0, 1, 3, 4};

/// 5x5 single/two-excitation Hamiltonian, MHz (ordinary frequency; evolution
/// multiplies by 2 pi). Diagonal (0, Delta, Delta, 2 Delta + eta, eta),
/// off-diagonals g and sqrt(2) g.
struct HamiltonianBlock {
    Matrix5cd h;
    double g_mhz = 0.0, delta_mhz = 0.0, eta_mhz = 0.0;
};

HamiltonianBlock hamiltonian_block(double g_mhz, double delta_mhz, double eta_mhz);

/// Full two-qutrit Hamiltonian in the frame rotating with qubit 1:
/// E(n0,n1) = n0 Delta + eta [n0(n0-1) + n1(n1-1)]/2 plus the exchange
/// coupling g (a0+ a1 + h.c.) with qutrit-truncated ladder operators.
Matrix9cd hamiltonian_full(double g_mhz, double delta_mhz, double eta_mhz);

/// Per-sample control values derived from a pulse program: absolute biases
/// are idle + excursion (coupler idles at the OFF bias).
struct ControlTrace {
    std::vector<double> g_mhz;
    std::vector<double> delta_mhz;
    std::vector<double> f_q0_ghz, f_q1_ghz;
    double dt_ns = 1.0;
};

ControlTrace control_trace(const PulseProgram& program, const DeviceModel& model);

/// Applies the control-line realism configured on the model to all three
/// channels: optional pre-distortion, DAC quantization, then the settling
/// response. With everything disabled this is quantization only.
PulseProgram condition_program(const PulseProgram& program, const DeviceModel& model);

/// Time-ordered product of per-sample matrix exponentials over the sampled
/// waveforms, restricted to the 1+2 excitation block. Deterministic; the
/// program is taken as-is (condition_program applies line realism).
Matrix5cd evolve_block(const PulseProgram& program, const DeviceModel& model);

/// Same evolution on the full two-qutrit space.
Matrix9cd evolve_unitary9(const PulseProgram& program, const DeviceModel& model);

/// 9x9 density matrix for two three-level systems.
struct QutritDensityMatrix {
    Matrix9cd m = Matrix9cd::Zero();

    static QutritDensityMatrix pure(const Vector9cd& psi);
    static QutritDensityMatrix computational(int n0, int n1);
    double trace() const { return m.trace().real(); }
    double population(int n0, int n1) const { return m(idx9(n0, n1), idx9(n0, n1)).real(); }
    /// Hermitian within tol, unit trace within 1e-10, eigenvalues >= -1e-10.
    bool valid(double tol = 1e-9) const;
};

/// Coherent pulse evolution plus, when noise is on, per-step amplitude
/// damping (|2> at twice the |1> rate) and pure dephasing on each qutrit.
QutritDensityMatrix evolve_density(const QutritDensityMatrix& rho, const PulseProgram& program,
                                   const DeviceModel& model, bool noise);

/// Idle evolution (identity Hamiltonian frame) with noise for a duration.
QutritDensityMatrix idle_noise(const QutritDensityMatrix& rho, double duration_ns,
                               const DeviceModel& model);

/// Precomputed per-sample propagators and noise parameters of one pulse
/// program, for replaying the same gate many times (cycle benchmarking).
/// Applying the kernel is equivalent to evolve_density on the same program.
class GateKernel {
  public:
    static GateKernel make(const PulseProgram& conditioned_program, const DeviceModel& model,
                           bool noise);
    QutritDensityMatrix apply(const QutritDensityMatrix& rho) const;

  private:
    struct Step {
        Matrix9cd u;
        double p1_q0, p2_q0, p1_q1, p2_q1;  // damping probabilities
        double lambda_phi;                  // dephasing exponent per (n-m)^2
    };
    std::vector<Step> steps_;
    bool noise_ = false;
};

enum class SingleQubitGate {
    x_half,
    y_half,
    xy_pp,  // pi/2 about (x+y)/sqrt(2)
    xy_pm,  // pi/2 about (x-y)/sqrt(2)
    xy_mp,  // pi/2 about (-x+y)/sqrt(2)
    xy_mm,  // pi/2 about (-x-y)/sqrt(2)
    x_full,
    z_phase,
};

/// The cycle gate set used by the benchmarking circuits.
inline constexpr std::array<SingleQubitGate, 6> kXebGateSet{
    SingleQubitGate::x_half, SingleQubitGate::y_half, SingleQubitGate::xy_pp,
    SingleQubitGate::xy_pm,  SingleQubitGate::xy_mp,  SingleQubitGate::xy_mm};

/// 2x2 matrix of a tagged gate; z_phase takes the rotation angle.
Matrix2cd single_qubit_matrix(SingleQubitGate gate, double z_angle = 0.0);

/// Ideal two-level unitary embedded in the qutrit (identity on |2>),
/// followed by the configured depolarizing error channel unless with_error
/// is false.
QutritDensityMatrix apply_single_qubit_gate(const QutritDensityMatrix& rho, QubitId which,
                                            SingleQubitGate gate, const DeviceModel& model,
                                            double z_angle = 0.0, bool with_error = true);

QutritDensityMatrix apply_single_qubit_unitary(const QutritDensityMatrix& rho, QubitId which,
                                               const Matrix2cd& u, const DeviceModel& model,
                                               bool with_error = true);

/// 2 * <sigma_+> of one qubit: equals <sigma_x> + i <sigma_y> restricted to
/// the {|0>,|1>} levels, traced over the spectator.
complexd qubit_coherence(const QutritDensityMatrix& rho, QubitId which);

/// Readout distribution through the per-qutrit confusion matrices. With
/// discriminate_2 off, |2> outcomes fold into |1>.
std::array<double, 9> measurement_probabilities(const QutritDensityMatrix& rho,
                                                bool discriminate_2, const DeviceModel& model);

/// Multinomial sampling of the readout distribution; seeded, reproducible.
std::array<std::uint64_t, 9> sample_measurement(const QutritDensityMatrix& rho,
                                                std::uint64_t shots, bool discriminate_2,
                                                const DeviceModel& model, std::uint64_t seed);

}  // namespace fsimlab

#endif
