#ifndef FSIMLAB_DEVICE_MODEL_HPP
#define FSIMLAB_DEVICE_MODEL_HPP

#include <array>
#include <optional>
#include <string>

#include "fsimlab/common.hpp"
#include "fsimlab/pulse.hpp"

namespace fsimlab {

/// Optional Lorentzian T1 suppression around a fixed frequency, emulating a
/// coupled TLS defect. Off by default.
struct TlsDip {
    double center_ghz = 0.0;
    double width_mhz = 0.0;
    double t1_dip_us = 1.0;
};

/// Simulated-device configuration. Immutable after construction; share freely.
///
/// Unit conventions: frequencies in GHz, couplings and the nonlinearity in
/// MHz, times in ns except T1/Tphi in us, fluxes in Phi0. The block
/// Hamiltonian uses the positive-nonlinearity convention (E|2> = 2 E|1> +
/// eta), under which the |11>-|02> resonance sits at Delta = f_q0 - f_q1 =
/// +eta, i.e. qubit 0 detuned above qubit 1.
struct DeviceModel {
    double eta_mhz = 240.0;
    double f_max_q0_ghz = 6.25;
    double f_max_q1_ghz = 6.10;
    double idle_f_q0_ghz = 6.02;
    double idle_f_q1_ghz = 5.90;

    // Coupler transfer function g(phi) = g_direct + g_tunable / (1 + ell sec d),
    // d + ell sin d = 2 pi phi.
    double g_direct_mhz = -14.0;
    double g_tunable_mhz = 40.0;
    double junction_ratio = 1.0;

    double t1_us = 25.3;
    double t_phi_us = 20.0;
    double sq_pauli_error = 7.5e-4;

    // Row = prepared state, column = reported outcome.
    std::array<std::array<double, 3>, 3> readout_confusion_q0{
        {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    std::array<std::array<double, 3>, 3> readout_confusion_q1{
        {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

    int dac_bits = 14;
    double sample_rate_gsps = 1.0;

    SettlingModel settling_q0;       // all-zero alphas = ideal line
    SettlingModel settling_q1;
    SettlingModel settling_coupler;  // true coupler response
    bool settling_enabled = false;
    // Pre-distortion inverts the measured qubit models exactly; the coupler
    // is compensated with the average of the two qubit models, whether or
    // not that matches its true response.
    bool predistortion_enabled = false;
    double line_sigma_ns = 0.0;  // Gaussian line-bandwidth model, 0 = ideal

    std::optional<TlsDip> tls_dip;

    // Derived at construction/load time.
    double coupler_off_bias = 0.0;

    void validate() const;
    /// Recomputes the coupler OFF bias by root-finding g(phi) = 0.
    void finalize();

    /// Device constants used throughout the paper's experiments, with the
    /// qubit-2/qubit-3 settling rows and their average on the coupler.
    static DeviceModel paper_default();
};

enum class QubitId { q0 = 0, q1 = 1 };

/// Net qubit-qubit coupling at a coupler flux bias, MHz. Guarded within
/// |bias| <= 0.5 - eps; the junction model diverges at half flux.
double coupler_g(double bias, const DeviceModel& model);

/// Inverts coupler_g on the branch bias in [0, 0.5); throws when the target
/// coupling is outside the reachable range.
double coupler_bias_for_g(double g_mhz, const DeviceModel& model);

/// Transmon spectrum f(phi) = (f_max + eta') sqrt(|cos(pi phi)|) - eta'
/// with eta' = eta in GHz. Even in the bias.
double qubit_freq(double bias, const DeviceModel& model, QubitId which);

/// Inverse of qubit_freq on bias in [0, 0.5); throws for unreachable targets.
double freq_to_bias(double f_ghz, const DeviceModel& model, QubitId which);

/// T1 at a qubit frequency, including the optional TLS dip.
double t1_at_frequency(double f_ghz, const DeviceModel& model);

std::string device_to_json(const DeviceModel& model);
DeviceModel device_from_json(const std::string& text);
DeviceModel load_device(const std::string& path);
void save_device(const DeviceModel& model, const std::string& path);

}  // namespace fsimlab

#endif
