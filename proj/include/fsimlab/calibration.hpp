#ifndef FSIMLAB_CALIBRATION_HPP
#define FSIMLAB_CALIBRATION_HPP

#include <optional>
#include <string>
#include <vector>

#include "fsimlab/experiments.hpp"

namespace fsimlab {

/// Piecewise-cubic monotone (Fritsch-Carlson) interpolation; evaluation is
/// clamped-linear outside the knot range.
struct MonotoneCurve {
    std::vector<double> x, y;
    double operator()(double xq) const;
    bool covers(double xq) const { return !x.empty() && xq >= x.front() && xq <= x.back(); }
};

/// One calibrated point of the CPHASE family.
struct CphasePoint {
    double phi_deg = 0.0;       // measured conditional phase, unwrapped to [0, 360)
    double delta_mhz = 0.0;     // qubit-qubit detuning during the gate
    double amp_c = 0.0;         // coupler excursion completing the |11>-|02> swap
    double amp_q0 = 0.0, amp_q1 = 0.0;
    double theta_residual_deg = 0.0;
    double swap_contrast = 0.0;
    bool extrapolated = false;  // amp from the zero-coupling extrapolation
};

struct CphaseControls {
    double delta_mhz = 0.0;
    double amp_q0 = 0.0, amp_q1 = 0.0, amp_c = 0.0;
};

struct CphaseFamily {
    std::vector<CphasePoint> points;  // ascending in phi_deg
    double duration_ns = 13.0, pad_ns = 1.0;
    MonotoneCurve phi_to_delta, phi_to_amp;

    CphaseControls controls_for_phi(double phi_deg) const;
    PulseProgram program_for_phi(double phi_deg, const DeviceModel& model) const;
};

struct IswapFamily {
    double amp_q0 = 0.0, amp_q1 = 0.0;  // resonance excursions after step 2
    double amp_c_0 = 0.0, amp_c_90 = 0.0;
    // qubit-0 bias at the theta = 0 endpoint; the swap-phase alignment that
    // nulls the composite swap can sit at a slightly different bias than the
    // full-swap point, so the bias interpolates along the fraction axis.
    double amp_q0_0 = 0.0;
    double duration_ns = 11.0, pad_ns = 1.0;
    MonotoneCurve theta_to_fraction;   // theta_deg -> fraction of (amp90 - amp0)
    MonotoneCurve theta_to_phi_iswap;  // theta_deg -> conditional phase of the gate
    double full_swap_population = 0.0;
    bool flagged = false;  // swap amplitude below 0.99 after the three steps

    double amp_c_for_theta(double theta_deg) const;
    double amp_q0_for_fraction(double fraction) const;
    PulseProgram program_for_theta(double theta_deg, const DeviceModel& model) const;
};

struct CalOptions {
    double cphase_duration_ns = 13.0;  // flat top; 1 ns pads on either side
    double iswap_duration_ns = 11.0;
    double pad_ns = 1.0;
    double delta_span_mhz = 126.0;     // detuning scan half-width around eta
    double delta_step_mhz = 3.0;
    int sweep_lsb_step = 2;            // coupler sweeps step twice the DAC LSB
    double phi_grid_step_deg = 1.0;
    int stage2_stride = 1;             // re-measure endpoints every Nth entry
    int max_adjustments = 15;
    unsigned threads = 0;
    std::string timestamp;             // fixed value for reproducible registries
};

/// Sweeps detuning around the nonlinearity, finds the coupler amplitude
/// completing the diabatic |11>-|02> swap at each point, measures the
/// conditional phase, and assembles the phi -> controls curve. Beyond the
/// swap-existence window the amplitude extrapolates toward zero coupling.
CphaseFamily calibrate_cphase_family(double phi_step_deg, double gate_len_ns,
                                     const DeviceModel& model, const CalOptions& opts = {});

/// Three-step iSWAP-like bring-up (coupler sweep, qubit-bias sweep, coupler
/// re-sweep) plus the theta and conditional-phase curves along the
/// interpolated coupler bias. When preceding is set, every experiment plays
/// those pulses first (composite calibration).
IswapFamily calibrate_iswap_family(double gate_len_ns, const DeviceModel& model,
                                   const CalOptions& opts = {},
                                   const PulseProgram* preceding = nullptr);

struct RegistryEntry {
    double target_theta_deg = 0.0, target_phi_deg = 0.0;
    CphaseControls cphase;
    double iswap_amp_q0 = 0.0, iswap_amp_q1 = 0.0, iswap_amp_c = 0.0;
    double iswap_fraction = 0.0;
    FsimParams measured;
    double residual_theta_deg = 0.0, residual_phi_deg = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string timestamp;
};

struct GateRegistry {
    int schema_version = 1;
    double cphase_duration_ns = 13.0, iswap_duration_ns = 11.0, pad_ns = 1.0;
    std::vector<RegistryEntry> entries;

    std::string to_json() const;
    static GateRegistry from_json(const std::string& text);
    void save(const std::string& path) const;
    static GateRegistry load(const std::string& path);
};

struct LookupResult {
    const RegistryEntry* entry = nullptr;
    bool off_grid = false;
};

/// Exact-match lookup with nearest-neighbor fallback (flagged). Throws on an
/// empty registry.
LookupResult registry_lookup(const GateRegistry& registry, double theta_deg, double phi_deg);

/// Rebuilds the composite pulse program for a registry entry.
PulseProgram program_for_entry(const RegistryEntry& entry, const GateRegistry& registry,
                               const DeviceModel& model);

/// The 525-point target grid: 25 theta values (0..90) x 21 phi values
/// (0..360).
std::vector<std::pair<double, double>> default_fsim_grid();

/// Full three-stage composite calibration: the CPHASE registry, per-entry
/// re-measured iSWAP endpoints with the CPHASE played first, the theta
/// curves at phi_CPHASE = 180 deg, then the per-target +-1 degree
/// adjustment loop driven by unitary tomography.
GateRegistry calibrate_composite_fsim(const std::vector<std::pair<double, double>>& targets,
                                      const DeviceModel& model, const CalOptions& opts = {});

}  // namespace fsimlab

#endif
