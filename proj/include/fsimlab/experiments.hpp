#ifndef FSIMLAB_EXPERIMENTS_HPP
#define FSIMLAB_EXPERIMENTS_HPP

#include <string>
#include <vector>

#include "fsimlab/device_sim.hpp"

namespace fsimlab {

enum class ScanMode { leakage, phi, theta, population };

/// One value per (row, col) grid point. Rows follow axis1, columns axis2.
struct ScanResult {
    std::vector<double> axis1;  // detuning (MHz) or coupler bias, per protocol
    std::vector<double> axis2;  // coupler bias or duration (ns)
    std::string axis1_name, axis2_name;
    MatrixXd values;
    ScanMode mode = ScanMode::population;
    std::vector<std::uint8_t> flags;  // per-row protocol flags, meaning per op
};

struct ScanOptions {
    double pad_ns = 1.0;
    PulseShape shape = PulseShape::rectangular;
    double smoothing_rise_ns = 3.0;
    std::uint64_t shots = 0;  // 0 = expectation mode
    std::uint64_t seed = 1;
    bool noise = false;
    bool leakage_proxy = false;  // measure the partner qubit's |0> population
    unsigned threads = 0;
};

struct SpectroscopyResult {
    ScanResult population;          // axis1 = coupler bias, axis2 = duration
    std::vector<double> g_mhz;      // |g| per bias from the FFT peak
    std::vector<std::uint8_t> below_noise;  // per-bias peak-too-small flag
    double fft_bin_mhz = 0.0;       // frequency resolution of the extraction
};

/// Swap spectroscopy: initialize one excitation, evolve with the qubits on
/// resonance, measure the other qubit over a duration grid, and FFT each
/// bias column; the population oscillates at twice the coupling.
SpectroscopyResult swap_spectroscopy(const std::vector<double>& coupler_bias_grid,
                                     const std::vector<double>& duration_grid_ns,
                                     const DeviceModel& model, const ScanOptions& opts = {});

/// Per-pixel depth-1 experiments over (detuning, coupler bias):
///  leakage - initialize |11>, report the |02> population (or the proxy);
///  theta   - initialize |01>, report the swap angle from the transferred
///            population, degrees;
///  phi     - two-branch Ramsey, conditional phase in (-180, 180] degrees.
/// Qubits are placed symmetrically about the mean idle frequency.
ScanResult landscape_scan(ScanMode mode, const std::vector<double>& delta_grid_mhz,
                          const std::vector<double>& coupler_grid, double duration_ns,
                          const DeviceModel& model, const ScanOptions& opts = {});

struct TomographyOptions {
    std::uint64_t shots = 0;  // per quadrature per circuit; 0 = expectation
    std::uint64_t seed = 1;
    bool noise = false;
    double magnitude_tol = 0.05;
};

struct TomographyRun {
    TomographyElements elements;
    FsimParams params;
    bool magnitudes_flagged = false;  // non-unitarity beyond the SPAM tolerance
    ExtractionInfo info;
};

/// Runs the six depth-1 tomography circuits against the device and extracts
/// the five gate parameters. The program is conditioned before evolution.
TomographyRun unitary_tomography(const PulseProgram& program, const DeviceModel& model,
                                 const TomographyOptions& opts = {});

struct LeakageResult {
    double rate_per_cycle = 0.0;
    double saturation = 0.0;
    bool fit_failed = false;
    std::vector<double> depths;
    std::vector<double> p2;  // mean |2> population per depth
};

struct LeakageOptions {
    int n_circuits = 5;
    std::uint64_t shots = 0;
    std::uint64_t seed = 7;
    bool noise = true;
};

/// |2>-state population vs XEB sequence depth, fit to a saturating
/// exponential; returns the per-cycle leakage (initial slope).
LeakageResult leakage_per_cycle(const PulseProgram& gate, const std::vector<int>& depths,
                                const DeviceModel& model, const LeakageOptions& opts = {});

/// Qubit excursions placing the pair symmetrically about the mean idle
/// frequency with detuning f_q0 - f_q1 = delta_mhz.
PulseAmplitudes detuning_amplitudes(double delta_mhz, const DeviceModel& model);

}  // namespace fsimlab

#endif
