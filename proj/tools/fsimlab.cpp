// Command-line front end: experiment orchestration and result export.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fsimlab/report_io.hpp"

namespace fs = std::filesystem;
using namespace fsimlab;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::uint64_t shots = 0;
    bool expectation = false;
    unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "device profile JSON (defaults built in)");
    cmd->add_option("--out", a.out_dir, "output directory");
    cmd->add_option("--seed", a.seed, "RNG seed (FSIMLAB_SEED overrides)");
    cmd->add_option("--shots", a.shots, "shots per circuit; 0 = expectation mode");
    cmd->add_flag("--expectation", a.expectation, "force expectation mode (shots = 0)");
    cmd->add_option("--threads", a.threads, "worker threads (0 = hardware)");
}

struct Session {
    DeviceModel model;
    std::string config_json;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::uint64_t shots = 0;
    fs::path out;
    RunManifest manifest;

    std::string path(const std::string& name) {
        manifest.outputs.push_back((out / name).string());
        return (out / name).string();
    }
    void finish() { manifest.save((out / "run_manifest.json").string()); }
};

Session open_session(const CommonArgs& a, const std::string& command) {
    Session s;
    s.model = a.config_path.empty() ? DeviceModel::paper_default() : load_device(a.config_path);
    s.config_json = device_to_json(s.model);
    s.config_hash = fnv1a64(s.config_json);
    s.seed = a.seed;
    if (const char* env = std::getenv("FSIMLAB_SEED")) s.seed = std::strtoull(env, nullptr, 10);
    s.shots = a.expectation ? 0 : a.shots;
    s.out = a.out_dir;
    fs::create_directories(s.out);
    s.manifest.command = command;
    s.manifest.config_json = s.config_json;
    s.manifest.config_hash = s.config_hash;
    s.manifest.seed = s.seed;
    s.manifest.shots = s.shots;
    s.manifest.expectation = (s.shots == 0);
    return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n > 1 ? lo + (hi - lo) * i / (n - 1) : lo;
    return v;
}

PulseShape parse_shape(const std::string& s, double* rise) {
    if (s == "rectangular") return PulseShape::rectangular;
    if (s == "cosine") return PulseShape::cosine;
    if (s.rfind("smoothed", 0) == 0) {
        const auto open = s.find('(');
        if (open != std::string::npos) *rise = std::stod(s.substr(open + 1));
        return PulseShape::smoothed;
    }
    throw CLI::ValidationError("shape", "expected rectangular | smoothed(rise_ns) | cosine");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fsimlab: simulated gmon two-qubit gate experiments"};
    app.require_subcommand(1);

    // scan
    CommonArgs scan_args;
    std::string scan_mode = "theta", scan_shape = "rectangular";
    double scan_dmin = -80, scan_dmax = 420, scan_cmin = 0.0, scan_cmax = 0.185;
    int scan_dn = 101, scan_cn = 101;
    double scan_duration = 15.0, scan_pad = 1.0;
    auto* scan = app.add_subcommand("scan", "landscape scan over detuning and coupler bias");
    add_common(scan, scan_args);
    scan->add_option("--mode", scan_mode, "leakage | phi | theta");
    scan->add_option("--delta-min", scan_dmin);
    scan->add_option("--delta-max", scan_dmax);
    scan->add_option("--delta-steps", scan_dn);
    scan->add_option("--coupler-min", scan_cmin);
    scan->add_option("--coupler-max", scan_cmax);
    scan->add_option("--coupler-steps", scan_cn);
    scan->add_option("--duration", scan_duration, "flat-top length, ns");
    scan->add_option("--pad", scan_pad);
    scan->add_option("--shape", scan_shape, "rectangular | smoothed(rise) | cosine");

    // spectroscopy
    CommonArgs spec_args;
    double spec_bmin = 0.0, spec_bmax = 0.18, spec_tmax = 250.0, spec_tstep = 2.0;
    int spec_bn = 61;
    auto* spec = app.add_subcommand("spectroscopy", "swap spectroscopy vs coupler bias");
    add_common(spec, spec_args);
    spec->add_option("--bias-min", spec_bmin);
    spec->add_option("--bias-max", spec_bmax);
    spec->add_option("--bias-steps", spec_bn);
    spec->add_option("--t-max", spec_tmax);
    spec->add_option("--t-step", spec_tstep);

    // tomography
    CommonArgs tomo_args;
    double tomo_duration = 13.0, tomo_pad = 1.0, tomo_q0 = 0, tomo_q1 = 0, tomo_c = 0;
    std::string tomo_registry;
    double tomo_theta = -1, tomo_phi = 0;
    auto* tomo = app.add_subcommand("tomography", "unitary tomography of a pulse program");
    add_common(tomo, tomo_args);
    tomo->add_option("--duration", tomo_duration);
    tomo->add_option("--pad", tomo_pad);
    tomo->add_option("--amp-q0", tomo_q0);
    tomo->add_option("--amp-q1", tomo_q1);
    tomo->add_option("--amp-c", tomo_c);
    tomo->add_option("--registry", tomo_registry, "benchmark a registry gate instead");
    tomo->add_option("--theta", tomo_theta, "registry target theta, degrees");
    tomo->add_option("--phi", tomo_phi, "registry target phi, degrees");

    // xeb / purity
    CommonArgs xeb_args;
    std::string xeb_registry;
    double xeb_theta = 45.0, xeb_phi = 30.0;
    int xeb_ncirc = 20;
    bool xeb_noiseless = false;
    auto* xeb = app.add_subcommand("xeb", "cross-entropy benchmarking of a registry gate");
    add_common(xeb, xeb_args);
    xeb->add_option("--registry", xeb_registry)->required();
    xeb->add_option("--theta", xeb_theta);
    xeb->add_option("--phi", xeb_phi);
    xeb->add_option("--circuits", xeb_ncirc, "circuits per depth");
    xeb->add_flag("--noiseless", xeb_noiseless);

    CommonArgs pur_args;
    std::string pur_registry;
    double pur_theta = 45.0, pur_phi = 30.0;
    int pur_ncirc = 10;
    auto* pur = app.add_subcommand("purity", "purity benchmarking of a registry gate");
    add_common(pur, pur_args);
    pur->add_option("--registry", pur_registry)->required();
    pur->add_option("--theta", pur_theta);
    pur->add_option("--phi", pur_phi);
    pur->add_option("--circuits", pur_ncirc);

    // rb
    CommonArgs rb_args;
    int rb_qubit = 0, rb_nseq = 8;
    auto* rb = app.add_subcommand("rb", "single-qubit Clifford randomized benchmarking");
    add_common(rb, rb_args);
    rb->add_option("--qubit", rb_qubit, "0 or 1");
    rb->add_option("--sequences", rb_nseq);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "gate-family and composite calibration");
    cal->require_subcommand(1);
    CommonArgs cal_cphase_args;
    auto* cal_cphase = cal->add_subcommand("cphase", "CPHASE family");
    add_common(cal_cphase, cal_cphase_args);
    CommonArgs cal_iswap_args;
    auto* cal_iswap = cal->add_subcommand("iswap", "iSWAP-like family");
    add_common(cal_iswap, cal_iswap_args);
    CommonArgs cal_fsim_args;
    int cal_grid = 525;
    int cal_stride = 1;
    auto* cal_fsim = cal->add_subcommand("fsim", "composite fSim registry");
    add_common(cal_fsim, cal_fsim_args);
    cal_fsim->add_option("--grid", cal_grid, "525 = full paper grid; n*m supported");
    cal_fsim->add_option("--stage2-stride", cal_stride);

    // report
    CommonArgs rep_args;
    std::vector<std::string> rep_inputs;
    auto* rep = app.add_subcommand("report", "aggregate benchmark summaries");
    add_common(rep, rep_args);
    rep->add_option("--inputs", rep_inputs, "summary JSON files");

    CLI11_PARSE(app, argc, argv);

    try {
        if (scan->parsed()) {
            Session s = open_session(scan_args, "scan");
            ScanOptions opts;
            opts.pad_ns = scan_pad;
            opts.shots = s.shots;
            opts.seed = s.seed;
            opts.threads = scan_args.threads;
            opts.shape = parse_shape(scan_shape, &opts.smoothing_rise_ns);
            const ScanMode mode = scan_mode == "leakage" ? ScanMode::leakage
                                  : scan_mode == "phi"   ? ScanMode::phi
                                                         : ScanMode::theta;
            const ScanResult r =
                landscape_scan(mode, linspace(scan_dmin, scan_dmax, scan_dn),
                               linspace(scan_cmin, scan_cmax, scan_cn), scan_duration, s.model,
                               opts);
            scan_to_csv(r, s.path("scan_" + scan_mode + ".csv"), s.config_hash, s.seed);
            s.finish();
        } else if (spec->parsed()) {
            Session s = open_session(spec_args, "spectroscopy");
            ScanOptions opts;
            opts.shots = s.shots;
            opts.seed = s.seed;
            opts.threads = spec_args.threads;
            std::vector<double> durations;
            for (double t = spec_tstep; t <= spec_tmax; t += spec_tstep) durations.push_back(t);
            const SpectroscopyResult r = swap_spectroscopy(
                linspace(spec_bmin, spec_bmax, spec_bn), durations, s.model, opts);
            spectroscopy_to_csv(r, s.path("spectroscopy_population.csv"),
                                s.path("spectroscopy_gcurve.csv"), s.config_hash, s.seed);
            s.finish();
        } else if (tomo->parsed()) {
            Session s = open_session(tomo_args, "tomography");
            PulseProgram prog;
            if (!tomo_registry.empty()) {
                const GateRegistry reg = GateRegistry::load(tomo_registry);
                const LookupResult lr = registry_lookup(reg, tomo_theta, tomo_phi);
                prog = program_for_entry(*lr.entry, reg, s.model);
            } else {
                prog = make_pulse(tomo_duration, tomo_pad, {tomo_q0, tomo_q1, tomo_c},
                                  PulseShape::rectangular, s.model.sample_rate_gsps);
            }
            TomographyOptions opts;
            opts.shots = s.shots;
            opts.seed = s.seed;
            const TomographyRun run = unitary_tomography(prog, s.model, opts);
            nlohmann::json j;
            j["seed"] = s.seed;
            std::ostringstream h;
            h << std::hex << s.config_hash;
            j["config_hash"] = h.str();
            j["elements"] = {
                {"u11", {run.elements.u11.real(), run.elements.u11.imag()}},
                {"u12", {run.elements.u12.real(), run.elements.u12.imag()}},
                {"u21", {run.elements.u21.real(), run.elements.u21.imag()}},
                {"u22", {run.elements.u22.real(), run.elements.u22.imag()}},
                {"u12_excited",
                 {run.elements.u12_excited.real(), run.elements.u12_excited.imag()}},
                {"u22_excited",
                 {run.elements.u22_excited.real(), run.elements.u22_excited.imag()}},
                {"psi10", run.elements.psi10}};
            j["params"] = {{"theta_deg", rad_to_deg(run.params.theta)},
                           {"phi_deg", rad_to_deg(run.params.phi)},
                           {"delta_plus_deg", rad_to_deg(run.params.delta_plus)},
                           {"delta_minus_deg", rad_to_deg(run.params.delta_minus)},
                           {"delta_minus_off_deg", rad_to_deg(run.params.delta_minus_off)}};
            j["magnitudes_flagged"] = run.magnitudes_flagged;
            std::ofstream f(s.path("tomography.json"), std::ios::binary);
            f << j.dump(2) << "\n";
            s.finish();
        } else if (xeb->parsed() || pur->parsed()) {
            const bool is_xeb = xeb->parsed();
            Session s = open_session(is_xeb ? xeb_args : pur_args, is_xeb ? "xeb" : "purity");
            const GateRegistry reg = GateRegistry::load(is_xeb ? xeb_registry : pur_registry);
            const LookupResult lr =
                registry_lookup(reg, is_xeb ? xeb_theta : pur_theta, is_xeb ? xeb_phi : pur_phi);
            const PulseProgram prog = program_for_entry(*lr.entry, reg, s.model);
            BenchOptions opts;
            opts.shots = s.shots;
            opts.seed = s.seed;
            opts.noise = !(is_xeb && xeb_noiseless);
            opts.threads = (is_xeb ? xeb_args : pur_args).threads;
            opts.sq_e_p_subtraction = s.model.sq_pauli_error;
            const auto circuits = generate_xeb_circuits(
                default_xeb_depths(), is_xeb ? xeb_ncirc : pur_ncirc, s.seed);
            if (is_xeb) {
                const XebResult r = xeb_on_device(circuits, prog, lr.entry->measured, s.model, opts);
                xeb_to_csv(r, s.path("xeb.csv"), s.config_hash, s.seed);
                std::ofstream f(s.path("xeb_summary.json"), std::ios::binary);
                f << xeb_summary_json(r, s.config_hash) << "\n";
            } else {
                const PurityResult r = purity_benchmark(circuits, prog, s.model, opts);
                CsvWriter w(s.path("purity.csv"), {"depth", "sqrt_purity"}, s.config_hash, s.seed);
                for (std::size_t i = 0; i < r.depths.size(); ++i)
                    w.row({CsvWriter::field(r.depths[i]),
                           CsvWriter::field(r.mean_sqrt_purity[i])});
                nlohmann::json j;
                j["seed"] = s.seed;
                j["purity_e_p_cycle"] = r.e_p_cycle_incoherent;
                j["purity_e_p_2q"] = r.e_p_2q_incoherent.e_p;
                std::ofstream f(s.path("purity_summary.json"), std::ios::binary);
                f << j.dump(2) << "\n";
            }
            s.finish();
        } else if (rb->parsed()) {
            Session s = open_session(rb_args, "rb");
            RbOptions opts;
            opts.shots = s.shots;
            opts.seed = s.seed;
            opts.n_sequences = rb_nseq;
            opts.threads = rb_args.threads;
            const RbResult r =
                single_qubit_rb(s.model, rb_qubit == 0 ? QubitId::q0 : QubitId::q1,
                                {4, 16, 48, 128, 256, 512, 1024}, opts);
            CsvWriter w(s.path("rb.csv"), {"depth", "survival"}, s.config_hash, s.seed);
            for (std::size_t i = 0; i < r.depths.size(); ++i)
                w.row({CsvWriter::field(r.depths[i]), CsvWriter::field(r.survival[i])});
            nlohmann::json j;
            j["e_p"] = r.e_p;
            j["e_r"] = r.fit.e_r;
            std::ofstream f(s.path("rb_summary.json"), std::ios::binary);
            f << j.dump(2) << "\n";
            s.finish();
        } else if (cal_cphase->parsed()) {
            Session s = open_session(cal_cphase_args, "calibrate cphase");
            const CphaseFamily fam = calibrate_cphase_family(1.0, 13.0, s.model,
                                                             {.threads = cal_cphase_args.threads});
            CsvWriter w(s.path("cphase_family.csv"),
                        {"phi_deg", "delta_mhz", "amp_c", "theta_residual_deg", "extrapolated"},
                        s.config_hash, s.seed);
            for (const auto& p : fam.points)
                w.row({CsvWriter::field(p.phi_deg), CsvWriter::field(p.delta_mhz),
                       CsvWriter::field(p.amp_c), CsvWriter::field(p.theta_residual_deg),
                       p.extrapolated ? "1" : "0"});
            s.finish();
        } else if (cal_iswap->parsed()) {
            Session s = open_session(cal_iswap_args, "calibrate iswap");
            const IswapFamily fam =
                calibrate_iswap_family(11.0, s.model, {.threads = cal_iswap_args.threads});
            CsvWriter w(s.path("iswap_family.csv"), {"theta_deg", "fraction", "phi_iswap_deg"},
                        s.config_hash, s.seed);
            for (std::size_t i = 0; i < fam.theta_to_fraction.x.size(); ++i)
                w.row({CsvWriter::field(fam.theta_to_fraction.x[i]),
                       CsvWriter::field(fam.theta_to_fraction.y[i]),
                       CsvWriter::field(fam.theta_to_phi_iswap.y[i])});
            nlohmann::json j;
            j["amp_q0"] = fam.amp_q0;
            j["amp_q1"] = fam.amp_q1;
            j["amp_c_90"] = fam.amp_c_90;
            j["amp_c_0"] = fam.amp_c_0;
            j["full_swap_population"] = fam.full_swap_population;
            j["flagged"] = fam.flagged;
            std::ofstream f(s.path("iswap_family.json"), std::ios::binary);
            f << j.dump(2) << "\n";
            s.finish();
        } else if (cal_fsim->parsed()) {
            Session s = open_session(cal_fsim_args, "calibrate fsim");
            std::vector<std::pair<double, double>> targets;
            if (cal_grid == 525) {
                targets = default_fsim_grid();
            } else {
                // n*m grid over the same ranges
                int n_theta = int(std::sqrt(double(cal_grid)));
                int n_phi = cal_grid / std::max(n_theta, 1);
                for (int i = 0; i < n_theta; ++i)
                    for (int j = 0; j < n_phi; ++j)
                        targets.emplace_back(i * 90.0 / std::max(n_theta - 1, 1),
                                             j * 360.0 / std::max(n_phi - 1, 1));
            }
            CalOptions copts;
            copts.threads = cal_fsim_args.threads;
            copts.stage2_stride = cal_stride;
            const GateRegistry reg = calibrate_composite_fsim(targets, s.model, copts);
            reg.save(s.path("registry.json"));
            registry_convergence_csv(reg, s.path("convergence.csv"), s.config_hash, s.seed);
            for (const auto& e : reg.entries)
                if (!e.converged)
                    s.manifest.failed_cells.push_back(
                        "theta=" + std::to_string(e.target_theta_deg) +
                        " phi=" + std::to_string(e.target_phi_deg));
            s.finish();
        } else if (rep->parsed()) {
            Session s = open_session(rep_args, "report");
            const ReportSummary sum = aggregate_reports(rep_inputs);
            std::ofstream f(s.path("report_summary.json"), std::ios::binary);
            f << sum.to_json() << "\n";
            s.finish();
            if (!sum.bad_files.empty()) {
                for (const auto& b : sum.bad_files)
                    std::cerr << "schema mismatch: " << b << "\n";
                return 2;
            }
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
