#include "fsimlab/report_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fsimlab {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

}  // namespace

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns,
                     std::uint64_t config_hash, std::uint64_t seed)
    : path_(path), n_columns_(columns.size() + 2) {
    std::ostringstream h, s;
    h << std::hex << config_hash;
    meta_hash_ = h.str();
    s << seed;
    meta_seed_ = s.str();
    buffer_ = "config_hash,seed";
    for (const auto& c : columns) buffer_ += "," + csv_escape(c);
    buffer_ += "\r\n";
}

std::string CsvWriter::field(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void CsvWriter::row(const std::vector<std::string>& values) {
    if (values.size() + 2 != n_columns_)
        throw std::invalid_argument("csv row width mismatch");
    buffer_ += meta_hash_;
    buffer_ += ",";
    buffer_ += meta_seed_;
    for (const auto& v : values) {
        buffer_ += ",";
        buffer_ += csv_escape(v);
    }
    buffer_ += "\r\n";
}

void CsvWriter::flush() {
    std::ofstream f(path_, std::ios::binary);
    if (!f) throw std::runtime_error("csv: cannot open " + path_);
    f << buffer_;
}

CsvWriter::~CsvWriter() {
    try {
        flush();
    } catch (...) {
    }
}

void RunManifest::save(const std::string& path) const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = nlohmann::json::parse(config_json);
    std::ostringstream h;
    h << std::hex << config_hash;
    j["config_hash"] = h.str();
    j["seed"] = seed;
    j["shots"] = shots;
    j["expectation"] = expectation;
    j["outputs"] = outputs;
    j["failed_cells"] = failed_cells;
    j["format_version"] = 1;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("manifest: cannot open " + path);
    f << j.dump(2) << "\n";
}

void scan_to_csv(const ScanResult& scan, const std::string& path, std::uint64_t config_hash,
                 std::uint64_t seed) {
    const char* mode = scan.mode == ScanMode::leakage  ? "leakage"
                       : scan.mode == ScanMode::phi    ? "phi"
                       : scan.mode == ScanMode::theta  ? "theta"
                                                       : "population";
    CsvWriter w(path, {scan.axis1_name, scan.axis2_name, "value", "mode"}, config_hash, seed);
    for (std::size_t i = 0; i < scan.axis1.size(); ++i)
        for (std::size_t j = 0; j < scan.axis2.size(); ++j)
            w.row({CsvWriter::field(scan.axis1[i]), CsvWriter::field(scan.axis2[j]),
                   CsvWriter::field(scan.values(i, j)), mode});
}

void spectroscopy_to_csv(const SpectroscopyResult& r, const std::string& scan_path,
                         const std::string& gcurve_path, std::uint64_t config_hash,
                         std::uint64_t seed) {
    scan_to_csv(r.population, scan_path, config_hash, seed);
    CsvWriter w(gcurve_path, {"coupler_bias", "g_mhz", "below_noise"}, config_hash, seed);
    for (std::size_t i = 0; i < r.g_mhz.size(); ++i)
        w.row({CsvWriter::field(r.population.axis1[i]), CsvWriter::field(r.g_mhz[i]),
               r.below_noise[i] ? "1" : "0"});
}

void xeb_to_csv(const XebResult& r, const std::string& path, std::uint64_t config_hash,
                std::uint64_t seed) {
    CsvWriter w(path, {"depth", "mean_fidelity", "stderr"}, config_hash, seed);
    for (std::size_t i = 0; i < r.depths.size(); ++i)
        w.row({CsvWriter::field(r.depths[i]), CsvWriter::field(r.mean_fidelity[i]),
               CsvWriter::field(r.stderr_fidelity[i])});
}

std::string xeb_summary_json(const XebResult& r, std::uint64_t config_hash) {
    nlohmann::json j;
    std::ostringstream h;
    h << std::hex << config_hash;
    j["config_hash"] = h.str();
    j["seed"] = r.seed;
    j["fit"] = {{"a", r.fit.a},
                {"b", r.fit.b},
                {"e_r", r.fit.e_r},
                {"e_r_exponential", r.fit.e_r_exponential},
                {"rss", r.fit.rss},
                {"converged", r.fit.converged}};
    j["e_p_cycle"] = r.e_p_cycle;
    j["e_p_2q"] = r.e_p_2q.e_p;
    j["e_p_2q_clamped"] = r.e_p_2q.clamped;
    return j.dump(2);
}

void registry_convergence_csv(const GateRegistry& reg, const std::string& path,
                              std::uint64_t config_hash, std::uint64_t seed) {
    CsvWriter w(path,
                {"target_theta_deg", "target_phi_deg", "iterations", "residual_theta_deg",
                 "residual_phi_deg", "converged"},
                config_hash, seed);
    for (const auto& e : reg.entries)
        w.row({CsvWriter::field(e.target_theta_deg), CsvWriter::field(e.target_phi_deg),
               std::to_string(e.iterations), CsvWriter::field(e.residual_theta_deg),
               CsvWriter::field(e.residual_phi_deg), e.converged ? "1" : "0"});
}

std::string ReportSummary::to_json() const {
    nlohmann::json j;
    j["n_gates"] = n_gates;
    j["mean_error"] = mean_error;
    j["median_error"] = median_error;
    j["mean_purity_error"] = mean_purity_error;
    j["error_bins"] = error_bins;
    j["error_counts"] = error_counts;
    j["purity_bins"] = purity_bins;
    j["purity_counts"] = purity_counts;
    j["bad_files"] = bad_files;
    return j.dump(2);
}

ReportSummary aggregate_reports(const std::vector<std::string>& summary_files) {
    ReportSummary s;
    std::vector<double> errors, purities;
    for (const auto& path : summary_files) {
        try {
            std::ifstream f(path);
            if (!f) throw std::runtime_error("unreadable");
            nlohmann::json j = nlohmann::json::parse(f);
            errors.push_back(j.at("e_p_2q").get<double>());
            if (j.contains("purity_e_p_2q"))
                purities.push_back(j.at("purity_e_p_2q").get<double>());
        } catch (const std::exception&) {
            s.bad_files.push_back(path);
        }
    }
    s.n_gates = int(errors.size());
    if (errors.empty()) return s;
    std::sort(errors.begin(), errors.end());
    for (double e : errors) s.mean_error += e / errors.size();
    s.median_error = errors[errors.size() / 2];
    for (double p : purities) s.mean_purity_error += p / std::max<std::size_t>(purities.size(), 1);

    auto histogram = [](const std::vector<double>& vals, std::vector<double>& bins,
                        std::vector<double>& counts) {
        if (vals.empty()) return;
        const double lo = *std::min_element(vals.begin(), vals.end());
        const double hi = *std::max_element(vals.begin(), vals.end());
        const int n = 20;
        const double width = (hi > lo) ? (hi - lo) / n : 1.0;
        bins.resize(n + 1);
        counts.assign(n, 0.0);
        for (int i = 0; i <= n; ++i) bins[i] = lo + i * width;
        for (double v : vals) {
            int k = int((v - lo) / width);
            if (k >= n) k = n - 1;
            counts[k] += 1.0;
        }
    };
    histogram(errors, s.error_bins, s.error_counts);
    histogram(purities, s.purity_bins, s.purity_counts);
    return s;
}

}  // namespace fsimlab
