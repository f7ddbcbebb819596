#ifndef FSIMLAB_REPORT_IO_HPP
#define FSIMLAB_REPORT_IO_HPP

#include <string>
#include <vector>

#include "fsimlab/benchmarking.hpp"
#include "fsimlab/calibration.hpp"
#include "fsimlab/experiments.hpp"

namespace fsimlab {

/// RFC 4180 CSV writer: CRLF records, quoting only where required.
/// Every file carries the run's config hash and seed as leading columns.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns,
              std::uint64_t config_hash, std::uint64_t seed);
    void row(const std::vector<std::string>& values);
    static std::string field(double v);

  private:
    std::string path_;
    std::string meta_hash_, meta_seed_;
    std::size_t n_columns_;
    std::string buffer_;
    void flush();
    friend struct CsvWriterFlusher;

  public:
    ~CsvWriter();
};

std::uint64_t fnv1a64(const std::string& bytes);

/// Run manifest: config echo + hash, seed, outputs, failures.
struct RunManifest {
    std::string command;
    std::string config_json;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::uint64_t shots = 0;
    bool expectation = false;
    std::vector<std::string> outputs;
    std::vector<std::string> failed_cells;

    void save(const std::string& path) const;
};

void scan_to_csv(const ScanResult& scan, const std::string& path, std::uint64_t config_hash,
                 std::uint64_t seed);
void spectroscopy_to_csv(const SpectroscopyResult& r, const std::string& scan_path,
                         const std::string& gcurve_path, std::uint64_t config_hash,
                         std::uint64_t seed);
void xeb_to_csv(const XebResult& r, const std::string& path, std::uint64_t config_hash,
                std::uint64_t seed);
std::string xeb_summary_json(const XebResult& r, std::uint64_t config_hash);
void registry_convergence_csv(const GateRegistry& reg, const std::string& path,
                              std::uint64_t config_hash, std::uint64_t seed);

/// Aggregates per-gate benchmark summary files (JSON) into mean/median error
/// tables plus histogram bins of error and purity. Files that do not parse
/// against the summary schema are reported as errors.
struct ReportSummary {
    int n_gates = 0;
    double mean_error = 0.0, median_error = 0.0;
    double mean_purity_error = 0.0;
    std::vector<double> error_bins, error_counts;
    std::vector<double> purity_bins, purity_counts;
    std::vector<std::string> bad_files;

    std::string to_json() const;
};

ReportSummary aggregate_reports(const std::vector<std::string>& summary_files);

}  // namespace fsimlab

#endif
