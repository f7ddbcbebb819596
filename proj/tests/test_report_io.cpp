#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fsimlab/report_io.hpp"

using namespace fsimlab;

TEST_CASE("csv files use CRLF records and carry hash plus seed") {
    const std::string path = "/tmp/fsimlab_csv_test.csv";
    {
        CsvWriter w(path, {"a", "b"}, 0xabcdef, 42);
        w.row({"1", "two, with comma"});
        w.row({"3", "quote \" inside"});
        CHECK_THROWS_AS(w.row({"only-one"}), std::invalid_argument);
    }
    std::ifstream f(path, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(text.find("config_hash,seed,a,b\r\n") == 0);
    CHECK(text.find("abcdef,42,1,\"two, with comma\"\r\n") != std::string::npos);
    CHECK(text.find("\"quote \"\" inside\"") != std::string::npos);
}

TEST_CASE("fnv1a64 is stable") {
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("abc") != fnv1a64("acb"));
}

TEST_CASE("report aggregation computes means and flags bad files") {
    namespace fs = std::filesystem;
    const fs::path dir = "/tmp/fsimlab_report_test";
    fs::create_directories(dir);
    std::vector<std::string> files;
    for (int i = 0; i < 4; ++i) {
        const fs::path p = dir / ("gate" + std::to_string(i) + ".json");
        std::ofstream f(p);
        f << "{\"e_p_2q\": " << (3e-3 + i * 1e-3) << ", \"purity_e_p_2q\": " << (2e-3 + i * 1e-3)
          << "}";
        files.push_back(p.string());
    }
    const fs::path bad = dir / "broken.json";
    {
        std::ofstream f(bad);
        f << "{\"unrelated\": true}";
    }
    files.push_back(bad.string());

    const ReportSummary s = aggregate_reports(files);
    CHECK(s.n_gates == 4);
    CHECK(s.mean_error == doctest::Approx(4.5e-3).epsilon(1e-9));
    CHECK(s.mean_purity_error == doctest::Approx(3.5e-3).epsilon(1e-9));
    REQUIRE(s.bad_files.size() == 1);
    CHECK(s.bad_files[0] == bad.string());

    const ReportSummary empty = aggregate_reports({});
    CHECK(empty.n_gates == 0);
}

TEST_CASE("manifest serializes config echo and outputs") {
    RunManifest m;
    m.command = "scan";
    m.config_json = "{\"eta_mhz\": 240.0}";
    m.config_hash = 7;
    m.seed = 9;
    m.outputs = {"a.csv"};
    const std::string path = "/tmp/fsimlab_manifest_test.json";
    m.save(path);
    std::ifstream f(path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"eta_mhz\": 240.0") != std::string::npos);
    CHECK(text.find("\"seed\": 9") != std::string::npos);
}
