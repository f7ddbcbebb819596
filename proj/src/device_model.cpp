#include "fsimlab/device_model.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fsimlab {

namespace {

constexpr double kBiasGuard = 1e-3;  // stay clear of the half-flux divergence

/// Solves d + ell*sin(d) = x for d; monotone for ell <= 1, so bisect.
double junction_phase(double x, double ell) {
    double lo = 0.0, hi = kPi;
    while (hi + ell * std::sin(hi) < x) hi += kPi;  // x can exceed pi only marginally
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid + ell * std::sin(mid) < x)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double coupler_g(double bias, const DeviceModel& model) {
    if (std::abs(bias) > 0.5 - kBiasGuard)
        throw std::invalid_argument("coupler_g: bias outside guard band");
    const double ell = model.junction_ratio;
    const double d = junction_phase(2.0 * kPi * std::abs(bias), ell);
    const double cosd = std::cos(d);
    double tunable;
    if (std::abs(cosd) < 1e-12) {
        tunable = 0.0;  // removable singularity of g_t / (1 + ell sec d)
    } else {
        const double denom = 1.0 + ell / cosd;
        if (std::abs(denom) < 1e-9)
            throw std::invalid_argument("coupler_g: bias at junction divergence");
        tunable = model.g_tunable_mhz / denom;
    }
    return model.g_direct_mhz + tunable;
}

double coupler_bias_for_g(double g_mhz, const DeviceModel& model) {
    // g is monotone decreasing on [0, 0.5); bisect.
    double lo = 0.0, hi = 0.5 - kBiasGuard;
    double glo = coupler_g(lo, model), ghi = coupler_g(hi, model);
    if ((g_mhz > glo) == (g_mhz > ghi))
        throw std::invalid_argument("coupler_bias_for_g: coupling unreachable");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = coupler_g(mid, model);
        if ((gm > g_mhz) == (glo > g_mhz)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-14) break;
    }
    return 0.5 * (lo + hi);
}

double qubit_freq(double bias, const DeviceModel& model, QubitId which) {
    if (std::abs(bias) >= 0.5) throw std::invalid_argument("qubit_freq: |bias| must be < 0.5");
    const double f_max = (which == QubitId::q0) ? model.f_max_q0_ghz : model.f_max_q1_ghz;
    const double eta_ghz = model.eta_mhz / 1000.0;
    return (f_max + eta_ghz) * std::sqrt(std::abs(std::cos(kPi * bias))) - eta_ghz;
}

double freq_to_bias(double f_ghz, const DeviceModel& model, QubitId which) {
    const double f_max = (which == QubitId::q0) ? model.f_max_q0_ghz : model.f_max_q1_ghz;
    const double eta_ghz = model.eta_mhz / 1000.0;
    if (f_ghz > f_max || f_ghz <= -eta_ghz)
        throw std::invalid_argument("freq_to_bias: frequency unreachable");
    const double ratio = (f_ghz + eta_ghz) / (f_max + eta_ghz);
    const double c = ratio * ratio;  // cos(pi * bias)
    if (c > 1.0 || c <= 0.0) throw std::invalid_argument("freq_to_bias: frequency unreachable");
    return std::acos(c) / kPi;
}

double t1_at_frequency(double f_ghz, const DeviceModel& model) {
    if (!model.tls_dip) return model.t1_us;
    const TlsDip& dip = *model.tls_dip;
    const double det_mhz = (f_ghz - dip.center_ghz) * 1000.0;
    const double hw = dip.width_mhz / 2.0;
    const double lorentz = (hw * hw) / (det_mhz * det_mhz + hw * hw);
    // Rates add: 1/T1_eff = 1/T1 + lorentz * 1/T1_dip.
    const double rate = 1.0 / model.t1_us + lorentz / dip.t1_dip_us;
    return 1.0 / rate;
}

void DeviceModel::validate() const {
    if (eta_mhz <= 0) throw std::invalid_argument("device: eta must be positive");
    if (junction_ratio < 0 || junction_ratio > 1.0)
        throw std::invalid_argument("device: junction ratio must be in [0, 1]");
    if (sample_rate_gsps <= 0) throw std::invalid_argument("device: sample rate must be positive");
    if (t1_us <= 0 || t_phi_us <= 0) throw std::invalid_argument("device: T1/Tphi must be positive");
    auto check_rows = [](const std::array<std::array<double, 3>, 3>& c) {
        for (const auto& row : c) {
            double s = 0;
            for (double v : row) {
                if (v < 0) throw std::invalid_argument("device: confusion entries must be >= 0");
                s += v;
            }
            if (std::abs(s - 1.0) > 1e-9)
                throw std::invalid_argument("device: confusion rows must sum to 1");
        }
    };
    check_rows(readout_confusion_q0);
    check_rows(readout_confusion_q1);
}

void DeviceModel::finalize() {
    validate();
    coupler_off_bias = coupler_bias_for_g(0.0, *this);
}

DeviceModel DeviceModel::paper_default() {
    DeviceModel m;
    m.settling_q0 = SettlingModel::table_q2();
    m.settling_q1 = SettlingModel::table_q3();
    m.settling_coupler = SettlingModel::table_coupler();
    // Flux control is band limited; the nominally rectangular pulses reach
    // the chip with smoothed edges.
    m.line_sigma_ns = 2.0;
    m.finalize();
    return m;
}

namespace {

using nlohmann::json;

json settling_to_json(const SettlingModel& s) {
    return json{{"alpha", s.alpha}, {"tau_ns", s.tau_ns}};
}

SettlingModel settling_from_json(const json& j) {
    SettlingModel s;
    for (int i = 0; i < 3; ++i) {
        s.alpha[i] = j.at("alpha").at(i).get<double>();
        s.tau_ns[i] = j.at("tau_ns").at(i).get<double>();
    }
    return s;
}

}  // namespace

std::string device_to_json(const DeviceModel& m) {
    json j;
    j["schema_version"] = 1;
    j["eta_mhz"] = m.eta_mhz;
    j["f_max_q0_ghz"] = m.f_max_q0_ghz;
    j["f_max_q1_ghz"] = m.f_max_q1_ghz;
    j["idle_f_q0_ghz"] = m.idle_f_q0_ghz;
    j["idle_f_q1_ghz"] = m.idle_f_q1_ghz;
    j["g_direct_mhz"] = m.g_direct_mhz;
    j["g_tunable_mhz"] = m.g_tunable_mhz;
    j["junction_ratio"] = m.junction_ratio;
    j["t1_us"] = m.t1_us;
    j["t_phi_us"] = m.t_phi_us;
    j["sq_pauli_error"] = m.sq_pauli_error;
    j["readout_confusion_q0"] = m.readout_confusion_q0;
    j["readout_confusion_q1"] = m.readout_confusion_q1;
    j["dac_bits"] = m.dac_bits;
    j["sample_rate_gsps"] = m.sample_rate_gsps;
    j["settling_q0"] = settling_to_json(m.settling_q0);
    j["settling_q1"] = settling_to_json(m.settling_q1);
    j["settling_coupler"] = settling_to_json(m.settling_coupler);
    j["settling_enabled"] = m.settling_enabled;
    j["predistortion_enabled"] = m.predistortion_enabled;
    j["line_sigma_ns"] = m.line_sigma_ns;
    if (m.tls_dip) {
        j["tls_dip"] = {{"center_ghz", m.tls_dip->center_ghz},
                        {"width_mhz", m.tls_dip->width_mhz},
                        {"t1_dip_us", m.tls_dip->t1_dip_us}};
    }
    return j.dump(2);
}

DeviceModel device_from_json(const std::string& text) {
    const json j = json::parse(text);
    DeviceModel m;
    m.eta_mhz = j.value("eta_mhz", m.eta_mhz);
    m.f_max_q0_ghz = j.value("f_max_q0_ghz", m.f_max_q0_ghz);
    m.f_max_q1_ghz = j.value("f_max_q1_ghz", m.f_max_q1_ghz);
    m.idle_f_q0_ghz = j.value("idle_f_q0_ghz", m.idle_f_q0_ghz);
    m.idle_f_q1_ghz = j.value("idle_f_q1_ghz", m.idle_f_q1_ghz);
    m.g_direct_mhz = j.value("g_direct_mhz", m.g_direct_mhz);
    m.g_tunable_mhz = j.value("g_tunable_mhz", m.g_tunable_mhz);
    m.junction_ratio = j.value("junction_ratio", m.junction_ratio);
    m.t1_us = j.value("t1_us", m.t1_us);
    m.t_phi_us = j.value("t_phi_us", m.t_phi_us);
    m.sq_pauli_error = j.value("sq_pauli_error", m.sq_pauli_error);
    if (j.contains("readout_confusion_q0"))
        m.readout_confusion_q0 = j.at("readout_confusion_q0").get<std::array<std::array<double, 3>, 3>>();
    if (j.contains("readout_confusion_q1"))
        m.readout_confusion_q1 = j.at("readout_confusion_q1").get<std::array<std::array<double, 3>, 3>>();
    m.dac_bits = j.value("dac_bits", m.dac_bits);
    m.sample_rate_gsps = j.value("sample_rate_gsps", m.sample_rate_gsps);
    if (j.contains("settling_q0")) m.settling_q0 = settling_from_json(j.at("settling_q0"));
    if (j.contains("settling_q1")) m.settling_q1 = settling_from_json(j.at("settling_q1"));
    if (j.contains("settling_coupler"))
        m.settling_coupler = settling_from_json(j.at("settling_coupler"));
    m.settling_enabled = j.value("settling_enabled", m.settling_enabled);
    m.predistortion_enabled = j.value("predistortion_enabled", m.predistortion_enabled);
    m.line_sigma_ns = j.value("line_sigma_ns", m.line_sigma_ns);
    if (j.contains("tls_dip") && !j.at("tls_dip").is_null()) {
        TlsDip dip;
        dip.center_ghz = j.at("tls_dip").value("center_ghz", 0.0);
        dip.width_mhz = j.at("tls_dip").value("width_mhz", 0.0);
        dip.t1_dip_us = j.at("tls_dip").value("t1_dip_us", 1.0);
        m.tls_dip = dip;
    }
    m.finalize();
    return m;
}

DeviceModel load_device(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_device: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return device_from_json(ss.str());
}

void save_device(const DeviceModel& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_device: cannot open " + path);
    f << device_to_json(m) << "\n";
}

}  // namespace fsimlab
