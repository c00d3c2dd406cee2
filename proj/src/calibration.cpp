#include "resokit/calibration.hpp"

#include "resokit/constants.hpp"
#include "resokit/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace resokit {

double dbm_to_watts(double dbm) {
    return 1e-3 * std::pow(10.0, dbm / 10.0);
}

double watts_to_dbm(double watts) {
    if (!(watts > 0.0))
        throw DomainError("power must be positive to convert to dBm");
    return 10.0 * std::log10(watts / 1e-3);
}

AttenuationComponent::AttenuationComponent(std::string name, std::vector<double> freqs,
                                           std::vector<double> atten_db)
    : name_(std::move(name)), freqs_(std::move(freqs)), atten_db_(std::move(atten_db)) {
    if (freqs_.size() != atten_db_.size())
        throw CalibrationError("component '" + name_ + "': frequency and dB counts differ");
    if (freqs_.empty())
        throw CalibrationError("component '" + name_ + "' has no points");
    for (std::size_t k = 0; k < freqs_.size(); ++k) {
        if (!std::isfinite(freqs_[k]) || !std::isfinite(atten_db_[k]))
            throw CalibrationError("component '" + name_ + "': non-finite entry");
        if (k > 0 && !(freqs_[k] > freqs_[k - 1]))
            throw CalibrationError("component '" + name_ + "': frequencies must be strictly increasing");
    }
}

double AttenuationComponent::at(double f) const {
    if (!covers(f))
        throw CalibrationError("frequency " + std::to_string(f) + " Hz outside component '" + name_ +
                               "'");
    const auto hi = std::lower_bound(freqs_.begin(), freqs_.end(), f);
    const auto k = static_cast<std::size_t>(hi - freqs_.begin());
    if (freqs_[k] == f)
        return atten_db_[k];
    const double t = (f - freqs_[k - 1]) / (freqs_[k] - freqs_[k - 1]);
    return atten_db_[k - 1] + t * (atten_db_[k] - atten_db_[k - 1]);
}

double total_attenuation(const AttenuationChain& chain, double f) {
    double sum = 0.0;
    for (const auto& c : chain.components)
        sum += c.at(f);
    return sum;
}

namespace {

double magnitude_db(Complex z) {
    return 20.0 * std::log10(std::abs(z));
}

std::vector<double> moving_median(const std::vector<double>& x, int window) {
    if (window < 1 || window % 2 == 0)
        throw DomainError("median window must be a positive odd number");
    const auto half = static_cast<std::ptrdiff_t>(window / 2);
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    std::vector<double> out(x.size()), buf;
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto lo = std::max<std::ptrdiff_t>(0, k - half);
        const auto hi = std::min<std::ptrdiff_t>(n, k + half + 1);
        buf.assign(x.begin() + lo, x.begin() + hi);
        const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2);
        std::nth_element(buf.begin(), mid, buf.end());
        double m = *mid;
        if (buf.size() % 2 == 0)
            m = 0.5 * (m + *std::max_element(buf.begin(), mid));
        out[static_cast<std::size_t>(k)] = m;
    }
    return out;
}

} // namespace

AttenuationComponent component_from_difference(const S21Trace& reference,
                                               const S21Trace& with_component, std::string name,
                                               int median_window) {
    const auto& fw = with_component.freqs();
    const auto& sw = with_component.s21();
    std::vector<double> freqs, diff;
    for (std::size_t k = 0; k < reference.size(); ++k) {
        const double f = reference.freqs()[k];
        if (f < fw.front() || f > fw.back())
            continue;
        const auto it = std::lower_bound(fw.begin(), fw.end(), f);
        const auto j = static_cast<std::size_t>(it - fw.begin());
        double with_db;
        if (fw[j] == f) {
            with_db = magnitude_db(sw[j]);
        } else {
            const double t = (f - fw[j - 1]) / (fw[j] - fw[j - 1]);
            with_db = magnitude_db(sw[j - 1]) + t * (magnitude_db(sw[j]) - magnitude_db(sw[j - 1]));
        }
        freqs.push_back(f);
        diff.push_back(with_db - magnitude_db(reference.s21()[k]));
    }
    if (freqs.empty())
        throw CalibrationError("calibration traces share no frequency range");
    return AttenuationComponent(std::move(name), std::move(freqs), moving_median(diff, median_window));
}

const std::vector<ChainAnchor>& reference_chain_anchors() {
    static const std::vector<ChainAnchor> anchors = {
        {4.02e9, -75.8}, {4.49e9, -76.1}, {4.81e9, -76.5}, {5.34e9, -77.0},
        {6.01e9, -77.9}, {6.16e9, -78.1}, {6.86e9, -79.0},
    };
    return anchors;
}

namespace {

double cable_db(double f) {
    return -4.8 * std::sqrt(f / 1e9);
}

double filter_db(double f) {
    // 8 GHz fifth-order lowpass behind a 20 dB attenuator.
    return -20.0 - 10.0 * std::log10(1.0 + std::pow(f / 8e9, 10.0));
}

} // namespace

AttenuationChain reference_chain() {
    std::vector<double> grid;
    for (int k = 0; k <= 80; ++k)
        grid.push_back(3.5e9 + 50e6 * k);
    for (const auto& a : reference_chain_anchors())
        grid.push_back(a.f);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<double> cable, attenuator, filter;
    for (double f : grid) {
        cable.push_back(cable_db(f));
        attenuator.push_back(-46.0);
        filter.push_back(filter_db(f));
    }
    std::vector<double> bond_f{grid.front()}, bond_db;
    for (const auto& a : reference_chain_anchors()) {
        bond_f.push_back(a.f);
        bond_db.push_back(a.total_db - (cable_db(a.f) - 46.0 + filter_db(a.f)));
    }
    bond_f.push_back(grid.back());
    bond_db.insert(bond_db.begin(), bond_db.front());
    bond_db.push_back(bond_db.back());

    AttenuationChain chain;
    chain.components.emplace_back("cable", grid, std::move(cable));
    chain.components.emplace_back("attenuator", grid, std::move(attenuator));
    chain.components.emplace_back("filter+attenuator", grid, std::move(filter));
    chain.components.emplace_back("bonding", std::move(bond_f), std::move(bond_db));
    return chain;
}

double photon_number(double p_in, double f, double qc, double qi) {
    if (!(p_in >= 0.0) || !(f > 0.0) || !(qc > 0.0) || !(qi > 0.0))
        throw DomainError("photon number needs p_in >= 0 and positive f, Qc, Qi");
    const double ql_inv = 1.0 / qc + 1.0 / qi;
    return 4.0 / (2.0 * constants::pi * f * qc) / (ql_inv * ql_inv) * p_in / (constants::planck * f);
}

double on_chip_power_dbm(double vna_dbm, double room_temperature_db, const AttenuationChain& chain,
                         double f) {
    return vna_dbm + room_temperature_db + total_attenuation(chain, f);
}

void save_chain(std::ostream& out, const AttenuationChain& chain) {
    nlohmann::json j;
    j["components"] = nlohmann::json::array();
    for (const auto& c : chain.components)
        j["components"].push_back({{"name", c.name()}, {"freq_hz", c.freqs()}, {"atten_db", c.atten_db()}});
    out << j.dump(1) << '\n';
}

AttenuationChain load_chain(std::istream& in) {
    AttenuationChain chain;
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        for (const auto& c : j.at("components"))
            chain.components.emplace_back(c.at("name").get<std::string>(),
                                          c.at("freq_hz").get<std::vector<double>>(),
                                          c.at("atten_db").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("attenuation chain: ") + e.what());
    }
    return chain;
}

} // namespace resokit
