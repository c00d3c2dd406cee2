#include "resokit/design.hpp"

#include "resokit/constants.hpp"
#include "resokit/error.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <string>

namespace resokit {

namespace {

// K(k)/K(k') with k' = sqrt(1 - k²).
double k_ratio(double k) {
    return elliptic_k(k) / elliptic_k(std::sqrt(1.0 - k * k));
}

void require_unit_open(double k, const char* name) {
    if (!(k > 0.0 && k < 1.0))
        throw DomainError(std::string(name) + " = " + std::to_string(k) + " outside (0, 1)");
}

} // namespace

double elliptic_k(double k) {
    if (!(k >= 0.0 && k < 1.0))
        throw DomainError("elliptic_k: modulus " + std::to_string(k) + " outside [0, 1)");
    double a = 1.0;
    double b = std::sqrt((1.0 - k) * (1.0 + k));
    for (int i = 0; i < 64; ++i) {
        if (std::abs(a - b) <= 1e-15 * a)
            break;
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
    }
    return constants::pi / (a + b);
}

CpwGeometry CpwGeometry::from_gap(double w, double gap, double length, double eps_sub, double h) {
    CpwGeometry geom;
    geom.w = w;
    geom.g = w + 2.0 * gap;
    geom.h = h;
    geom.length = length;
    geom.eps_sub = eps_sub;
    geom.validate();
    return geom;
}

double CpwGeometry::k2() const {
    const double q = constants::pi / (2.0 * h);
    return std::tanh(q * w) / std::tanh(q * g);
}

void CpwGeometry::validate() const {
    if (!(w > 0.0 && w < g))
        throw DomainError("CPW geometry requires 0 < w < g");
    if (!(h > 0.0))
        throw DomainError("CPW geometry requires h > 0");
    if (!(length > 0.0))
        throw DomainError("CPW geometry requires length > 0");
    if (!(eps_sub >= 1.0))
        throw DomainError("CPW geometry requires eps_sub >= 1");
}

double AsrGeometry::fill_ratio() const {
    const double ro = r_out();
    if (!(ro + r_in > 0.0))
        return 0.0;
    return (ro - r_in) / (ro + r_in);
}

void AsrGeometry::validate() const {
    if (!(w > 0.0 && pitch >= w))
        throw DomainError("ASR geometry requires pitch >= w > 0");
    if (turns < 0)
        throw DomainError("ASR geometry requires a non-negative number of turns");
    if (!(r_in >= 0.0))
        throw DomainError("ASR geometry requires r_in >= 0");
    if (!(eps_sub >= 1.0))
        throw DomainError("ASR geometry requires eps_sub >= 1");
}

double cpw_eps_eff(const CpwGeometry& geom) {
    geom.validate();
    const double k1 = geom.k1();
    const double k2 = geom.k2();
    require_unit_open(k1, "k1");
    require_unit_open(k2, "k2");
    // q = K(k1')/K(k1) · K(k2)/K(k2')
    const double q = k_ratio(k2) / k_ratio(k1);
    return (1.0 + geom.eps_sub * q) / (1.0 + q);
}

double cpw_frequency(const CpwGeometry& geom) {
    return constants::speed_of_light / (4.0 * geom.length * std::sqrt(cpw_eps_eff(geom)));
}

double cpw_impedance(const CpwGeometry& geom) {
    const double eps_eff = cpw_eps_eff(geom);
    const double sum = k_ratio(geom.k1()) + k_ratio(geom.k2());
    return 60.0 * constants::pi / std::sqrt(eps_eff) / sum;
}

double cpw_length_for_frequency(const CpwGeometry& geom, double frequency) {
    if (!(frequency > 0.0))
        throw DomainError("cpw_length_for_frequency: frequency must be positive");
    return constants::speed_of_light / (4.0 * frequency * std::sqrt(cpw_eps_eff(geom)));
}

double cpw_gap_for_impedance(double w, double target_ohm, double eps_sub, double h) {
    if (!(w > 0.0) || !(target_ohm > 0.0))
        throw DomainError("cpw_gap_for_impedance: width and target must be positive");
    auto residual = [&](double gap) {
        return cpw_impedance(CpwGeometry::from_gap(w, gap, 1.0, eps_sub, h)) - target_ohm;
    };
    double lo = 1e-3 * w;
    double hi = 100.0 * w;
    if (residual(lo) * residual(hi) > 0.0)
        throw DomainError("cpw_gap_for_impedance: target impedance not reachable by any gap");
    std::uintmax_t iters = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-15 * std::abs(a); };
    const auto [a, b] = boost::math::tools::toms748_solve(residual, lo, hi, tol, iters);
    return 0.5 * (a + b);
}

double asr_eps_eff(const AsrGeometry& geom) {
    return 0.5 * (1.0 + geom.eps_sub);
}

double asr_frequency(const AsrGeometry& geom, const CoilConstants& consts) {
    geom.validate();
    if (geom.turns < 1)
        throw DomainError("asr_frequency requires at least one turn");
    const double ro = geom.r_out();
    return consts.xi * constants::speed_of_light / std::sqrt(asr_eps_eff(geom)) * geom.pitch /
           (2.0 * constants::pi * ro * ro);
}

double asr_inductance(const AsrGeometry& geom, const CoilConstants& consts) {
    geom.validate();
    if (geom.turns == 0)
        return 0.0;
    const double rho = geom.fill_ratio();
    if (!(rho > 0.0))
        throw DomainError("asr_inductance: fill ratio must be positive");
    if (!(consts.c2 / rho > 0.0))
        throw DomainError("asr_inductance: c2/rho must be positive");
    const double n2 = static_cast<double>(geom.turns) * geom.turns;
    return constants::mu0 * n2 * (geom.r_out() + geom.r_in) * consts.c1 / 2.0 *
           (std::log(consts.c2 / rho) + consts.c3 * rho + consts.c4 * rho * rho);
}

double asr_impedance(const AsrGeometry& geom, const CoilConstants& consts) {
    const double inductance = asr_inductance(geom, consts);
    if (inductance == 0.0)
        return 0.0;
    return 2.0 * constants::pi * asr_frequency(geom, consts) * inductance;
}

double asr_voltage_profile(const AsrGeometry& geom, double x, double v0) {
    const double ro = geom.r_out();
    if (!(x >= 0.0 && x <= ro))
        throw DomainError("asr_voltage_profile: x outside [0, r_out]");
    const double u = x / ro;
    return v0 * std::cos(constants::pi * u * u);
}

} // namespace resokit
