#include "resokit/io/records.hpp"

#include "resokit/error.hpp"

#include <openssl/evp.h>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#ifndef RESOKIT_VERSION
#define RESOKIT_VERSION "0.0.0"
#endif

namespace resokit::io {

std::string toolkit_version() {
    return RESOKIT_VERSION;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 computation failed");
    std::string hex;
    char buf[3];
    for (unsigned int k = 0; k < len; ++k) {
        std::snprintf(buf, sizeof buf, "%02x", digest[k]);
        hex += buf;
    }
    return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Provenance make_provenance(const std::vector<std::filesystem::path>& inputs) {
    Provenance p;
    for (const auto& in : inputs)
        p.inputs.push_back({in.string(), sha256_file(in)});
    p.version = toolkit_version();
    p.timestamp = utc_timestamp();
    return p;
}

Json ResultsRecord::to_json() const {
    Json inputs = Json::array();
    for (const auto& in : provenance.inputs)
        inputs.push_back({{"path", in.path}, {"sha256", in.sha256}});
    return {{"kind", kind},
            {"payload", payload},
            {"provenance", {{"inputs", inputs}, {"version", provenance.version},
                            {"timestamp", provenance.timestamp}}}};
}

ResultsRecord ResultsRecord::from_json(const Json& j) {
    ResultsRecord r;
    r.kind = j.at("kind").get<std::string>();
    r.payload = j.at("payload");
    const Json& p = j.at("provenance");
    for (const auto& in : p.at("inputs"))
        r.provenance.inputs.push_back({in.at("path").get<std::string>(), in.at("sha256").get<std::string>()});
    r.provenance.version = p.at("version").get<std::string>();
    r.provenance.timestamp = p.at("timestamp").get<std::string>();
    return r;
}

void append_records(const std::filesystem::path& path, const std::vector<ResultsRecord>& records) {
    std::string text;
    for (const auto& r : records)
        text += r.to_json().dump() + '\n';
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0)
        throw IoError("cannot open results file '" + path.string() + "'");
    if (::flock(fd, LOCK_EX) != 0) {
        ::close(fd);
        throw IoError("cannot lock results file '" + path.string() + "'");
    }
    std::size_t done = 0;
    while (done < text.size()) {
        const ssize_t n = ::write(fd, text.data() + done, text.size() - done);
        if (n <= 0) {
            ::flock(fd, LOCK_UN);
            ::close(fd);
            throw IoError("write to '" + path.string() + "' failed");
        }
        done += static_cast<std::size_t>(n);
    }
    ::flock(fd, LOCK_UN);
    ::close(fd);
}

std::vector<ResultsRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open results file '" + path.string() + "'");
    std::vector<ResultsRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            out.push_back(ResultsRecord::from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw ParseError(std::string("malformed record: ") + e.what(), lineno);
        }
    }
    return out;
}

Json to_json(const ResonanceFit& fit) {
    return {{"f0_hz", fit.f0},
            {"ql", fit.ql},
            {"qc_mag", fit.qc_mag},
            {"phi", fit.phi},
            {"qi", fit.qi},
            {"delay_ns", fit.delay_ns()},
            {"amplitude", fit.amplitude},
            {"alpha", fit.alpha},
            {"diameter", fit.diameter()},
            {"physical", fit.physical},
            {"noise_sigma", fit.noise_sigma},
            {"iterations", fit.iterations},
            {"sigma",
             {{"f0_hz", fit.sigma.f0},
              {"ql", fit.sigma.ql},
              {"qc_mag", fit.sigma.qc_mag},
              {"phi", fit.sigma.phi},
              {"qi", fit.sigma.qi},
              {"delay_ns", fit.sigma.tau * 1e9},
              {"amplitude", fit.sigma.amplitude},
              {"alpha", fit.sigma.alpha}}}};
}

ResonanceFit resonance_fit_from_json(const Json& j) {
    ResonanceFit f;
    try {
        f.f0 = j.at("f0_hz").get<double>();
        f.ql = j.at("ql").get<double>();
        f.qc_mag = j.at("qc_mag").get<double>();
        f.phi = j.at("phi").get<double>();
        f.qi = j.at("qi").get<double>();
        f.tau = j.at("delay_ns").get<double>() * 1e-9;
        f.amplitude = j.at("amplitude").get<double>();
        f.alpha = j.at("alpha").get<double>();
        f.physical = j.value("physical", true);
        f.noise_sigma = j.value("noise_sigma", 0.0);
        f.iterations = j.value("iterations", 0);
        if (j.contains("sigma")) {
            const Json& s = j.at("sigma");
            f.sigma.f0 = s.value("f0_hz", 0.0);
            f.sigma.ql = s.value("ql", 0.0);
            f.sigma.qc_mag = s.value("qc_mag", 0.0);
            f.sigma.phi = s.value("phi", 0.0);
            f.sigma.qi = s.value("qi", 0.0);
            f.sigma.tau = s.value("delay_ns", 0.0) * 1e-9;
            f.sigma.amplitude = s.value("amplitude", 0.0);
            f.sigma.alpha = s.value("alpha", 0.0);
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("resonance fit record: ") + e.what());
    }
    return f;
}

Json to_json(const TlsFit& fit) {
    Json cov = Json::array();
    for (int r = 0; r < 4; ++r) {
        Json row = Json::array();
        for (int c = 0; c < 4; ++c)
            row.push_back(fit.covariance(r, c));
        cov.push_back(row);
    }
    return {{"p_delta_tls", fit.params.p_delta_tls},
            {"n_c", fit.params.n_c},
            {"beta", fit.params.beta},
            {"delta_e", fit.params.delta_e},
            {"sigma",
             {{"p_delta_tls", fit.sigma(0)}, {"n_c", fit.sigma(1)}, {"beta", fit.sigma(2)},
              {"delta_e", fit.sigma(3)}}},
            {"covariance", cov},
            {"qi0", fit.qi0},
            {"qi_high", fit.qi_high},
            {"sigma_qi0", fit.sigma_qi0},
            {"sigma_qi_high", fit.sigma_qi_high},
            {"weighted", fit.weighted},
            {"iterations", fit.iterations},
            {"warnings", fit.warnings}};
}

Json to_json(const field::ParticipationReport& r) {
    const auto& d = r.diagnostics;
    return {{"label", r.label},
            {"p_ma", r.p_ma},
            {"p_ms", r.p_ms},
            {"p_sa", r.p_sa},
            {"p_tot", r.p_tot},
            {"edge", {{"p_ma", r.edge_ma}, {"p_ms", r.edge_ms}, {"p_sa", r.edge_sa}}},
            {"diagnostics",
             {{"cells", d.cells},
              {"unknowns", d.unknowns},
              {"refinement", d.refinement},
              {"total_energy_j", d.total_energy},
              {"energy_change", d.energy_change},
              {"max_relative_change", d.max_relative_change},
              {"relative_residual", d.relative_residual},
              {"converged", d.converged}}}};
}

Json to_json(const LogNormalFit& fit) {
    return {{"x0", fit.x0}, {"sigma", fit.sigma}, {"ks_statistic", fit.ks_statistic},
            {"samples", fit.samples}};
}

Json to_json(const Regression& reg) {
    return {{"slope", reg.slope},         {"slope_err", reg.slope_err},
            {"intercept", reg.intercept}, {"intercept_err", reg.intercept_err},
            {"r_squared", reg.r_squared}, {"points", reg.points}};
}

Json to_json(const Histogram& hist) {
    return {{"edges", hist.edges}, {"counts", hist.counts}};
}

Json chain_summary(const AttenuationChain& chain) {
    Json comps = Json::array();
    for (const auto& c : chain.components)
        comps.push_back({{"name", c.name()},
                         {"points", c.freqs().size()},
                         {"f_min_hz", c.freqs().front()},
                         {"f_max_hz", c.freqs().back()}});
    Json anchors = Json::array();
    for (const auto& a : reference_chain_anchors()) {
        bool inside = !chain.components.empty();
        for (const auto& c : chain.components)
            inside = inside && c.covers(a.f);
        if (inside)
            anchors.push_back({{"f_hz", a.f}, {"total_db", total_attenuation(chain, a.f)}});
    }
    return {{"components", comps}, {"totals", anchors}};
}

} // namespace resokit::io
