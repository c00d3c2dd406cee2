#include "resokit/cli.hpp"

#include "resokit/calibration.hpp"
#include "resokit/constants.hpp"
#include "resokit/design.hpp"
#include "resokit/error.hpp"
#include "resokit/field/participation.hpp"
#include "resokit/io/config.hpp"
#include "resokit/io/plot.hpp"
#include "resokit/io/records.hpp"
#include "resokit/io/trace_io.hpp"
#include "resokit/stats.hpp"
#include "resokit/tls.hpp"
#include "resokit/trace_fit.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <variant>

#ifndef RESOKIT_DATA_DIR
#define RESOKIT_DATA_DIR "data"
#endif

namespace resokit::cli {

namespace fs = std::filesystem;
using io::Json;
using io::ResultsRecord;

namespace {

constexpr std::uint64_t default_seed = 1729;

struct Context {
    io::Config config;
    std::map<std::string, double> tolerances;
    std::uint64_t seed = default_seed;
    std::optional<fs::path> out_dir;

    double tolerance(const std::string& key, double fallback) const {
        const auto it = tolerances.find(key);
        return it == tolerances.end() ? fallback : it->second;
    }
};

// Everything a command produces. Nothing reaches the filesystem or stdout
// until the command has finished without error.
struct Output {
    std::vector<ResultsRecord> records;
    std::vector<std::pair<std::string, std::string>> files;
    std::ostringstream text;
    int status = 0;

    void add(std::string kind, Json payload, const std::vector<fs::path>& inputs = {}) {
        records.push_back({std::move(kind), std::move(payload), io::make_provenance(inputs)});
    }
};

void require_file(const fs::path& p) {
    if (!fs::is_regular_file(p))
        throw IoError("input file '" + p.string() + "' does not exist");
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void render(std::ostream& os, const Json& j, const std::string& prefix) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        const Json& v = it.value();
        if (v.is_object()) {
            render(os, v, key);
            continue;
        }
        os << "  " << key << std::string(key.size() < 28 ? 28 - key.size() : 1, ' ');
        if (v.is_number_float())
            os << num(v.get<double>());
        else if (v.is_array() && v.size() > 8)
            os << "[" << v.size() << " values]";
        else if (v.is_string())
            os << v.get<std::string>();
        else
            os << v.dump();
        os << '\n';
    }
}

std::string stem_of(const fs::path& p) {
    return p.stem().string();
}

// Numeric table with an optional header row; columns are addressed by name.
struct Table {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    const std::vector<double>* column(const std::string& name) const {
        for (std::size_t k = 0; k < names.size(); ++k)
            if (names[k] == name)
                return &columns[k];
        return nullptr;
    }
    const std::vector<double>& require(const std::string& name, const fs::path& path) const {
        const auto* c = column(name);
        if (!c)
            throw ParseError("'" + path.string() + "' has no column '" + name + "'");
        return *c;
    }
};

Table read_table(const fs::path& path, const std::vector<std::string>& default_names) {
    require_file(path);
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    Table t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::vector<std::string> toks;
        for (std::string tok; ss >> tok;)
            toks.push_back(tok);
        if (toks.empty())
            continue;
        if (t.names.empty()) {
            const bool header = std::isalpha(static_cast<unsigned char>(toks[0][0])) || toks[0][0] == '_';
            if (header) {
                t.names = toks;
                t.columns.resize(toks.size());
                continue;
            }
            if (toks.size() > default_names.size())
                throw ParseError("too many columns", lineno);
            t.names.assign(default_names.begin(), default_names.begin() + static_cast<std::ptrdiff_t>(toks.size()));
            t.columns.resize(toks.size());
        }
        if (toks.size() != t.names.size())
            throw ParseError("expected " + std::to_string(t.names.size()) + " columns, got " +
                                 std::to_string(toks.size()),
                             lineno);
        for (std::size_t k = 0; k < toks.size(); ++k) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(toks[k], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != toks[k].size())
                throw ParseError("not a number: '" + toks[k] + "'", lineno);
            t.columns[k].push_back(v);
        }
    }
    if (t.columns.empty() || t.columns[0].empty())
        throw ParseError("'" + path.string() + "' has no data rows");
    return t;
}

bool is_records_file(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".jsonl" || ext == ".records";
}

// ---------------------------------------------------------------- geometry

struct Device {
    const char* label;
    bool cpw;
    double w_um;
    double f_ghz;
};

constexpr Device reference_devices[] = {
    {"CPW1", true, 20, 4.49},  {"CPW2", true, 12, 5.34},  {"CPW3", true, 8, 6.17},
    {"ASR1", false, 12, 4.02}, {"ASR2", false, 10, 4.81}, {"ASR3", false, 8, 6.00},
    {"ASR4", false, 7, 6.85},
};

using Geometry = std::variant<CpwGeometry, AsrGeometry>;

struct NamedGeometry {
    std::string label;
    Geometry geometry;
};

const Device& find_device(const std::string& label) {
    for (const auto& d : reference_devices)
        if (label == d.label)
            return d;
    throw UsageError("unknown preset '" + label + "' (expected CPW1-3 or ASR1-4)");
}

Geometry device_geometry(const Device& d) {
    const double w = d.w_um * 1e-6;
    if (d.cpw) {
        CpwGeometry g = CpwGeometry::from_gap(w, cpw_gap_for_impedance(w), 1e-3);
        g.length = cpw_length_for_frequency(g, d.f_ghz * 1e9);
        return g;
    }
    return AsrGeometry{w, 2.0 * w, 12, 0.0, constants::eps_silicon};
}

NamedGeometry geometry_from_config(const io::Config& c, bool need_length) {
    if (const auto preset = c.string("preset"))
        return {*preset, device_geometry(find_device(*preset))};
    const std::string kind = c.string_or("kind", "");
    const double eps = c.number_or("eps_sub", constants::eps_silicon);
    const double w = c.require_number("width_um") * 1e-6;
    const std::string label = c.string_or("label", kind);
    if (kind == "cpw") {
        const double h = c.number_or("h_um", 1500.0) * 1e-6;
        const double gap = c.has("gap_um") ? *c.number("gap_um") * 1e-6
                                           : cpw_gap_for_impedance(w, c.number_or("target_ohm", 50.0), eps, h);
        CpwGeometry g = CpwGeometry::from_gap(w, gap, 1e-3, eps, h);
        if (c.has("length_um"))
            g.length = *c.number("length_um") * 1e-6;
        else if (c.has("frequency_ghz"))
            g.length = cpw_length_for_frequency(g, *c.number("frequency_ghz") * 1e9);
        else if (need_length)
            throw UsageError("cpw design needs length_um or frequency_ghz");
        g.validate();
        return {label, g};
    }
    if (kind == "asr") {
        const double turns = c.number_or("turns", 12.0);
        if (turns != std::floor(turns))
            throw UsageError("turns must be an integer");
        AsrGeometry g{w, c.number_or("pitch_um", 2.0 * w * 1e6) * 1e-6, static_cast<int>(turns),
                      c.number_or("r_in_um", 0.0) * 1e-6, eps};
        g.validate();
        return {label, g};
    }
    throw UsageError("set kind = cpw|asr or preset = <label> in the configuration");
}

Json design_payload(const NamedGeometry& ng) {
    if (const auto* g = std::get_if<CpwGeometry>(&ng.geometry)) {
        return {{"label", ng.label},
                {"kind", "cpw"},
                {"width_um", g->w * 1e6},
                {"gap_um", g->gap() * 1e6},
                {"length_um", g->length * 1e6},
                {"eps_sub", g->eps_sub},
                {"h_um", g->h * 1e6},
                {"eps_eff", cpw_eps_eff(*g)},
                {"impedance_ohm", cpw_impedance(*g)},
                {"frequency_hz", cpw_frequency(*g)}};
    }
    const auto& g = std::get<AsrGeometry>(ng.geometry);
    return {{"label", ng.label},
            {"kind", "asr"},
            {"width_um", g.w * 1e6},
            {"pitch_um", g.pitch * 1e6},
            {"turns", g.turns},
            {"r_in_um", g.r_in * 1e6},
            {"r_out_um", g.r_out() * 1e6},
            {"eps_sub", g.eps_sub},
            {"eps_eff", asr_eps_eff(g)},
            {"inductance_nh", asr_inductance(g) * 1e9},
            {"impedance_ohm", asr_impedance(g)},
            {"frequency_hz", asr_frequency(g)}};
}

// ---------------------------------------------------------------- commands

void cmd_design(const Context& ctx, Output& out, const std::vector<fs::path>& inputs) {
    out.add("design", design_payload(geometry_from_config(ctx.config, true)), inputs);
}

field::SolverDomain domain_from_config(const io::Config& c, const Geometry& geom) {
    field::LossyLayerSpec layer;
    layer.thickness = c.number_or("layer_nm", 3.0) * 1e-9;
    layer.eps = c.number_or("layer_eps", 10.0);
    layer.edge_extent = c.number_or("edge_nm", 100.0) * 1e-9;
    field::SolverDomain d = std::visit(
        [&](const auto& g) {
            if constexpr (std::is_same_v<std::decay_t<decltype(g)>, CpwGeometry>)
                return field::SolverDomain::for_cpw(g, layer);
            else
                return field::SolverDomain::for_asr(g, layer);
        },
        geom);
    if (c.has("box_half_width_um"))
        d.domain_half_width = *c.number("box_half_width_um") * 1e-6;
    if (c.has("box_height_um"))
        d.domain_height = *c.number("box_height_um") * 1e-6;
    d.substrate_thickness = c.number_or("substrate_um", d.substrate_thickness * 1e6) * 1e-6;
    d.film_thickness = c.number_or("film_nm", d.film_thickness * 1e9) * 1e-9;
    d.mesh.h_min = c.number_or("h_min_nm", d.mesh.h_min * 1e9) * 1e-9;
    d.mesh.growth = c.number_or("growth", d.mesh.growth);
    d.mesh.near_cap_fraction = c.number_or("near_cap_fraction", d.mesh.near_cap_fraction);
    d.mesh.refinement = static_cast<int>(c.number_or("refinement", 0.0));
    return d;
}

void cmd_pr(const Context& ctx, Output& out, const std::vector<fs::path>& inputs,
            const std::string& mesh_out) {
    const NamedGeometry ng = geometry_from_config(ctx.config, false);
    const field::SolverDomain domain = domain_from_config(ctx.config, ng.geometry);
    field::ReportOptions opts;
    opts.mesh = domain.mesh;
    opts.check_convergence = ctx.config.flag_or("check_convergence", true);
    opts.convergence_tolerance = ctx.tolerance("convergence", 0.05);
    field::ParticipationReport report = field::participation_report(domain, opts);
    report.label = ng.label;
    Json payload = io::to_json(report);
    payload["geometry"] = design_payload(ng);
    out.add("participation", payload, inputs);
    out.text << ng.label << ": p_MA " << num(report.p_ma * 1e5) << "e-5, p_MS " << num(report.p_ms * 1e5)
             << "e-5, p_SA " << num(report.p_sa * 1e5) << "e-5, p_tot " << num(report.p_tot * 1e5)
             << "e-5 (" << report.diagnostics.cells << " cells, " << num(report.diagnostics.seconds)
             << " s)\n";
    if (!mesh_out.empty()) {
        const field::FieldSolution sol =
            std::holds_alternative<CpwGeometry>(ng.geometry)
                ? field::solve_cpw_cross_section(domain)
                : field::solve_asr_axisymmetric(domain,
                                                field::ring_potentials(std::get<AsrGeometry>(ng.geometry)));
        std::ostringstream mesh;
        field::write_mesh(mesh, sol);
        out.files.emplace_back(mesh_out, mesh.str());
    }
}

struct FitArgs {
    std::vector<std::string> traces;
    bool allow_unphysical = false;
    std::optional<double> power_dbm;
    bool plot = false;
};

void cmd_fit(const Context& ctx, Output& out, const FitArgs& args) {
    if (args.traces.empty())
        throw UsageError("fit needs at least one trace file");
    for (const auto& t : args.traces)
        require_file(t);
    FitOptions opts;
    opts.allow_unphysical = args.allow_unphysical || ctx.config.flag_or("allow_unphysical", false);
    std::vector<ResonanceFit> fits;
    for (const auto& t : args.traces) {
        S21Trace trace = io::load_trace(t);
        const ResonanceFit fit = fit_resonance(trace, opts);
        Json payload = io::to_json(fit);
        payload["label"] = stem_of(t);
        payload["points"] = trace.size();
        if (args.power_dbm)
            payload["power_dbm"] = *args.power_dbm;
        out.add("resonance_fit", payload, {t});
        fits.push_back(fit);
        if (args.plot) {
            std::vector<double> f, re, im, mre, mim, mag, mmag;
            for (std::size_t k = 0; k < trace.size(); ++k) {
                const Complex m = notch_s21(fit.parameters(), trace.freqs()[k]);
                f.push_back(trace.freqs()[k]);
                re.push_back(trace.s21()[k].real());
                im.push_back(trace.s21()[k].imag());
                mre.push_back(m.real());
                mim.push_back(m.imag());
                mag.push_back(20.0 * std::log10(std::abs(trace.s21()[k])));
                mmag.push_back(20.0 * std::log10(std::abs(m)));
            }
            out.files.emplace_back(stem_of(t) + "_fit.csv",
                                   io::csv_table({"freq_hz", "re", "im", "model_re", "model_im"},
                                                 {f, re, im, mre, mim}));
            io::PlotSpec mag_plot{stem_of(t) + ": |S21|", "frequency (Hz)", "|S21| (dB)", false, false,
                                  {{"data", f, mag, true}, {"fit", f, mmag, false}}};
            out.files.emplace_back(stem_of(t) + "_fit.svg", io::svg_plot(mag_plot));
            io::PlotSpec circle{stem_of(t) + ": complex plane", "Re S21", "Im S21", false, false,
                                {{"data", re, im, true}, {"fit", mre, mim, false}}};
            out.files.emplace_back(stem_of(t) + "_circle.svg", io::svg_plot(circle));
        }
    }
    if (fits.size() > 1) {
        std::vector<fs::path> paths(args.traces.begin(), args.traces.end());
        out.add("qi_harmonic_mean", {{"fits", fits.size()}, {"qi", harmonic_mean_qi(fits)}}, paths);
    }
}

struct PhotonArgs {
    std::string results;
    std::optional<double> vna_dbm, f_ghz, qc, qi;
    double room_db = -16.0;
    std::string chain;
    std::optional<double> atten_db;
};

AttenuationChain chain_for(const PhotonArgs& a) {
    if (a.atten_db)
        return AttenuationChain{{AttenuationComponent("flat", {0.0, 1e15}, {*a.atten_db, *a.atten_db})}};
    if (!a.chain.empty()) {
        require_file(a.chain);
        std::ifstream in(a.chain);
        return load_chain(in);
    }
    return reference_chain();
}

Json photon_payload(double vna_dbm, double room_db, const AttenuationChain& chain, double f, double qc,
                    double qi) {
    const double chain_db = total_attenuation(chain, f);
    const double p_dbm = on_chip_power_dbm(vna_dbm, room_db, chain, f);
    const double p_w = dbm_to_watts(p_dbm);
    return {{"f_hz", f},           {"vna_dbm", vna_dbm}, {"room_db", room_db}, {"chain_db", chain_db},
            {"p_in_dbm", p_dbm},   {"p_in_w", p_w},      {"qc", qc},           {"qi", qi},
            {"n_avg", photon_number(p_w, f, qc, qi)}};
}

void cmd_photons(const Context& ctx, Output& out, const PhotonArgs& a) {
    std::vector<fs::path> inputs;
    if (!a.chain.empty())
        inputs.emplace_back(a.chain);
    if (!a.results.empty()) {
        require_file(a.results);
        inputs.emplace_back(a.results);
        const AttenuationChain chain = chain_for(a);
        int used = 0;
        for (const auto& rec : io::read_records(a.results)) {
            if (rec.kind != "resonance_fit")
                continue;
            if (!rec.payload.contains("power_dbm"))
                throw UsageError("resonance_fit record '" + rec.payload.value("label", "") +
                                 "' carries no power_dbm; rerun fit with --power-dbm");
            const ResonanceFit fit = io::resonance_fit_from_json(rec.payload);
            Json p = photon_payload(rec.payload.at("power_dbm").get<double>(), a.room_db, chain, fit.f0,
                                    fit.qc_mag, fit.qi);
            p["qi_err"] = fit.sigma.qi;
            p["label"] = rec.payload.value("label", "");
            out.add("photon_number", p, inputs);
            ++used;
        }
        if (used == 0)
            throw UsageError("no resonance_fit records in '" + a.results + "'");
        return;
    }
    if (!a.vna_dbm || !a.f_ghz || !a.qc || !a.qi)
        throw UsageError("photons needs --results, or all of --vna-dbm --f-ghz --qc --qi");
    (void)ctx;
    out.add("photon_number",
            photon_payload(*a.vna_dbm, a.room_db, chain_for(a), *a.f_ghz * 1e9, *a.qc, *a.qi), inputs);
}

struct TlsArgs {
    std::string input;
    double temperature_mk = 10.0;
    std::optional<double> f_ghz;
    bool linear = false;
    bool plot = false;
};

void cmd_tls(const Context& ctx, Output& out, const TlsArgs& a) {
    if (a.input.empty())
        throw UsageError("tls needs an input table or results file");
    require_file(a.input);
    const double temperature = ctx.config.number_or("temperature_mk", a.temperature_mk) * 1e-3;
    std::vector<PowerSweepPoint> pts;
    auto default_f = [&]() {
        if (!a.f_ghz)
            throw UsageError("input has no frequency column; pass --f-ghz");
        return *a.f_ghz * 1e9;
    };
    if (is_records_file(a.input)) {
        for (const auto& rec : io::read_records(a.input))
            if (rec.kind == "photon_number")
                pts.push_back({rec.payload.at("n_avg").get<double>(), rec.payload.at("qi").get<double>(),
                               rec.payload.value("qi_err", 0.0), rec.payload.at("f_hz").get<double>(),
                               temperature});
    } else {
        const Table t = read_table(a.input, {"n_avg", "qi", "qi_err", "f_hz", "temperature_k"});
        const auto& n = t.require("n_avg", a.input);
        const auto& qi = t.require("qi", a.input);
        const auto* err = t.column("qi_err");
        const auto* f = t.column("f_hz");
        const auto* temp = t.column("temperature_k");
        const double f_fallback = f ? 0.0 : default_f();
        for (std::size_t k = 0; k < n.size(); ++k)
            pts.push_back({n[k], qi[k], err ? (*err)[k] : 0.0, f ? (*f)[k] : f_fallback,
                           temp ? (*temp)[k] : temperature});
    }
    TlsFitOptions opts;
    opts.log_parameters = !a.linear;
    const TlsFit fit = fit_tls(pts, opts);
    Json payload = io::to_json(fit);
    payload["points"] = pts.size();
    payload["temperature_k"] = temperature;
    out.add("tls_fit", payload, {a.input});
    out.text << "Qi,0 = " << num(fit.qi0) << " +/- " << num(fit.sigma_qi0) << ", Qi,high = " << num(fit.qi_high)
             << " +/- " << num(fit.sigma_qi_high) << "\n";
    for (const auto& w : fit.warnings)
        out.text << "warning: " << w << '\n';
    if (a.plot) {
        std::vector<double> n, qi, model;
        for (const auto& p : pts) {
            n.push_back(p.n_avg);
            qi.push_back(p.qi);
            model.push_back(1.0 / tls_loss_model(p.n_avg, p.f, p.temperature, fit.params));
        }
        out.files.emplace_back("tls_fit.csv", io::csv_table({"n_avg", "qi", "model_qi"}, {n, qi, model}));
        io::PlotSpec spec{"Qi versus photon number", "mean photon number", "Qi", true, true,
                          {{"data", n, qi, true}, {"model", n, model, false}}};
        out.files.emplace_back("tls_fit.svg", io::svg_plot(spec));
    }
}

struct CalibrateArgs {
    std::string reference, with, name = "component", chain, save = "chain.json";
    int median_window = 11;
    bool synthetic = false;
    std::vector<double> at_ghz;
};

void cmd_calibrate(const Context& ctx, Output& out, const CalibrateArgs& a) {
    std::vector<fs::path> inputs;
    AttenuationChain chain;
    if (a.synthetic)
        chain = reference_chain();
    if (!a.chain.empty()) {
        require_file(a.chain);
        inputs.emplace_back(a.chain);
        std::ifstream in(a.chain);
        for (auto& c : load_chain(in).components)
            chain.components.push_back(std::move(c));
    }
    if (!a.reference.empty() || !a.with.empty()) {
        if (a.reference.empty() || a.with.empty())
            throw UsageError("calibrate needs both --reference and --with");
        require_file(a.reference);
        require_file(a.with);
        inputs.emplace_back(a.reference);
        inputs.emplace_back(a.with);
        const int window = static_cast<int>(ctx.config.number_or("median_window", a.median_window));
        chain.components.push_back(
            component_from_difference(io::load_trace(a.reference), io::load_trace(a.with), a.name, window));
    }
    if (chain.components.empty())
        throw UsageError("calibrate: nothing to do (use --synthetic, --chain or --reference/--with)");
    Json payload = io::chain_summary(chain);
    Json queries = Json::array();
    for (double f : a.at_ghz)
        queries.push_back({{"f_hz", f * 1e9}, {"total_db", total_attenuation(chain, f * 1e9)}});
    payload["queries"] = queries;
    out.add("attenuation_chain", payload, inputs);
    std::ostringstream saved;
    save_chain(saved, chain);
    out.files.emplace_back(a.save, saved.str());
}

struct StatsArgs {
    std::string input, regression;
    int bins = 40;
    double threshold = 6.0;
    int window = 21;
    bool plot = false;
};

void cmd_stats(const Context& ctx, Output& out, const StatsArgs& a) {
    if (a.input.empty() && a.regression.empty())
        throw UsageError("stats needs a loss series and/or --regression table");
    if (!a.input.empty())
        require_file(a.input);
    if (!a.regression.empty())
        require_file(a.regression);
    if (!a.input.empty()) {
        LossTimeSeries series;
        if (is_records_file(a.input)) {
            for (const auto& rec : io::read_records(a.input))
                if (rec.kind == "resonance_fit") {
                    series.timestamps.push_back(static_cast<double>(series.timestamps.size()));
                    series.loss_tangent.push_back(1.0 / rec.payload.at("qi").get<double>());
                }
        } else {
            const Table t = read_table(a.input, {"time_s", "loss_tangent"});
            series.loss_tangent = t.require("loss_tangent", a.input);
            if (const auto* ts = t.column("time_s"))
                series.timestamps = *ts;
            else
                for (std::size_t k = 0; k < series.loss_tangent.size(); ++k)
                    series.timestamps.push_back(static_cast<double>(k));
        }
        series.validate();
        const LogNormalFit fit = fit_lognormal(series.loss_tangent);
        const Histogram hist = histogram(series.loss_tangent, static_cast<std::size_t>(a.bins));
        Json payload = io::to_json(fit);
        payload["histogram"] = io::to_json(hist);
        out.add("lognormal_fit", payload, {a.input});
        if (series.loss_tangent.size() >= 50) {
            JumpOptions jo;
            jo.threshold = ctx.tolerance("jump_threshold", a.threshold);
            jo.window = a.window;
            const auto jumps = detect_jumps(series, jo);
            out.add("jumps", {{"indices", jumps}, {"threshold", jo.threshold}, {"window", jo.window}}, {a.input});
        } else {
            out.text << "note: fewer than 50 points, jump detection skipped\n";
        }
        if (a.plot) {
            std::vector<double> centers, density, pdf;
            const double total = static_cast<double>(series.loss_tangent.size());
            for (std::size_t k = 0; k < hist.counts.size(); ++k) {
                const double lo = hist.edges[k], hi = hist.edges[k + 1];
                centers.push_back(0.5 * (lo + hi));
                density.push_back(static_cast<double>(hist.counts[k]) / (total * (hi - lo)));
                pdf.push_back(lognormal_pdf(centers.back(), fit.x0, fit.sigma));
            }
            out.files.emplace_back("loss_histogram.csv",
                                   io::csv_table({"bin_center", "density", "lognormal_pdf"}, {centers, density, pdf}));
            io::PlotSpec spec{"loss tangent distribution", "loss tangent", "probability density", false, false,
                              {{"data", centers, density, true}, {"log-normal", centers, pdf, false}}};
            out.files.emplace_back("loss_histogram.svg", io::svg_plot(spec));
        }
    }
    if (!a.regression.empty()) {
        const Table t = read_table(a.regression, {"x", "y", "sigma_y"});
        const auto& x = t.require("x", a.regression);
        const auto& y = t.require("y", a.regression);
        Json payload = {{"ols", io::to_json(loglog_regression(x, y))}};
        if (const auto* s = t.column("sigma_y")) {
            std::vector<double> sl;
            for (std::size_t k = 0; k < y.size(); ++k)
                sl.push_back((*s)[k] / y[k]);
            payload["weighted"] = io::to_json(weighted_loglog_regression(x, y, sl));
        }
        out.add("regression", payload, {a.regression});
    }
}

struct ReportRow {
    std::string check;
    double computed;
    double reference;
    std::string tolerance;
    bool pass;
};

void cmd_report(const Context& ctx, Output& out, const std::string& fixtures, bool skip_pr) {
    const fs::path dir = fixtures.empty() ? fs::path(RESOKIT_DATA_DIR) : fs::path(fixtures);
    const fs::path t1 = dir / "table1.csv", t2 = dir / "table2.csv";
    require_file(t1);
    require_file(t2);
    // Both tables carry a text label column; read them by hand.
    auto read_labeled = [](const fs::path& p) {
        std::ifstream in(p);
        std::vector<std::vector<std::string>> rows;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#')
                continue;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            for (std::string cell; std::getline(ss, cell, ',');)
                cells.push_back(cell);
            rows.push_back(cells);
        }
        if (rows.size() < 2)
            throw ParseError("'" + p.string() + "' has no data rows");
        return rows;
    };
    const auto rows1 = read_labeled(t1);
    const auto rows2 = read_labeled(t2);
    auto col = [](const std::vector<std::vector<std::string>>& rows, const std::string& name) {
        for (std::size_t k = 0; k < rows[0].size(); ++k)
            if (rows[0][k] == name)
                return k;
        throw ParseError("fixture column '" + name + "' missing");
    };
    auto value = [](const std::string& s) {
        try {
            return std::stod(s);
        } catch (const std::exception&) {
            throw ParseError("fixture value '" + s + "' is not a number");
        }
    };

    const double tol_z = ctx.tolerance("asr_impedance", 0.02);
    const double tol_cpw = ctx.tolerance("cpw_impedance_ohm", 0.01);
    const double tol_pr = ctx.tolerance("pr", 0.30);
    const double tol_cons = ctx.tolerance("consistency", 0.05);
    const double tol_slope = ctx.tolerance("slope", 0.05);
    const double tol_freq = ctx.tolerance("asr_frequency", 0.15);
    std::vector<ReportRow> rows;
    auto pct = [](double t) { return "+/-" + num(100.0 * t) + "%"; };

    std::map<std::string, Geometry> geoms;
    for (std::size_t r = 1; r < rows1.size(); ++r) {
        const std::string label = rows1[r][col(rows1, "label")];
        const bool cpw = rows1[r][col(rows1, "kind")] == "cpw";
        const double w = value(rows1[r][col(rows1, "w_um")]) * 1e-6;
        const double f = value(rows1[r][col(rows1, "f_ghz")]) * 1e9;
        if (cpw) {
            const double gap = cpw_gap_for_impedance(w);
            CpwGeometry g = CpwGeometry::from_gap(w, gap, 1e-3);
            const double z = cpw_impedance(g);
            const double ee = cpw_eps_eff(g);
            rows.push_back({label + " Z (50 ohm closure)", z, 50.0, "+/-" + num(tol_cpw) + " ohm",
                            std::abs(z - 50.0) <= tol_cpw && ee >= 1.0 && ee <= constants::eps_silicon});
            g.length = cpw_length_for_frequency(g, f);
            geoms[label] = g;
        } else {
            const AsrGeometry g{w, 2.0 * w, 12, 0.0, constants::eps_silicon};
            const double z = asr_impedance(g);
            rows.push_back({label + " Z", z, 810.0, pct(tol_z), std::abs(z / 810.0 - 1.0) <= tol_z});
            const double fc = asr_frequency(g);
            rows.push_back({label + " f (GHz, above measured)", fc * 1e-9, f * 1e-9, "0.." + num(100 * tol_freq) + "%",
                            fc >= f && fc <= f * (1.0 + tol_freq)});
            geoms[label] = g;
        }
    }

    std::vector<double> ptot_ref, pdelta_ref;
    std::map<std::string, double> ptot_calc;
    for (std::size_t r = 1; r < rows2.size(); ++r) {
        const std::string label = rows2[r][col(rows2, "label")];
        const double pdelta = value(rows2[r][col(rows2, "p_delta_tls_1e-8")]) * 1e-8;
        const double qi0 = value(rows2[r][col(rows2, "qi0_1e5")]) * 1e5;
        rows.push_back({label + " Qi0 * p.delta_TLS", qi0 * pdelta, 1.0, pct(tol_cons),
                        std::abs(qi0 * pdelta - 1.0) <= tol_cons});
        ptot_ref.push_back(value(rows2[r][col(rows2, "p_tot_1e-5")]) * 1e-5);
        pdelta_ref.push_back(pdelta);
        if (skip_pr)
            continue;
        const auto it = geoms.find(label);
        if (it == geoms.end())
            throw ParseError("device '" + label + "' missing from table1.csv");
        const field::ParticipationReport pr = std::visit(
            [](const auto& g) { return field::participation_report(g); }, it->second);
        const std::pair<const char*, double> parts[] = {
            {"p_ma_1e-5", pr.p_ma}, {"p_ms_1e-5", pr.p_ms}, {"p_sa_1e-5", pr.p_sa}, {"p_tot_1e-5", pr.p_tot}};
        for (const auto& [name, calc] : parts) {
            const double ref = value(rows2[r][col(rows2, name)]);
            const std::string short_name = std::string(name).substr(0, std::string(name).find("_1e"));
            rows.push_back({label + " " + short_name + " (1e-5)", calc * 1e5, ref, pct(tol_pr),
                            std::abs(calc * 1e5 / ref - 1.0) <= tol_pr});
        }
        ptot_calc[label] = pr.p_tot;
    }
    if (!skip_pr) {
        const char* order[] = {"ASR1", "ASR2", "ASR3", "ASR4", "CPW1", "CPW2", "CPW3"};
        bool ordered = true;
        for (int k = 0; k + 1 < 7; ++k)
            ordered = ordered && ptot_calc.count(order[k]) && ptot_calc.count(order[k + 1]) &&
                      ptot_calc[order[k]] < ptot_calc[order[k + 1]];
        rows.push_back({"p_tot ordering ASR1<...<ASR4<CPW1<CPW2<CPW3", ordered ? 1.0 : 0.0, 1.0, "exact", ordered});
    }
    const Regression reg = loglog_regression(ptot_ref, pdelta_ref);
    rows.push_back({"loss vs p_tot log-log slope", reg.slope, 1.34, "+/-" + num(tol_slope),
                    std::abs(reg.slope - 1.34) <= tol_slope});

    Json checks = Json::array();
    int failed = 0;
    out.text << "check                                        computed     reference    tolerance   result\n";
    for (const auto& row : rows) {
        checks.push_back({{"check", row.check}, {"computed", row.computed}, {"reference", row.reference},
                          {"tolerance", row.tolerance}, {"pass", row.pass}});
        char line[200];
        std::snprintf(line, sizeof line, "%-44s %-12s %-12s %-11s %s\n", row.check.c_str(), num(row.computed).c_str(),
                      num(row.reference).c_str(), row.tolerance.c_str(), row.pass ? "PASS" : "FAIL");
        out.text << line;
        failed += row.pass ? 0 : 1;
    }
    out.text << (failed ? std::to_string(failed) + " check(s) failed\n" : "all checks passed\n");
    out.add("report", {{"checks", checks}, {"failed", failed}, {"pr_skipped", skip_pr}}, {t1, t2});
    out.status = failed ? 1 : 0;
}

struct SynthArgs {
    std::string path;
    double f0_ghz = 6.0, qi = 9.6e6, qc = 1.7e6, phi = 0.1, delay_ns = 50.0;
    double amplitude = 0.02, alpha = 0.7, snr_db = 60.0, span = 10.0;
    int points = 2001;
};

void cmd_synth(const Context& ctx, Output& out, const SynthArgs& a) {
    if (a.path.empty())
        throw UsageError("synth needs an output file name");
    NotchParameters p;
    p.f0 = a.f0_ghz * 1e9;
    p.qc_mag = a.qc;
    p.phi = a.phi;
    // Ql from 1/Ql = 1/Qi + cos φ/|Qc|.
    p.ql = 1.0 / (1.0 / a.qi + std::cos(a.phi) / a.qc);
    p.tau = a.delay_ns * 1e-9;
    p.amplitude = a.amplitude;
    p.alpha = a.alpha;
    if (a.points < static_cast<int>(S21Trace::min_points))
        throw UsageError("synth needs at least 32 points");
    S21Trace trace = synthesize_notch_trace(p, a.span, static_cast<std::size_t>(a.points), a.snr_db, ctx.seed);
    std::ostringstream body;
    if (fs::path(a.path).extension() == ".s2p")
        io::write_touchstone(body, trace);
    else
        io::write_csv_trace(body, trace);
    out.files.emplace_back(a.path, body.str());
    out.add("synthetic_trace",
            {{"file", fs::path(a.path).filename().string()}, {"f0_hz", p.f0}, {"ql", p.ql}, {"qc_mag", p.qc_mag},
             {"phi", p.phi}, {"qi", p.qi()}, {"delay_ns", a.delay_ns}, {"amplitude", p.amplitude},
             {"alpha", p.alpha}, {"snr_db", a.snr_db}, {"points", a.points}, {"span_linewidths", a.span},
             {"seed", ctx.seed}});
}

// ---------------------------------------------------------------- output

// Plot and data files go to --out; only `synth` may write elsewhere.
void commit(const Context& ctx, const Output& out, bool records_format, std::ostream& os,
            bool files_anywhere) {
    if (ctx.out_dir) {
        fs::create_directories(*ctx.out_dir);
        if (!out.records.empty())
            io::append_records(*ctx.out_dir / "results.jsonl", out.records);
    }
    for (const auto& [name, body] : out.files) {
        if (!ctx.out_dir && !files_anywhere)
            continue;
        const fs::path target = ctx.out_dir && fs::path(name).is_relative() ? *ctx.out_dir / name : fs::path(name);
        std::ofstream f(target, std::ios::binary);
        if (!f)
            throw IoError("cannot write '" + target.string() + "'");
        f << body;
    }
    if (records_format) {
        for (const auto& r : out.records)
            os << r.to_json().dump() << '\n';
        return;
    }
    for (const auto& r : out.records) {
        if (r.kind == "report")
            continue;
        os << r.kind << '\n';
        render(os, r.payload, "");
    }
    os << out.text.str();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Superconducting resonator design and loss analysis"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", io::toolkit_version());

    std::string config_path, out_dir, format = "text";
    std::uint64_t seed = default_seed;
    std::vector<std::string> tolerances, settings;
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--out", out_dir, "directory for results.jsonl and plot data");
    app.add_option("--seed", seed, "seed for randomized operations")->capture_default_str();
    app.add_option("--tolerance", tolerances, "tolerance override, key=value (repeatable)");
    app.add_option("--set", settings, "configuration override, key=value (repeatable)");
    app.add_option("--format", format, "text or records")->check(CLI::IsMember({"text", "records"}));

    auto* design = app.add_subcommand("design", "analytic CPW / spiral design values");
    std::string preset;
    design->add_option("--preset", preset, "reference device CPW1-3 / ASR1-4");

    auto* pr = app.add_subcommand("pr", "interface participation ratios from the field solver");
    std::string mesh_out;
    pr->add_option("--preset", preset, "reference device CPW1-3 / ASR1-4");
    pr->add_option("--mesh-out", mesh_out, "write the solved mesh (nodes and elements) to this file in --out");

    auto* fit = app.add_subcommand("fit", "resonance fit of S21 traces (.csv or .s2p)");
    FitArgs fit_args;
    fit->add_option("traces", fit_args.traces, "trace files")->required();
    fit->add_flag("--allow-unphysical", fit_args.allow_unphysical, "return fits with Qi <= 0");
    fit->add_option("--power-dbm", fit_args.power_dbm, "VNA output power recorded with the fit");
    fit->add_flag("--plot", fit_args.plot, "write plot data to --out");

    auto* tls = app.add_subcommand("tls", "TLS loss model fit of Qi versus photon number");
    TlsArgs tls_args;
    tls->add_option("input", tls_args.input, "CSV (n_avg,qi[,qi_err,f_hz,temperature_k]) or .jsonl records")->required();
    tls->add_option("--temperature-mk", tls_args.temperature_mk, "bath temperature")->capture_default_str();
    tls->add_option("--f-ghz", tls_args.f_ghz, "resonance frequency when the input has none");
    tls->add_flag("--linear", tls_args.linear, "optimize linear instead of log parameters");
    tls->add_flag("--plot", tls_args.plot, "write plot data to --out");

    auto* cal = app.add_subcommand("calibrate", "build or extend an input-line attenuation chain");
    CalibrateArgs cal_args;
    cal->add_option("--reference", cal_args.reference, "calibration-line trace");
    cal->add_option("--with", cal_args.with, "trace through the component");
    cal->add_option("--name", cal_args.name, "component name");
    cal->add_option("--chain", cal_args.chain, "existing chain file to extend");
    cal->add_option("--save", cal_args.save, "chain file name inside --out")->capture_default_str();
    cal->add_option("--median-window", cal_args.median_window, "moving-median width")->capture_default_str();
    cal->add_flag("--synthetic", cal_args.synthetic, "start from the bundled synthetic chain");
    cal->add_option("--at-ghz", cal_args.at_ghz, "report the total attenuation at these frequencies");

    auto* photons = app.add_subcommand("photons", "mean photon number from drive power");
    PhotonArgs ph;
    photons->add_option("--results", ph.results, "results file with resonance_fit records");
    photons->add_option("--vna-dbm", ph.vna_dbm, "VNA output power");
    photons->add_option("--f-ghz", ph.f_ghz, "resonance frequency");
    photons->add_option("--qc", ph.qc, "coupling quality factor");
    photons->add_option("--qi", ph.qi, "intrinsic quality factor");
    photons->add_option("--room-db", ph.room_db, "room-temperature attenuation (dB, negative)")->capture_default_str();
    photons->add_option("--chain", ph.chain, "attenuation chain file (default: bundled synthetic chain)");
    photons->add_option("--atten-db", ph.atten_db, "flat chain attenuation instead of a chain file");

    auto* stats = app.add_subcommand("stats", "loss fluctuation statistics and log-log regression");
    StatsArgs st;
    stats->add_option("input", st.input, "CSV (time_s,loss_tangent) or .jsonl with resonance_fit records");
    stats->add_option("--regression", st.regression, "CSV (x,y[,sigma_y]) for the log-log fit");
    stats->add_option("--bins", st.bins, "histogram bins")->capture_default_str();
    stats->add_option("--threshold", st.threshold, "jump threshold in MAD units")->capture_default_str();
    stats->add_option("--window", st.window, "running-median window")->capture_default_str();
    stats->add_flag("--plot", st.plot, "write plot data to --out");

    auto* report = app.add_subcommand("report", "compare computed values with the reference device tables");
    std::string fixtures;
    bool skip_pr = false;
    report->add_option("--fixtures", fixtures, "directory with table1.csv and table2.csv");
    report->add_flag("--no-pr", skip_pr, "skip the participation-ratio solves");

    auto* synth = app.add_subcommand("synth", "write a synthetic notch-resonator trace");
    SynthArgs sy;
    synth->add_option("output", sy.path, "output file (.csv or .s2p), placed in --out when given")->required();
    synth->add_option("--f0-ghz", sy.f0_ghz)->capture_default_str();
    synth->add_option("--qi", sy.qi)->capture_default_str();
    synth->add_option("--qc", sy.qc)->capture_default_str();
    synth->add_option("--phi", sy.phi)->capture_default_str();
    synth->add_option("--delay-ns", sy.delay_ns)->capture_default_str();
    synth->add_option("--amplitude", sy.amplitude)->capture_default_str();
    synth->add_option("--alpha", sy.alpha)->capture_default_str();
    synth->add_option("--snr-db", sy.snr_db)->capture_default_str();
    synth->add_option("--points", sy.points)->capture_default_str();
    synth->add_option("--span", sy.span, "half span in linewidths")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << io::toolkit_version() << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(ErrorKind::Usage);
    }

    try {
        Context ctx;
        ctx.seed = seed;
        if (!config_path.empty()) {
            require_file(config_path);
            ctx.config = io::Config::load(config_path);
        }
        for (const auto& s : settings) {
            const auto [k, v] = io::split_assignment(s);
            ctx.config.set(k, v);
        }
        if (!preset.empty())
            ctx.config.set("preset", preset);
        for (const auto& t : tolerances) {
            const auto [k, v] = io::split_assignment(t);
            try {
                ctx.tolerances[k] = std::stod(v);
            } catch (const std::exception&) {
                throw UsageError("tolerance '" + k + "' is not a number");
            }
        }
        if (!out_dir.empty())
            ctx.out_dir = fs::path(out_dir);
        std::vector<fs::path> config_inputs;
        if (!config_path.empty())
            config_inputs.emplace_back(config_path);

        Output result;
        bool files_anywhere = false;
        if (design->parsed())
            cmd_design(ctx, result, config_inputs);
        else if (pr->parsed())
            cmd_pr(ctx, result, config_inputs, mesh_out);
        else if (fit->parsed())
            cmd_fit(ctx, result, fit_args);
        else if (tls->parsed())
            cmd_tls(ctx, result, tls_args);
        else if (cal->parsed())
            cmd_calibrate(ctx, result, cal_args);
        else if (photons->parsed())
            cmd_photons(ctx, result, ph);
        else if (stats->parsed())
            cmd_stats(ctx, result, st);
        else if (report->parsed())
            cmd_report(ctx, result, fixtures, skip_pr);
        else if (synth->parsed()) {
            cmd_synth(ctx, result, sy);
            files_anywhere = true;
        }
        if (!files_anywhere && !result.files.empty() && !ctx.out_dir)
            err << "note: plot and data files are written only with --out\n";
        commit(ctx, result, format == "records", out, files_anywhere);
        return result.status;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(ErrorKind::Io);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace resokit::cli
