#include "resokit/cli.hpp"
#include "resokit/error.hpp"
#include "resokit/io/config.hpp"
#include "resokit/io/records.hpp"
#include "resokit/io/trace_io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

using namespace resokit;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = RESOKIT_TEST_DATA;

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("resokit_io_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Run {
    int status;
    std::string out, err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int status = cli::run(args, out, err);
    return {status, out.str(), err.str()};
}

S21Trace ripple_trace(int n) {
    std::vector<double> f(n);
    std::vector<Complex> s(n);
    for (int k = 0; k < n; ++k) {
        f[k] = 5.9e9 + 1e3 * k + 0.123;
        s[k] = std::polar(0.01 + 1e-4 * std::sin(0.3 * k), 0.05 * k - 1.0);
    }
    return S21Trace(f, s);
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream(p, std::ios::binary) << body;
}

} // namespace

TEST_CASE("touchstone rows") {
    SUBCASE("real/imaginary, Hz") {
        std::istringstream in("! comment\n# Hz S RI R 50\n1e9 0 0 0.25 -0.5 0.25 -0.5 0 0\n");
        const auto rows = io::parse_touchstone_rows(in);
        REQUIRE(rows.freqs.size() == 1);
        CHECK(rows.freqs[0] == 1e9);
        CHECK(rows.s21[0] == Complex(0.25, -0.5));
    }
    SUBCASE("magnitude/angle with the default GHz unit") {
        std::istringstream in("#\n6.5 0 0 0.5 30 0.5 30 0 0\n");
        const auto rows = io::parse_touchstone_rows(in);
        CHECK(rows.freqs[0] == doctest::Approx(6.5e9));
        CHECK(rows.s21[0].real() == doctest::Approx(0.5 * std::cos(std::numbers::pi / 6)).epsilon(1e-14));
        CHECK(rows.s21[0].imag() == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("decibel/angle in MHz") {
        std::istringstream in("# MHz S DB R 50\n6000 0 0 -40 -90 -40 -90 0 0\n");
        const auto rows = io::parse_touchstone_rows(in);
        CHECK(rows.freqs[0] == doctest::Approx(6e9));
        CHECK(std::abs(rows.s21[0].real()) < 1e-15);
        CHECK(rows.s21[0].imag() == doctest::Approx(-0.01).epsilon(1e-13));
    }
    SUBCASE("errors carry line numbers") {
        std::istringstream truncated("# Hz S RI R 50\n1 0 0 1 0 1 0 0 0\n2 0 0 1 0 1 0 0 0\n3 0 0 1 0\n");
        try {
            io::parse_touchstone_rows(truncated);
            FAIL("no exception");
        } catch (const ParseError& e) {
            CHECK(e.line() == 4);
            CHECK(std::string(e.what()).find("line 4") != std::string::npos);
        }
        std::istringstream bad_option("# Hz Y RI R 50\n1 0 0 1 0 1 0 0 0\n");
        CHECK_THROWS_AS(io::parse_touchstone_rows(bad_option), ParseError);
        std::istringstream bad_number("# Hz S RI R 50\n1 0 0 x 0 1 0 0 0\n");
        CHECK_THROWS_AS(io::parse_touchstone_rows(bad_number), ParseError);
        std::istringstream empty("# Hz S RI R 50\n");
        CHECK_THROWS_AS(io::parse_touchstone_rows(empty), ParseError);
    }
}

TEST_CASE("trace file round trips") {
    const auto trace = ripple_trace(64);
    for (auto format : {io::TouchstoneFormat::RI, io::TouchstoneFormat::MA, io::TouchstoneFormat::DB}) {
        std::stringstream s2p;
        io::write_touchstone(s2p, trace, format);
        const auto back = io::read_touchstone(s2p);
        REQUIRE(back.size() == trace.size());
        for (std::size_t k = 0; k < trace.size(); ++k) {
            CHECK(std::abs(back.freqs()[k] - trace.freqs()[k]) <= 1e-12 * trace.freqs()[k]);
            CHECK(std::abs(back.s21()[k] - trace.s21()[k]) <= 1e-12 * std::abs(trace.s21()[k]));
        }
    }
    // CSV → Touchstone → CSV
    std::stringstream csv;
    io::write_csv_trace(csv, trace);
    const auto a = io::read_csv_trace(csv);
    std::stringstream s2p;
    io::write_touchstone(s2p, a);
    std::stringstream csv2;
    io::write_csv_trace(csv2, io::read_touchstone(s2p));
    const auto b = io::read_csv_trace(csv2);
    for (std::size_t k = 0; k < trace.size(); ++k) {
        CHECK(std::abs(b.freqs()[k] - trace.freqs()[k]) <= 1e-12 * trace.freqs()[k]);
        CHECK(std::abs(b.s21()[k] - trace.s21()[k]) <= 1e-12 * std::abs(trace.s21()[k]));
    }

    std::istringstream short_csv("freq_hz,re,im\n1,0,0\n2,0,0\n");
    CHECK_THROWS_AS(io::read_csv_trace(short_csv), ParseError);
    std::istringstream two_cols("1,2\n");
    CHECK_THROWS_AS(io::read_csv_trace(two_cols), ParseError);
    CHECK_THROWS_AS(io::load_trace("/nonexistent/trace.csv"), IoError);
}

TEST_CASE("configuration files") {
    std::istringstream in("# run settings\nwidth_um = 10\n  name=CPW1  # inline\nrefine = yes\n\n");
    const auto cfg = io::Config::parse(in);
    CHECK(cfg.number("width_um") == 10.0);
    CHECK(cfg.string("name") == "CPW1");
    CHECK(cfg.flag_or("refine", false));
    CHECK(cfg.number_or("missing", 3.5) == 3.5);
    CHECK_THROWS_AS(cfg.require_number("missing"), UsageError);
    CHECK_THROWS_AS(cfg.number("name"), ParseError);

    std::istringstream dup("a = 1\nb = 2\na = 3\n");
    try {
        io::Config::parse(dup);
        FAIL("no exception");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    std::istringstream no_eq("a 1\n");
    CHECK_THROWS_AS(io::Config::parse(no_eq), ParseError);
    CHECK(io::split_assignment("qi=0.05") == std::pair<std::string, std::string>{"qi", "0.05"});
    CHECK_THROWS_AS(io::split_assignment("qi"), UsageError);
}

TEST_CASE("results records") {
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

    TempDir tmp;
    const fs::path file = tmp.path / "results.jsonl";
    io::ResultsRecord r;
    r.kind = "demo";
    r.payload = {{"x", 1.5}, {"label", "a"}};
    r.provenance = io::make_provenance({data_dir / "table2.csv"});
    CHECK(r.provenance.inputs.at(0).sha256 == io::sha256_file(data_dir / "table2.csv"));
    CHECK(r.provenance.version == io::toolkit_version());
    io::append_records(file, {r, r});
    const auto back = io::read_records(file);
    REQUIRE(back.size() == 2);
    CHECK(back[1].kind == "demo");
    CHECK(back[1].payload == r.payload);
    CHECK(back[1].to_json() == r.to_json());

    SUBCASE("concurrent appends stay line-atomic") {
        const fs::path shared = tmp.path / "shared.jsonl";
        std::vector<std::thread> workers;
        for (int t = 0; t < 8; ++t)
            workers.emplace_back([&, t] {
                for (int i = 0; i < 40; ++i) {
                    io::ResultsRecord rec = r;
                    rec.payload = {{"thread", t}, {"i", i}, {"pad", std::string(2000, 'x')}};
                    io::append_records(shared, {rec});
                }
            });
        for (auto& w : workers)
            w.join();
        CHECK(io::read_records(shared).size() == 320);
    }
    SUBCASE("malformed lines are reported by number") {
        std::ofstream(file, std::ios::app) << "{not json\n";
        try {
            io::read_records(file);
            FAIL("no exception");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }
    CHECK_THROWS_AS(io::read_records(tmp.path / "absent.jsonl"), IoError);
    CHECK_THROWS_AS(io::sha256_file(tmp.path / "absent.bin"), IoError);
}

TEST_CASE("command line") {
    TempDir tmp;
    const std::string fixture = (data_dir / "asr3_synthetic.csv").string();

    SUBCASE("fit of the bundled synthetic trace") {
        const auto r = invoke({"--format", "records", "--out", tmp.path.string(), "fit", fixture});
        REQUIRE(r.status == 0);
        const auto j = io::Json::parse(r.out.substr(0, r.out.find('\n')));
        CHECK(j["kind"] == "resonance_fit");
        const auto& p = j["payload"];
        CHECK(std::abs(p["qi"].get<double>() / 9.6e6 - 1.0) < 0.01);
        CHECK(std::abs(p["qc_mag"].get<double>() / 1.7e6 - 1.0) < 0.01);
        CHECK(std::abs(p["f0_hz"].get<double>() / 6e9 - 1.0) < 1e-6);
        CHECK(j["provenance"]["inputs"][0]["sha256"] == io::sha256_file(fixture));

        const auto again = invoke({"--format", "records", "fit", fixture});
        const auto j2 = io::Json::parse(again.out.substr(0, again.out.find('\n')));
        CHECK(j2["payload"] == p);

        const auto stored = io::read_records(tmp.path / "results.jsonl");
        REQUIRE(stored.size() == 1);
        CHECK(stored[0].payload == p);
    }
    SUBCASE("missing input") {
        const auto r = invoke({"--out", tmp.path.string(), "fit", (tmp.path / "nope.csv").string()});
        CHECK(r.status == 3);
        CHECK(r.err.find("nope.csv") != std::string::npos);
        CHECK_FALSE(fs::exists(tmp.path / "results.jsonl"));
    }
    SUBCASE("usage errors") {
        CHECK(invoke({"frobnicate"}).status == 2);
        CHECK(invoke({}).status == 2);
        CHECK(invoke({"--tolerance", "slope", "report", "--no-pr"}).status == 2);
        CHECK(invoke({"--format", "xml", "design"}).status == 2);
        CHECK(invoke({"photons"}).status == 2);
    }
    SUBCASE("narrow power sweep") {
        std::string body = "n_avg,qi\n";
        for (int k = 0; k <= 15; ++k)
            body += std::to_string(std::pow(10.0, 1.0 + k * 0.1)) + "," + std::to_string(1e6 + 1e4 * k) + "\n";
        write_file(tmp.path / "narrow.csv", body);
        const auto r = invoke({"tls", (tmp.path / "narrow.csv").string(), "--f-ghz", "6"});
        CHECK(r.status == 9);
    }
    SUBCASE("table report without field solves") {
        const auto r = invoke({"report", "--no-pr"});
        CHECK(r.status == 0);
        CHECK(r.out.find("all checks passed") != std::string::npos);
        const auto tight = invoke({"--tolerance", "slope=0.001", "report", "--no-pr"});
        CHECK(tight.status == 1);
    }
    SUBCASE("photon number from the command line") {
        const auto r = invoke({"--format", "records", "photons", "--vna-dbm", "-80", "--f-ghz", "6", "--qc", "1.7e6",
                            "--qi", "9.6e6", "--atten-db", "-77.9"});
        REQUIRE(r.status == 0);
        const auto j = io::Json::parse(r.out.substr(0, r.out.find('\n')));
        const double p_in = 1e-3 * std::pow(10.0, (-80.0 - 16.0 - 77.9) / 10.0);
        const double expected = 4.0 / (2 * std::numbers::pi * 6e9 * 1.7e6) * std::pow(1 / 1.7e6 + 1 / 9.6e6, -2) *
                                p_in / (6.62607015e-34 * 6e9);
        CAPTURE(r.out);
        CHECK(std::abs(j["payload"]["n_avg"].get<double>() / expected - 1.0) < 1e-9);
    }
}
