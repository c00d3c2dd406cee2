#include "resokit/io/trace_io.hpp"

#include "resokit/constants.hpp"
#include "resokit/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace resokit::io {

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    return s;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string tok; ss >> tok;)
        out.push_back(tok);
    return out;
}

double to_number(const std::string& tok, int line) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = first + tok.size();
    if (!tok.empty() && *first == '+')
        ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw ParseError("not a number: '" + tok + "'", line);
    return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    return in;
}

S21Trace finish(std::vector<double> f, std::vector<Complex> s, int last_line) {
    if (f.empty())
        throw ParseError("no data rows", last_line);
    try {
        return S21Trace(std::move(f), std::move(s));
    } catch (const DomainError& e) {
        throw ParseError(e.what(), last_line);
    }
}

} // namespace

SweepRows parse_touchstone_rows(std::istream& in) {
    double unit = 1e9;
    TouchstoneFormat format = TouchstoneFormat::MA;
    bool seen_option = false;
    std::vector<double> freqs;
    std::vector<Complex> s21;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto bang = line.find('!'); bang != std::string::npos)
            line.erase(bang);
        const auto toks = split_ws(line);
        if (toks.empty())
            continue;
        if (toks[0][0] == '#') {
            if (seen_option)
                throw ParseError("second option line", lineno);
            seen_option = true;
            std::vector<std::string> opts;
            if (toks[0].size() > 1)
                opts.push_back(upper(toks[0].substr(1)));
            for (std::size_t k = 1; k < toks.size(); ++k)
                opts.push_back(upper(toks[k]));
            for (std::size_t k = 0; k < opts.size(); ++k) {
                const std::string& o = opts[k];
                if (o == "HZ") unit = 1.0;
                else if (o == "KHZ") unit = 1e3;
                else if (o == "MHZ") unit = 1e6;
                else if (o == "GHZ") unit = 1e9;
                else if (o == "RI") format = TouchstoneFormat::RI;
                else if (o == "MA") format = TouchstoneFormat::MA;
                else if (o == "DB") format = TouchstoneFormat::DB;
                else if (o == "S") continue;
                else if (o == "Y" || o == "Z" || o == "H" || o == "G")
                    throw ParseError("only S parameters are supported, got " + o, lineno);
                else if (o == "R") {
                    if (k + 1 >= opts.size())
                        throw ParseError("option line: R without a reference impedance", lineno);
                    to_number(opts[++k], lineno);
                } else
                    throw ParseError("option line: unknown token '" + o + "'", lineno);
            }
            continue;
        }
        if (toks.size() != 9)
            throw ParseError("expected 9 columns for a two-port row, got " + std::to_string(toks.size()),
                             lineno);
        const double f = to_number(toks[0], lineno) * unit;
        const double a = to_number(toks[3], lineno);
        const double b = to_number(toks[4], lineno);
        for (std::size_t k = 1; k < 9; ++k)
            to_number(toks[k], lineno);
        Complex z;
        switch (format) {
        case TouchstoneFormat::RI: z = Complex(a, b); break;
        case TouchstoneFormat::MA: z = std::polar(a, b * constants::pi / 180.0); break;
        case TouchstoneFormat::DB: z = std::polar(std::pow(10.0, a / 20.0), b * constants::pi / 180.0); break;
        }
        freqs.push_back(f);
        s21.push_back(z);
    }
    if (freqs.empty())
        throw ParseError("no data rows", lineno);
    return SweepRows{std::move(freqs), std::move(s21)};
}

S21Trace read_touchstone(std::istream& in) {
    SweepRows rows = parse_touchstone_rows(in);
    return finish(std::move(rows.freqs), std::move(rows.s21), 0);
}

S21Trace read_touchstone(const std::filesystem::path& path) {
    auto in = open_input(path);
    auto t = read_touchstone(in);
    t.metadata().label = path.stem().string();
    return t;
}

void write_touchstone(std::ostream& out, const S21Trace& trace, TouchstoneFormat format) {
    const char* name = format == TouchstoneFormat::RI ? "RI" : format == TouchstoneFormat::MA ? "MA" : "DB";
    out << "! " << (trace.metadata().label.empty() ? "trace" : trace.metadata().label) << '\n';
    out << "# HZ S " << name << " R 50\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const Complex z = trace.s21()[k];
        double a = z.real(), b = z.imag();
        if (format == TouchstoneFormat::MA) {
            a = std::abs(z);
            b = std::arg(z) * 180.0 / constants::pi;
        } else if (format == TouchstoneFormat::DB) {
            a = 20.0 * std::log10(std::abs(z));
            b = std::arg(z) * 180.0 / constants::pi;
        }
        const char* zero = format == TouchstoneFormat::DB ? "-300 0" : "0 0";
        out << trace.freqs()[k] << ' ' << zero << ' ' << a << ' ' << b << ' ' << a << ' ' << b << ' '
            << zero << '\n';
    }
}

S21Trace read_csv_trace(std::istream& in) {
    std::vector<double> freqs;
    std::vector<Complex> s21;
    std::string line;
    int lineno = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        const auto toks = split_ws(line);
        if (toks.empty())
            continue;
        if (header_allowed && !toks[0].empty() &&
            (std::isalpha(static_cast<unsigned char>(toks[0][0])) || toks[0][0] == '_')) {
            header_allowed = false;
            continue;
        }
        header_allowed = false;
        if (toks.size() != 3)
            throw ParseError("expected 3 columns (freq_hz, re, im), got " + std::to_string(toks.size()),
                             lineno);
        freqs.push_back(to_number(toks[0], lineno));
        s21.emplace_back(to_number(toks[1], lineno), to_number(toks[2], lineno));
    }
    return finish(std::move(freqs), std::move(s21), lineno);
}

S21Trace read_csv_trace(const std::filesystem::path& path) {
    auto in = open_input(path);
    auto t = read_csv_trace(in);
    t.metadata().label = path.stem().string();
    return t;
}

void write_csv_trace(std::ostream& out, const S21Trace& trace) {
    out << "freq_hz,re,im\n" << std::setprecision(17);
    for (std::size_t k = 0; k < trace.size(); ++k)
        out << trace.freqs()[k] << ',' << trace.s21()[k].real() << ',' << trace.s21()[k].imag() << '\n';
}

S21Trace load_trace(const std::filesystem::path& path) {
    if (upper(path.extension().string()) == ".S2P")
        return read_touchstone(path);
    return read_csv_trace(path);
}

} // namespace resokit::io
