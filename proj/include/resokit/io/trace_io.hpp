#pragma once

#include "resokit/trace.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace resokit::io {

enum class TouchstoneFormat { RI, MA, DB };

/// Parsed rows before trace validation (any number of rows, any order).
struct SweepRows {
    std::vector<double> freqs;
    std::vector<Complex> s21;
};

SweepRows parse_touchstone_rows(std::istream& in);

/// Reads S21 from a Touchstone 1.x two-port stream. Honors the option line
/// (frequency unit, RI/MA/DB); defaults are GHz and MA as the format defines.
/// Throws ParseError with the offending line number.
S21Trace read_touchstone(std::istream& in);
S21Trace read_touchstone(const std::filesystem::path& path);

/// Writes a two-port file in Hz with S21 = S12 = trace and S11 = S22 = 0.
void write_touchstone(std::ostream& out, const S21Trace& trace,
                      TouchstoneFormat format = TouchstoneFormat::RI);

/// Three numeric columns: freq_hz, re, im. An optional header line and
/// '#' comments are skipped.
S21Trace read_csv_trace(std::istream& in);
S21Trace read_csv_trace(const std::filesystem::path& path);
void write_csv_trace(std::ostream& out, const S21Trace& trace);

/// Dispatches on extension: .s2p is Touchstone, anything else CSV.
/// Throws IoError when the file cannot be opened.
S21Trace load_trace(const std::filesystem::path& path);

} // namespace resokit::io
