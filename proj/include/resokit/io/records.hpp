#pragma once

#include "resokit/calibration.hpp"
#include "resokit/field/participation.hpp"
#include "resokit/stats.hpp"
#include "resokit/tls.hpp"
#include "resokit/trace_fit.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace resokit::io {

using Json = nlohmann::json;

struct InputFile {
    std::string path;
    std::string sha256;
};

struct Provenance {
    std::vector<InputFile> inputs;
    std::string version;
    std::string timestamp;  // UTC, ISO 8601
};

/// One line of a results file: {"kind", "payload", "provenance"}.
/// The payload depends only on the inputs; everything run-specific lives in
/// the provenance block.
struct ResultsRecord {
    std::string kind;
    Json payload;
    Provenance provenance;

    Json to_json() const;
    static ResultsRecord from_json(const Json& j);
};

std::string toolkit_version();
std::string sha256_hex(const std::string& bytes);
/// Throws IoError when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);
std::string utc_timestamp();
Provenance make_provenance(const std::vector<std::filesystem::path>& inputs);

/// Appends one line per record under an exclusive advisory lock.
void append_records(const std::filesystem::path& path, const std::vector<ResultsRecord>& records);
/// Throws IoError / ParseError (with line number) on unreadable input.
std::vector<ResultsRecord> read_records(const std::filesystem::path& path);

Json to_json(const ResonanceFit& fit);
ResonanceFit resonance_fit_from_json(const Json& j);
Json to_json(const TlsFit& fit);
Json to_json(const field::ParticipationReport& report);
Json to_json(const LogNormalFit& fit);
Json to_json(const Regression& reg);
Json to_json(const Histogram& hist);
Json chain_summary(const AttenuationChain& chain);

} // namespace resokit::io
