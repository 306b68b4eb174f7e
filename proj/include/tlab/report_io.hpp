#pragma once

#include <string>
#include <vector>

#include "tlab/scenario.hpp"
#include "tlab/sizeest.hpp"
#include "tlab/verify.hpp"

namespace tlab {

/// %.17g, or null for NaN and infinities.
std::string format_number(double v);
/// Compact single-line JSON with every float written by format_number, so
/// identical values always give identical bytes.
std::string dump_json(const Json& j);
std::string dump_json_pretty(const Json& j);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

std::string fnv1a_hex(const std::string& bytes);

Json to_json(const VerificationReport& r);
Json to_json(const PowerReport& p);
Json to_json(const CarlemanCurve& c);
Json to_json(const SizeBoundsResult& r);
Json to_json(const SizeCalibration& c);
/// Throws Error(config) when a required field is missing.
SizeCalibration size_calibration_from_json(const Json& j);

/// inequality,n_fit,n_holdout,fitted_constant,holdout_pass_rate,max_holdout_ratio
std::string summary_csv_header();
std::string summary_csv_row(const CalibrationSet& c);

struct LedgerRow {
    std::string inequality;
    std::size_t count = 0;
    double min_ratio = 0.0;
    double median_ratio = 0.0;
    double max_ratio = 0.0;
    std::size_t judged = 0;  // reports carrying a pass flag
    std::size_t passed = 0;
    double pass_rate = 0.0;  // passed / judged, NaN when nothing was judged
};

struct LedgerSummary {
    std::vector<LedgerRow> rows;  // sorted by inequality name
    std::size_t lines = 0;
    std::size_t skipped = 0;  // corrupt or incomplete lines
};

/// Aggregates JSON-lines report files. Throws Error(config) when `paths` is
/// empty and Error(io) when a file cannot be read.
LedgerSummary aggregate_ledgers(const std::vector<std::string>& paths);
std::string ledger_table(const LedgerSummary& s);
std::string ledger_csv(const LedgerSummary& s);

}  // namespace tlab
