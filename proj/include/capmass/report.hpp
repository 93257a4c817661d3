#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "capmass/mass.hpp"

namespace capmass {

/// "%.12g", or "nan" for non-finite values.
std::string format_number(double x);
/// One significant digit, exponent without padding: 1e-14, 3e-05 -> 3e-5.
std::string format_error(double e);
/// "11.000000 ± 1e-14"
std::string format_measured(double value, double error, int decimals = 6);

/// Header of the per-record CSV.
const char* report_csv_header();

/// Writes <name>.csv, <name>_errors.csv, <name>.json and one <name>_<series>.dat
/// per plotted series into `dir`. Output is a function of the report only.
void write_report_files(const MassReport& report, const std::filesystem::path& dir, const std::string& name,
                        const std::string& config_canonical);

std::string report_json(const MassReport& report, const std::string& config_canonical);

/// Creates <out_dir>/run-NNN with the next unused NNN.
std::filesystem::path allocate_run_dir(const std::filesystem::path& out_dir);

/// Appends one line describing a run to <out_dir>/manifest.txt.
void append_manifest(const std::filesystem::path& out_dir, const std::filesystem::path& run_dir,
                     const std::string& command, std::uint64_t config_hash, int exit_code);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace capmass
