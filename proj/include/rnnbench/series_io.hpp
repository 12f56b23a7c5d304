#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rnnbench/dgp.hpp"

namespace rnnbench {

/// Shortest decimal that parses back to exactly `v`.
std::string format_double(double v);

nlohmann::json to_json(const dgp::DgpSpec& spec);

/// `<kind>_rep<ii>` with a zero-padded replicate index.
std::string series_stem(const dgp::SeriesReplicate& series);

/// Writes `<stem>.csv` (`t,value`) and `<stem>.json`; returns the CSV path.
std::filesystem::path write_series(const std::filesystem::path& dir,
                                   const dgp::SeriesReplicate& series);

/// Reads the value column of a `t,value` CSV.
std::vector<double> read_series_csv(const std::filesystem::path& path);

}  // namespace rnnbench
