#pragma once

// Report files regenerated from run records: guideline tables, the summary
// table, per-behavior figure data with SVG charts, and the failure manifest.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rnnbench/harness.hpp"

namespace rnnbench::report {

/// Fixed four decimals with trailing zeros dropped: 0.0480 -> "0.048".
std::string format_rmse(double v);

/// "Deterministic", "Random-walk", ...
std::string behavior_title(dgp::Behavior behavior);

std::string guideline_markdown(const bench::GuidelineTable& table);
std::string guideline_csv(const bench::GuidelineTable& table);

std::string summary_markdown(std::span<const bench::SummaryRow> rows);
std::string summary_csv(std::span<const bench::SummaryRow> rows);

/// Cells of one behavior ordered by theoretic complexity at n_I = 1, n_H = 10.
std::vector<cells::CellKind> figure_order(std::span<const bench::BenchmarkResult> results,
                                          dgp::Behavior behavior);
std::string figure_csv(std::span<const bench::BenchmarkResult> results, dgp::Behavior behavior);
std::string figure_svg(std::span<const bench::BenchmarkResult> results, dgp::Behavior behavior);

nlohmann::json failures_json(std::span<const bench::RunRecord> records);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Writes summary.md and summary.csv.
void emit_summary(const std::filesystem::path& dir, std::span<const bench::SummaryRow> rows);

/// Writes the whole report set under `dir`. Throws ContractError when the
/// records hold no retrain result.
void emit_report(const std::filesystem::path& dir, std::span<const bench::RunRecord> records,
                 double tol = bench::kTieTolerance);

/// results.jsonl: one record per line, no wall times.
std::string results_jsonl(std::span<const bench::RunRecord> records);
std::vector<bench::RunRecord> read_results(const std::filesystem::path& path);

}  // namespace rnnbench::report
