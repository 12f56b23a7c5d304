#pragma once

// Experiment orchestration: every (cell, DGP, replicate) job runs a grid search
// and a retrain, results are folded into per-(cell, DGP) aggregates, and the
// star rule picks the recommended cell of each table row.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rnnbench/cells.hpp"
#include "rnnbench/dgp.hpp"
#include "rnnbench/training.hpp"

namespace rnnbench::bench {

/// Half a unit in the fourth decimal, the precision of the published RMSEs.
inline constexpr double kTieTolerance = 5e-5;

enum class Scale { kPaper, kDesk };

std::string_view scale_name(Scale scale);
std::optional<Scale> parse_scale(std::string_view name);

/// Everything a benchmark run depends on besides the command line.
struct BenchConfig {
  std::string scale = "desk";
  std::uint64_t seed = 0;
  int jobs = 0;  // 0: hardware concurrency
  std::vector<int> experiments{1, 2};

  int length = 600;
  double noise_mean = 0.0;
  double noise_std = 0.2;
  int reps = 3;

  train::SplitSpec split{400, 100, 100};
  train::TrainConfig train;
  std::vector<int> hidden{1, 2, 3, 4};
  /// Window grid of a DGP is 1..min(table maximum, window_cap); 0 disables the cap.
  int window_cap = 5;
  int runs_per_config = 3;

  /// Empty: the experiment's full roster / all 21 DGPs.
  std::vector<std::string> cells;
  std::vector<std::string> dgps;
  double tie_tolerance = kTieTolerance;
};

BenchConfig scale_preset(Scale scale);

nlohmann::json to_json(const BenchConfig& config);
/// Strict parse: unknown keys and wrong types throw ConfigError. Missing keys keep
/// the values of `base`.
BenchConfig merge_json(const BenchConfig& base, const nlohmann::json& patch);

std::vector<int> window_grid(dgp::DgpKind kind, const BenchConfig& config);

/// Roster of `experiment` restricted to config.cells (in roster order).
/// Requested cells outside this roster are skipped; unknown names throw ConfigError.
std::vector<cells::CellKind> resolve_cells(int experiment, const BenchConfig& config);
std::vector<dgp::DgpKind> resolve_dgps(const BenchConfig& config);

/// The replicates of one DGP at the configured length and noise.
std::vector<dgp::SeriesReplicate> make_series(dgp::DgpKind kind, const BenchConfig& config);

/// One training run as persisted in results.jsonl.
struct RunRecord {
  int experiment = 0;
  std::string phase;  // "grid" or "retrain"
  std::string cell;
  std::string dgp;
  int replicate = 0;
  int n_h = 0;
  int window = 0;
  int run = 0;
  std::uint64_t seed = 0;
  double val_rmse = 0.0;   // NaN when absent
  double test_rmse = 0.0;  // NaN when absent
  int epochs = 0;
  bool failed = false;
  std::string diagnostic;
  double wall_time = 0.0;
};

/// Without wall_time so identical runs serialize identically.
nlohmann::json to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);

/// A job that could not produce a retrain record.
struct JobFailure {
  int experiment = 0;
  std::string cell;
  std::string dgp;
  int replicate = 0;
  std::string reason;
};

struct ExperimentRun {
  std::vector<RunRecord> records;
  std::vector<JobFailure> failures;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Grid search + retrain for every (cell, DGP, replicate) of `experiment`.
/// Jobs run on config.jobs workers; records come back in a fixed order
/// (cell roster order, DGP table order, replicate, then n_H, w, run).
ExperimentRun run_experiment(int experiment, const BenchConfig& config,
                             const ProgressFn& progress = {});

struct JobOutcome {
  std::vector<RunRecord> records;
  /// Set when no retrain record could be produced.
  std::optional<std::string> failure;
};

/// Grid search + retrain of one replicate.
JobOutcome run_job(int experiment, cells::CellKind cell, const dgp::SeriesReplicate& series,
                   const BenchConfig& config);

struct BenchmarkResult {
  int experiment = 0;
  cells::CellKind cell = cells::CellKind::LSTM_VANILLA;
  dgp::DgpKind dgp = dgp::DgpKind::T;
  int replicates = 0;  // successful retrains
  double mean_test_rmse = 0.0;
  double std_test_rmse = 0.0;  // sample std; 0 for a single replicate
  int n_h = 0;                 // most frequent chosen n_H (smallest on ties)
  int window = 0;              // most frequent chosen w (smallest on ties)
  long empirical_complexity = 0;
};

/// Pure fold over the retrain records, ordered by (experiment, cell, DGP).
std::vector<BenchmarkResult> aggregate(std::span<const RunRecord> records);

/// Unweighted mean of the per-DGP means of one cell over a behavior.
/// Throws IncompleteBehaviorError when a DGP of the behavior is missing.
double behavior_mean(std::span<const BenchmarkResult> results, int experiment,
                     cells::CellKind cell, dgp::Behavior behavior);

enum class Star { kNone, kGray, kYellow };

struct StarCandidate {
  std::string cell;
  double rmse = 0.0;
  double complexity = 0.0;
};

/// Tied set = RMSE <= min + tol. Yellow = tied cell of least complexity (then
/// lexicographic name); gray = the rest of the tied set. Non-finite RMSEs never
/// receive a star.
std::vector<Star> select_stars(std::span<const StarCandidate> row, double tol = kTieTolerance);

struct GuidelineRow {
  dgp::Behavior behavior = dgp::Behavior::kDeterministic;
  std::string label;  // DGP name or "Mean"
  bool is_mean = false;
  std::vector<double> rmse;        // per cell, NaN when missing
  std::vector<double> complexity;  // per cell
  std::vector<Star> stars;
};

struct GuidelineTable {
  int experiment = 0;
  std::vector<cells::CellKind> cells;
  std::vector<GuidelineRow> rows;
};

/// One row per DGP present plus a Mean row for every behavior whose DGPs are
/// all present. The Mean row's complexity is the mean empirical complexity.
GuidelineTable build_guideline(int experiment, std::span<const BenchmarkResult> results,
                               double tol = kTieTolerance);

/// Theoretic complexity at the reference dimensions n_I = 1, n_H = 10.
long reference_complexity(cells::CellKind kind);

struct SummaryRow {
  dgp::Behavior behavior = dgp::Behavior::kDeterministic;
  std::optional<std::string> best1;
  double rmse1 = 0.0;
  std::optional<std::string> best2;
  double rmse2 = 0.0;
  std::string recommended;
};

/// Picks the recommended cell of a summary row by the star rule applied to the
/// two experiments' best cells, complexity taken at the reference dimensions.
SummaryRow summary_row(dgp::Behavior behavior, std::optional<std::string> best1, double rmse1,
                       std::optional<std::string> best2, double rmse2,
                       double tol = kTieTolerance);

/// Rows for every behavior with a Mean row in at least one table.
std::vector<SummaryRow> build_summary(const GuidelineTable* exp1, const GuidelineTable* exp2,
                                      double tol = kTieTolerance);

}  // namespace rnnbench::bench
