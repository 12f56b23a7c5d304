#pragma once

// Split / normalize / window the series, train a cell with Adam on mini-batches,
// grid-search (n_H, w) over repeated seeded runs and retrain on train+validation.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rnnbench/cells.hpp"
#include "rnnbench/tensor.hpp"

namespace rnnbench::train {

struct SplitSpec {
  std::size_t train = 2000;
  std::size_t validation = 500;
  std::size_t test = 500;

  std::size_t total() const { return train + validation + test; }
};

struct Partitions {
  std::vector<double> train;
  std::vector<double> validation;
  std::vector<double> test;
};

/// Contiguous slices in temporal order. Throws ConfigError on a length mismatch.
Partitions split(std::span<const double> series, const SplitSpec& spec);

/// Min-max scaling fit on one partition.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(double min, double max);

  /// Throws DegenerateScaleError when the values are constant.
  static Normalizer fit(std::span<const double> values);

  double min() const { return min_; }
  double max() const { return max_; }
  double apply(double x) const { return (x - min_) / (max_ - min_); }
  double invert(double y) const { return min_ + y * (max_ - min_); }
  std::vector<double> apply(std::span<const double> values) const;
  std::vector<double> invert(std::span<const double> values) const;

 private:
  double min_ = 0.0;
  double max_ = 1.0;
};

/// inputs row i = values[i .. i+w), targets[i] = values[i + w + horizon - 1].
struct WindowedDataset {
  Tensor inputs;
  std::vector<double> targets;
  std::size_t window = 0;
  std::size_t horizon = 1;

  std::size_t size() const { return targets.size(); }
};

/// Throws ConfigError when the partition is too short for one sample.
WindowedDataset make_windows(std::span<const double> values, std::size_t window,
                             std::size_t horizon = 1);

double rmse(std::span<const double> prediction, std::span<const double> target);

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  std::size_t batch_size = 100;
  int max_epochs = 500;
  AdamConfig adam;
  std::uint64_t seed = 0;
  cells::CellOptions cell_options;
};

/// First and second moments per parameter, plus the step counter.
struct AdamState {
  explicit AdamState(const cells::CellParams& params);

  long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// One bias-corrected Adam update. `grads` is parallel to params.params();
/// entries of frozen parameters are ignored and those parameters stay bitwise
/// unchanged.
void adam_step(cells::CellParams& params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& config);

struct RunResult {
  int n_h = 0;
  std::size_t window = 0;
  std::uint64_t seed = 0;
  /// Mean training loss (MSE) of each completed epoch.
  std::vector<double> train_curve;
  double val_rmse = std::numeric_limits<double>::quiet_NaN();
  double test_rmse = std::numeric_limits<double>::quiet_NaN();
  double wall_time = 0.0;
  int epochs = 0;
  bool failed = false;
  std::string diagnostic;
};

struct TrainOutcome {
  RunResult result;
  cells::CellParams params;
};

/// Model outputs for every row of `inputs`, evaluated in chunks.
std::vector<double> predict(cells::CellKind kind, const cells::CellParams& params,
                            const Tensor& inputs, const cells::CellOptions& options = {});

/// Mean squared error and gradients of one mini-batch (rows `rows` of `data`).
/// Returned gradients are parallel to params.params().
double batch_gradients(cells::CellKind kind, const cells::CellParams& params,
                       const WindowedDataset& data, std::span<const std::size_t> rows,
                       std::vector<Tensor>& grads, const cells::CellOptions& options = {});

/// Trains a fresh cell (hidden width n_h) on `train_set`. When `val_set` is given
/// its RMSE is recorded after the last epoch. Divergence marks the run failed.
TrainOutcome train(cells::CellKind kind, int n_h, const WindowedDataset& train_set,
                   const WindowedDataset* val_set, const TrainConfig& config);

struct GridSpec {
  std::vector<int> hidden{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> windows{1, 2, 3, 4, 5};
  int runs_per_config = 10;
};

/// Integers lo..hi inclusive.
std::vector<int> range(int lo, int hi);

/// Aggregate of the repeated runs of one (n_H, w).
struct ConfigStats {
  int n_h = 0;
  int window = 0;
  long params = 0;
  int runs = 0;
  int successes = 0;
  double mean_val_rmse = std::numeric_limits<double>::quiet_NaN();
  bool disqualified = false;
};

/// Successful runs needed for a config to count: ceil(0.8 * runs).
int required_successes(int runs);

ConfigStats summarize_config(cells::CellKind kind, int n_h, int window,
                             std::span<const RunResult> runs);

/// Lowest mean validation RMSE; ties by fewer parameters, then smaller w.
/// Throws ExperimentError when every config is disqualified.
const ConfigStats& select_config(std::span<const ConfigStats> configs);

/// Series prepared for one window size: min-max fit on train, windows taken
/// within each partition.
struct PreparedData {
  Normalizer normalizer;
  WindowedDataset train;
  WindowedDataset validation;
};

PreparedData prepare(const Partitions& parts, int window);

using SeedFn = std::function<std::uint64_t(int n_h, int window, int run)>;

struct GridOutcome {
  ConfigStats best;
  std::vector<ConfigStats> configs;
  /// Every run, ordered by (n_H, w, run).
  std::vector<RunResult> runs;
};

/// Trains every configuration without selecting; `best` is left empty.
GridOutcome run_grid(cells::CellKind kind, const Partitions& parts, const GridSpec& grid,
                     const TrainConfig& config, const SeedFn& seed_of);

/// run_grid followed by select_config.
GridOutcome grid_search(cells::CellKind kind, const Partitions& parts, const GridSpec& grid,
                        const TrainConfig& config, const SeedFn& seed_of);

/// Refits the normalizer on train+validation, trains for config.max_epochs on the
/// blended windows and scores RMSE on the test partition (normalized scale).
RunResult retrain_and_test(cells::CellKind kind, int n_h, int window, const Partitions& parts,
                           const TrainConfig& config);

}  // namespace rnnbench::train
