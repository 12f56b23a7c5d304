#include "rnnbench/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "rnnbench/error.hpp"
#include "rnnbench/seeds.hpp"
#include "rnnbench/tape.hpp"

namespace rnnbench::train {

namespace {

using cells::CellKind;
using cells::CellParams;

constexpr std::size_t kPredictChunk = 512;

// Builds the unrolled forward pass for the given rows. Column t of the window
// becomes the t-th step's batch x 1 input.
ad::Var forward_rows(ad::Tape& tape, CellKind kind, const cells::BoundParams& bound,
                     const Tensor& inputs, std::span<const std::size_t> rows,
                     const cells::CellOptions& options) {
  const std::size_t w = inputs.cols();
  std::vector<ad::Var> steps;
  steps.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    Tensor x(rows.size(), 1);
    for (std::size_t i = 0; i < rows.size(); ++i) x[i] = inputs(rows[i], t);
    steps.push_back(tape.constant(std::move(x)));
  }
  return cells::forward(kind, bound, steps, options);
}

bool params_finite(const CellParams& params) {
  return std::all_of(params.params().begin(), params.params().end(),
                     [](const cells::Parameter& p) { return p.value.all_finite(); });
}

}  // namespace

Partitions split(std::span<const double> series, const SplitSpec& spec) {
  if (spec.train == 0 || spec.validation == 0 || spec.test == 0) {
    throw ConfigError("split: every partition needs at least one point");
  }
  if (spec.total() != series.size()) {
    throw ConfigError("split: " + std::to_string(spec.train) + "+" +
                      std::to_string(spec.validation) + "+" + std::to_string(spec.test) +
                      " does not match series length " + std::to_string(series.size()));
  }
  Partitions p;
  auto it = series.begin();
  p.train.assign(it, it + static_cast<std::ptrdiff_t>(spec.train));
  it += static_cast<std::ptrdiff_t>(spec.train);
  p.validation.assign(it, it + static_cast<std::ptrdiff_t>(spec.validation));
  it += static_cast<std::ptrdiff_t>(spec.validation);
  p.test.assign(it, series.end());
  return p;
}

Normalizer::Normalizer(double min, double max) : min_(min), max_(max) {
  if (!(max > min)) {
    throw DegenerateScaleError("normalizer needs max > min, got min=" + std::to_string(min) +
                               " max=" + std::to_string(max));
  }
}

Normalizer Normalizer::fit(std::span<const double> values) {
  if (values.empty()) throw DegenerateScaleError("normalizer fit on an empty partition");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return Normalizer(*lo, *hi);
}

std::vector<double> Normalizer::apply(std::span<const double> values) const {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [this](double x) { return apply(x); });
  return out;
}

std::vector<double> Normalizer::invert(std::span<const double> values) const {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [this](double y) { return invert(y); });
  return out;
}

WindowedDataset make_windows(std::span<const double> values, std::size_t window,
                             std::size_t horizon) {
  if (window == 0 || horizon == 0) throw ConfigError("window and horizon must be >= 1");
  if (values.size() < window + horizon) {
    throw ConfigError("partition of length " + std::to_string(values.size()) +
                      " is too short for window " + std::to_string(window));
  }
  const std::size_t m = values.size() - window - horizon + 1;
  WindowedDataset d;
  d.window = window;
  d.horizon = horizon;
  d.inputs = Tensor(m, window);
  d.targets.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < window; ++j) d.inputs(i, j) = values[i + j];
    d.targets[i] = values[i + window + horizon - 1];
  }
  return d;
}

double rmse(std::span<const double> prediction, std::span<const double> target) {
  if (prediction.size() != target.size() || prediction.empty()) {
    throw DimensionError("rmse: " + std::to_string(prediction.size()) + " predictions vs " +
                         std::to_string(target.size()) + " targets");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double e = prediction[i] - target[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(prediction.size()));
}

AdamState::AdamState(const CellParams& params) {
  for (const cells::Parameter& p : params.params()) {
    m.emplace_back(p.value.rows(), p.value.cols());
    v.emplace_back(p.value.rows(), p.value.cols());
  }
}

void adam_step(CellParams& params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& config) {
  auto ps = params.params();
  if (grads.size() != ps.size() || state.m.size() != ps.size()) {
    throw DimensionError("adam_step: gradient count does not match parameter count");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < ps.size(); ++k) {
    if (!ps[k].trainable) continue;
    Tensor& value = ps[k].value;
    const Tensor& g = grads[k];
    if (!g.same_shape(value)) {
      throw DimensionError("adam_step: gradient " + g.shape_string() + " for " + ps[k].name +
                           " of shape " + value.shape_string());
    }
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      value[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

std::vector<double> predict(CellKind kind, const CellParams& params, const Tensor& inputs,
                            const cells::CellOptions& options) {
  std::vector<double> out;
  out.reserve(inputs.rows());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < inputs.rows(); start += kPredictChunk) {
    const std::size_t end = std::min(inputs.rows(), start + kPredictChunk);
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    ad::Tape tape;
    const cells::BoundParams bound(tape, params);
    const ad::Var y = forward_rows(tape, kind, bound, inputs, rows, options);
    const auto values = y.value().values();
    out.insert(out.end(), values.begin(), values.end());
  }
  return out;
}

double batch_gradients(CellKind kind, const CellParams& params, const WindowedDataset& data,
                       std::span<const std::size_t> rows, std::vector<Tensor>& grads,
                       const cells::CellOptions& options) {
  ad::Tape tape;
  const cells::BoundParams bound(tape, params);
  const ad::Var y = forward_rows(tape, kind, bound, data.inputs, rows, options);
  Tensor target(rows.size(), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) target[i] = data.targets[rows[i]];
  const ad::Var loss = ad::mse_loss(y, tape.constant(std::move(target)));
  tape.backward(loss);
  grads.clear();
  for (ad::Var v : bound.vars()) grads.push_back(tape.gradient(v));
  return loss.value()[0];
}

TrainOutcome train(CellKind kind, int n_h, const WindowedDataset& train_set,
                   const WindowedDataset* val_set, const TrainConfig& config) {
  if (config.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (config.max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (train_set.size() == 0) throw ConfigError("empty training set");

  const auto started = std::chrono::steady_clock::now();
  TrainOutcome out;
  RunResult& r = out.result;
  r.n_h = n_h;
  r.window = train_set.window;
  r.seed = config.seed;

  cells::CellDims dims;
  dims.n_h = n_h;
  out.params = cells::init_params(kind, dims, config.seed);
  AdamState adam(out.params);
  std::mt19937_64 shuffle_rng(hash_combine(config.seed, fnv1a("shuffle")));

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Tensor> grads;
  try {
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      double total = 0.0;
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        const std::span<const std::size_t> rows(order.data() + start, end - start);
        const double loss = batch_gradients(kind, out.params, train_set, rows, grads,
                                            config.cell_options);
        adam_step(out.params, grads, adam, config.adam);
        total += loss * static_cast<double>(rows.size());
      }
      if (!params_finite(out.params)) {
        throw NumericError("non-finite parameter after epoch " + std::to_string(epoch + 1));
      }
      r.train_curve.push_back(total / static_cast<double>(order.size()));
      r.epochs = epoch + 1;
    }
    if (val_set != nullptr) {
      r.val_rmse = rmse(predict(kind, out.params, val_set->inputs, config.cell_options),
                        val_set->targets);
    }
  } catch (const NumericError& e) {
    r.failed = true;
    r.val_rmse = std::numeric_limits<double>::quiet_NaN();
    r.diagnostic = std::string(cells::cell_name(kind)) + " diverged at epoch " +
                   std::to_string(r.epochs + 1) + ": " + e.what();
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

std::vector<int> range(int lo, int hi) {
  if (hi < lo) throw ConfigError("empty range " + std::to_string(lo) + ".." + std::to_string(hi));
  std::vector<int> out(static_cast<std::size_t>(hi - lo + 1));
  std::iota(out.begin(), out.end(), lo);
  return out;
}

int required_successes(int runs) { return (8 * runs + 9) / 10; }

ConfigStats summarize_config(CellKind kind, int n_h, int window, std::span<const RunResult> runs) {
  ConfigStats s;
  s.n_h = n_h;
  s.window = window;
  cells::CellDims dims;
  dims.n_h = n_h;
  s.params = cells::param_count(kind, dims);
  s.runs = static_cast<int>(runs.size());
  double total = 0.0;
  for (const RunResult& r : runs) {
    if (r.failed || !std::isfinite(r.val_rmse)) continue;
    ++s.successes;
    total += r.val_rmse;
  }
  s.disqualified = s.runs == 0 || s.successes < required_successes(s.runs);
  if (!s.disqualified) s.mean_val_rmse = total / s.successes;
  return s;
}

const ConfigStats& select_config(std::span<const ConfigStats> configs) {
  const ConfigStats* best = nullptr;
  for (const ConfigStats& c : configs) {
    if (c.disqualified) continue;
    if (best == nullptr || c.mean_val_rmse < best->mean_val_rmse ||
        (c.mean_val_rmse == best->mean_val_rmse &&
         (c.params < best->params || (c.params == best->params && c.window < best->window)))) {
      best = &c;
    }
  }
  if (best == nullptr) throw ExperimentError("grid search: every configuration failed");
  return *best;
}

PreparedData prepare(const Partitions& parts, int window) {
  PreparedData p;
  p.normalizer = Normalizer::fit(parts.train);
  const auto w = static_cast<std::size_t>(window);
  p.train = make_windows(p.normalizer.apply(parts.train), w);
  p.validation = make_windows(p.normalizer.apply(parts.validation), w);
  return p;
}

GridOutcome run_grid(CellKind kind, const Partitions& parts, const GridSpec& grid,
                     const TrainConfig& config, const SeedFn& seed_of) {
  if (grid.hidden.empty() || grid.windows.empty() || grid.runs_per_config < 1) {
    throw ConfigError("grid search needs nonempty hidden/window ranges and >= 1 run");
  }
  GridOutcome out;
  for (int w : grid.windows) {
    const PreparedData data = prepare(parts, w);
    for (int n_h : grid.hidden) {
      std::vector<RunResult> runs;
      for (int run = 0; run < grid.runs_per_config; ++run) {
        TrainConfig c = config;
        c.seed = seed_of(n_h, w, run);
        runs.push_back(train(kind, n_h, data.train, &data.validation, c).result);
      }
      out.configs.push_back(summarize_config(kind, n_h, w, runs));
      out.runs.insert(out.runs.end(), runs.begin(), runs.end());
    }
  }
  // Runs are stored window-major; reorder to (n_H, w, run).
  std::stable_sort(out.runs.begin(), out.runs.end(), [](const RunResult& a, const RunResult& b) {
    return a.n_h != b.n_h ? a.n_h < b.n_h : a.window < b.window;
  });
  return out;
}

GridOutcome grid_search(CellKind kind, const Partitions& parts, const GridSpec& grid,
                        const TrainConfig& config, const SeedFn& seed_of) {
  GridOutcome out = run_grid(kind, parts, grid, config, seed_of);
  out.best = select_config(out.configs);
  return out;
}

RunResult retrain_and_test(CellKind kind, int n_h, int window, const Partitions& parts,
                           const TrainConfig& config) {
  std::vector<double> blended = parts.train;
  blended.insert(blended.end(), parts.validation.begin(), parts.validation.end());
  const Normalizer norm = Normalizer::fit(blended);
  const auto w = static_cast<std::size_t>(window);
  const WindowedDataset train_set = make_windows(norm.apply(blended), w);
  const WindowedDataset test_set = make_windows(norm.apply(parts.test), w);

  TrainOutcome out = train(kind, n_h, train_set, nullptr, config);
  if (!out.result.failed) {
    try {
      out.result.test_rmse =
          rmse(predict(kind, out.params, test_set.inputs, config.cell_options), test_set.targets);
    } catch (const NumericError& e) {
      out.result.failed = true;
      out.result.diagnostic = e.what();
    }
  }
  return out.result;
}

}  // namespace rnnbench::train
