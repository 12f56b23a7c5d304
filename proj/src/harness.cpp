#include "rnnbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "rnnbench/error.hpp"
#include "rnnbench/seeds.hpp"

namespace rnnbench::bench {

namespace {

using cells::CellKind;
using dgp::DgpKind;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::string hidden_text(const std::vector<int>& hidden) {
  bool contiguous = !hidden.empty();
  for (std::size_t i = 1; i < hidden.size(); ++i) contiguous &= hidden[i] == hidden[i - 1] + 1;
  if (!contiguous) return {};
  return std::to_string(hidden.front()) + ".." + std::to_string(hidden.back());
}

std::vector<int> parse_int_range(const json& j, const std::string& key) {
  if (j.is_array()) {
    std::vector<int> out;
    for (const json& v : j) {
      if (!v.is_number_integer()) throw ConfigError(key + ": expected integers");
      out.push_back(v.get<int>());
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
  }
  if (!j.is_string()) throw ConfigError(key + ": expected \"lo..hi\" or a list of integers");
  const std::string text = j.get<std::string>();
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) return {std::stoi(text)};
    return train::range(std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2)));
  } catch (const std::logic_error&) {
    throw ConfigError(key + ": cannot parse range '" + text + "'");
  }
}

// Reads one section of a patch, rejecting keys outside `setters`.
using Setter = std::function<void(const json&)>;

void apply_section(const json& patch, const std::string& prefix,
                   const std::map<std::string, Setter>& setters) {
  if (!patch.is_object()) throw ConfigError(prefix + ": expected an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const auto it = setters.find(key);
    if (it == setters.end()) {
      std::string valid;
      for (const auto& [k, unused] : setters) valid += (valid.empty() ? "" : ", ") + k;
      throw ConfigError("unknown config key '" + path + "' (valid: " + valid + ")");
    }
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
}

template <typename T>
Setter set(T& target) {
  return [&target](const json& v) { target = v.get<T>(); };
}

void validate(const BenchConfig& c) {
  if (!parse_scale(c.scale)) throw ConfigError("scale must be 'paper' or 'desk', got '" + c.scale + "'");
  if (c.jobs < 0) throw ConfigError("jobs must be >= 0");
  if (c.experiments.empty()) throw ConfigError("experiments: empty list");
  for (int e : c.experiments) {
    if (e != 1 && e != 2) throw ConfigError("experiments: expected 1 or 2, got " + std::to_string(e));
  }
  if (c.length < 3) throw ConfigError("series.length must be >= 3");
  if (c.noise_std < 0) throw ConfigError("series.noise_std must be >= 0");
  if (c.reps < 1) throw ConfigError("series.reps must be >= 1");
  if (c.split.total() != static_cast<std::size_t>(c.length)) {
    throw ConfigError("split " + std::to_string(c.split.train) + "+" +
                      std::to_string(c.split.validation) + "+" + std::to_string(c.split.test) +
                      " does not add up to series.length " + std::to_string(c.length));
  }
  if (c.train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (c.train.max_epochs < 0) throw ConfigError("train.max_epochs must be >= 0");
  if (!(c.train.adam.learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
  for (int h : c.hidden) {
    if (h < 1) throw ConfigError("grid.hidden_range values must be >= 1");
  }
  if (c.hidden.empty()) throw ConfigError("grid.hidden_range: empty");
  if (c.window_cap < 0) throw ConfigError("grid.window_cap must be >= 0");
  if (c.runs_per_config < 1) throw ConfigError("grid.runs_per_config must be >= 1");
  if (!(c.tie_tolerance >= 0)) throw ConfigError("bench.tie_tolerance must be >= 0");
  for (const std::string& name : c.cells) {
    if (!cells::parse_cell(name)) {
      throw ConfigError("unknown cell '" + name + "' (did you mean " + cells::suggest_cell(name) + "?)");
    }
  }
  for (const std::string& name : c.dgps) {
    if (!dgp::parse_dgp(name)) throw ConfigError("unknown DGP '" + name + "'");
  }
}

template <typename T>
std::size_t index_of(T kind) {
  return static_cast<std::size_t>(kind);
}

}  // namespace

std::string_view scale_name(Scale scale) { return scale == Scale::kPaper ? "paper" : "desk"; }

std::optional<Scale> parse_scale(std::string_view name) {
  if (name == "paper") return Scale::kPaper;
  if (name == "desk") return Scale::kDesk;
  return std::nullopt;
}

BenchConfig scale_preset(Scale scale) {
  BenchConfig c;
  c.scale = std::string(scale_name(scale));
  if (scale == Scale::kPaper) {
    c.length = 3000;
    c.reps = 30;
    c.split = {2000, 500, 500};
    c.train.max_epochs = 500;
    c.hidden = train::range(1, 10);
    c.window_cap = 0;
    c.runs_per_config = 10;
  } else {
    c.length = 600;
    c.reps = 3;
    c.split = {400, 100, 100};
    c.train.max_epochs = 100;
    c.hidden = train::range(1, 4);
    c.window_cap = 5;
    c.runs_per_config = 3;
  }
  return c;
}

json to_json(const BenchConfig& c) {
  const std::string hidden = hidden_text(c.hidden);
  return {
      {"scale", c.scale},
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"experiments", c.experiments},
      {"series",
       {{"length", c.length}, {"noise_mean", c.noise_mean}, {"noise_std", c.noise_std}, {"reps", c.reps}}},
      {"split", {{"train", c.split.train}, {"validation", c.split.validation}, {"test", c.split.test}}},
      {"train",
       {{"batch_size", c.train.batch_size},
        {"max_epochs", c.train.max_epochs},
        {"learning_rate", c.train.adam.learning_rate},
        {"beta1", c.train.adam.beta1},
        {"beta2", c.train.adam.beta2},
        {"epsilon", c.train.adam.epsilon},
        {"scrn_alpha", c.train.cell_options.scrn_alpha}}},
      {"grid",
       {{"hidden_range", hidden.empty() ? json(c.hidden) : json(hidden)},
        {"window_cap", c.window_cap},
        {"runs_per_config", c.runs_per_config}}},
      {"bench", {{"cells", c.cells}, {"dgps", c.dgps}, {"tie_tolerance", c.tie_tolerance}}},
  };
}

BenchConfig merge_json(const BenchConfig& base, const json& patch) {
  BenchConfig c = base;
  apply_section(patch, "",
                {
                    {"scale", set(c.scale)},
                    {"seed", set(c.seed)},
                    {"jobs", set(c.jobs)},
                    {"experiments", set(c.experiments)},
                    {"series",
                     [&](const json& s) {
                       apply_section(s, "series",
                                     {{"length", set(c.length)},
                                      {"noise_mean", set(c.noise_mean)},
                                      {"noise_std", set(c.noise_std)},
                                      {"reps", set(c.reps)}});
                     }},
                    {"split",
                     [&](const json& s) {
                       apply_section(s, "split",
                                     {{"train", set(c.split.train)},
                                      {"validation", set(c.split.validation)},
                                      {"test", set(c.split.test)}});
                     }},
                    {"train",
                     [&](const json& s) {
                       apply_section(s, "train",
                                     {{"batch_size", set(c.train.batch_size)},
                                      {"max_epochs", set(c.train.max_epochs)},
                                      {"learning_rate", set(c.train.adam.learning_rate)},
                                      {"beta1", set(c.train.adam.beta1)},
                                      {"beta2", set(c.train.adam.beta2)},
                                      {"epsilon", set(c.train.adam.epsilon)},
                                      {"scrn_alpha", set(c.train.cell_options.scrn_alpha)}});
                     }},
                    {"grid",
                     [&](const json& s) {
                       apply_section(
                           s, "grid",
                           {{"hidden_range",
                             [&](const json& v) { c.hidden = parse_int_range(v, "grid.hidden_range"); }},
                            {"window_cap", set(c.window_cap)},
                            {"runs_per_config", set(c.runs_per_config)}});
                     }},
                    {"bench",
                     [&](const json& s) {
                       apply_section(s, "bench",
                                     {{"cells", set(c.cells)},
                                      {"dgps", set(c.dgps)},
                                      {"tie_tolerance", set(c.tie_tolerance)}});
                     }},
                });
  validate(c);
  return c;
}

std::vector<int> window_grid(DgpKind kind, const BenchConfig& config) {
  int hi = dgp::default_window_max(kind);
  if (config.window_cap > 0) hi = std::min(hi, config.window_cap);
  return train::range(1, hi);
}

std::vector<CellKind> resolve_cells(int experiment, const BenchConfig& config) {
  const std::vector<CellKind> roster = cells::experiment_roster(experiment);
  if (config.cells.empty()) return roster;
  std::vector<CellKind> wanted;
  for (const std::string& name : config.cells) {
    const auto kind = cells::parse_cell(name);
    if (!kind) throw ConfigError("unknown cell '" + name + "'");
    wanted.push_back(*kind);
  }
  std::vector<CellKind> out;
  for (CellKind k : roster) {
    if (std::find(wanted.begin(), wanted.end(), k) != wanted.end()) out.push_back(k);
  }
  return out;
}

std::vector<DgpKind> resolve_dgps(const BenchConfig& config) {
  const auto& all = dgp::all_dgp_kinds();
  if (config.dgps.empty()) return {all.begin(), all.end()};
  std::vector<DgpKind> wanted;
  for (const std::string& name : config.dgps) {
    const auto kind = dgp::parse_dgp(name);
    if (!kind) throw ConfigError("unknown DGP '" + name + "'");
    wanted.push_back(*kind);
  }
  std::vector<DgpKind> out;
  for (DgpKind k : all) {
    if (std::find(wanted.begin(), wanted.end(), k) != wanted.end()) out.push_back(k);
  }
  return out;
}

std::vector<dgp::SeriesReplicate> make_series(DgpKind kind, const BenchConfig& config) {
  dgp::NoiseSpec noise;
  noise.mean = config.noise_mean;
  noise.std = config.noise_std;
  const dgp::DgpSpec spec = dgp::default_spec(kind, config.length, noise);
  return dgp::replicate(spec, config.reps, series_base_seed(config.seed, dgp::dgp_name(kind)));
}

json to_json(const RunRecord& r) {
  json j = {
      {"experiment", r.experiment},
      {"phase", r.phase},
      {"cell", r.cell},
      {"dgp", r.dgp},
      {"replicate", r.replicate},
      {"n_H", r.n_h},
      {"w", r.window},
      {"run", r.run},
      {"seed", r.seed},
      {"val_rmse", number_or_null(r.val_rmse)},
      {"test_rmse", number_or_null(r.test_rmse)},
      {"epochs", r.epochs},
      {"failed", r.failed},
  };
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  return j;
}

RunRecord record_from_json(const json& j) {
  try {
    RunRecord r;
    r.experiment = j.at("experiment").get<int>();
    r.phase = j.at("phase").get<std::string>();
    r.cell = j.at("cell").get<std::string>();
    r.dgp = j.at("dgp").get<std::string>();
    r.replicate = j.at("replicate").get<int>();
    r.n_h = j.at("n_H").get<int>();
    r.window = j.at("w").get<int>();
    r.run = j.at("run").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.val_rmse = number_from(j.at("val_rmse"));
    r.test_rmse = number_from(j.at("test_rmse"));
    r.epochs = j.at("epochs").get<int>();
    r.failed = j.at("failed").get<bool>();
    r.diagnostic = j.value("diagnostic", "");
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed result record: ") + e.what());
  }
}

JobOutcome run_job(int experiment, CellKind cell, const dgp::SeriesReplicate& series,
                   const BenchConfig& config) {
  const std::string cell_name(cells::cell_name(cell));
  const std::string dgp_name(dgp::dgp_name(series.dgp.kind));
  const train::Partitions parts = train::split(series.values, config.split);

  train::GridSpec grid;
  grid.hidden = config.hidden;
  grid.windows = window_grid(series.dgp.kind, config);
  grid.runs_per_config = config.runs_per_config;

  auto key = [&](int n_h, int w, int run, Phase phase) {
    return JobKey{cell_name, dgp_name, series.replicate_index, n_h, w, run, phase};
  };
  auto record = [&](const train::RunResult& r, const char* phase, int run) {
    RunRecord rec;
    rec.experiment = experiment;
    rec.phase = phase;
    rec.cell = cell_name;
    rec.dgp = dgp_name;
    rec.replicate = series.replicate_index;
    rec.n_h = r.n_h;
    rec.window = static_cast<int>(r.window);
    rec.run = run;
    rec.seed = r.seed;
    rec.val_rmse = r.val_rmse;
    rec.test_rmse = r.test_rmse;
    rec.epochs = r.epochs;
    rec.failed = r.failed;
    rec.diagnostic = r.diagnostic;
    rec.wall_time = r.wall_time;
    return rec;
  };

  JobOutcome out;
  train::GridOutcome g = train::run_grid(cell, parts, grid, config.train, [&](int n_h, int w, int run) {
    return job_seed(config.seed, key(n_h, w, run, Phase::kGrid));
  });
  // Runs come back ordered by (n_H, w) with runs_per_config entries each.
  for (std::size_t i = 0; i < g.runs.size(); ++i) {
    out.records.push_back(record(g.runs[i], "grid", static_cast<int>(i) % grid.runs_per_config));
  }
  try {
    g.best = train::select_config(g.configs);
  } catch (const ExperimentError& e) {
    out.failure = e.what();
    return out;
  }
  train::TrainConfig retrain = config.train;
  retrain.seed = job_seed(config.seed, key(g.best.n_h, g.best.window, 0, Phase::kRetrain));
  const train::RunResult r = train::retrain_and_test(cell, g.best.n_h, g.best.window, parts, retrain);
  out.records.push_back(record(r, "retrain", 0));
  if (r.failed) out.failure = "retrain failed: " + r.diagnostic;
  return out;
}

ExperimentRun run_experiment(int experiment, const BenchConfig& config, const ProgressFn& progress) {
  validate(config);
  const std::vector<CellKind> roster = resolve_cells(experiment, config);
  const std::vector<DgpKind> kinds = resolve_dgps(config);

  std::vector<std::vector<dgp::SeriesReplicate>> series;
  for (DgpKind k : kinds) series.push_back(make_series(k, config));

  struct Job {
    CellKind cell;
    std::size_t dgp;
    int replicate;
  };
  std::vector<Job> jobs;
  for (CellKind c : roster) {
    for (std::size_t d = 0; d < kinds.size(); ++d) {
      for (int r = 0; r < config.reps; ++r) jobs.push_back({c, d, r});
    }
  }

  std::vector<JobOutcome> outcomes(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      try {
        outcomes[i] = run_job(experiment, job.cell, series[job.dgp][static_cast<std::size_t>(job.replicate)],
                              config);
      } catch (const Error& e) {
        outcomes[i].failure = e.what();
      } catch (...) {
        errors[i] = std::current_exception();
      }
      if (progress) {
        const std::lock_guard lock(progress_mutex);
        progress(++done, jobs.size());
      }
    }
  };

  std::size_t workers = config.jobs > 0 ? static_cast<std::size_t>(config.jobs)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(1, jobs.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentRun run;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& recs = outcomes[i].records;
    run.records.insert(run.records.end(), recs.begin(), recs.end());
    if (outcomes[i].failure) {
      run.failures.push_back({experiment, std::string(cells::cell_name(jobs[i].cell)),
                              std::string(dgp::dgp_name(kinds[jobs[i].dgp])), jobs[i].replicate,
                              *outcomes[i].failure});
    }
  }
  return run;
}

std::vector<BenchmarkResult> aggregate(std::span<const RunRecord> records) {
  struct Acc {
    std::vector<double> rmse;
    std::map<int, int> hidden;
    std::map<int, int> windows;
  };
  std::map<std::tuple<int, std::size_t, std::size_t>, Acc> groups;
  for (const RunRecord& r : records) {
    if (r.phase != "retrain") continue;
    const auto cell = cells::parse_cell(r.cell);
    const auto kind = dgp::parse_dgp(r.dgp);
    if (!cell || !kind) throw ConfigError("result record names unknown cell/DGP: " + r.cell + "/" + r.dgp);
    Acc& acc = groups[{r.experiment, index_of(*cell), index_of(*kind)}];
    if (r.failed || !std::isfinite(r.test_rmse)) continue;
    acc.rmse.push_back(r.test_rmse);
    ++acc.hidden[r.n_h];
    ++acc.windows[r.window];
  }

  auto mode = [](const std::map<int, int>& counts) {
    int best = 0, best_count = 0;
    for (const auto& [value, count] : counts) {
      if (count > best_count) {
        best = value;
        best_count = count;
      }
    }
    return best;
  };

  std::vector<BenchmarkResult> out;
  for (const auto& [key, acc] : groups) {
    BenchmarkResult b;
    b.experiment = std::get<0>(key);
    b.cell = cells::all_cell_kinds()[std::get<1>(key)];
    b.dgp = dgp::all_dgp_kinds()[std::get<2>(key)];
    b.replicates = static_cast<int>(acc.rmse.size());
    if (acc.rmse.empty()) {
      b.mean_test_rmse = kNaN;
      b.std_test_rmse = kNaN;
    } else {
      double sum = 0.0;
      for (double v : acc.rmse) sum += v;
      const double n = static_cast<double>(acc.rmse.size());
      b.mean_test_rmse = sum / n;
      double ss = 0.0;
      for (double v : acc.rmse) ss += (v - b.mean_test_rmse) * (v - b.mean_test_rmse);
      b.std_test_rmse = acc.rmse.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      b.n_h = mode(acc.hidden);
      b.window = mode(acc.windows);
      cells::CellDims dims;
      dims.n_h = b.n_h;
      b.empirical_complexity = cells::param_count(b.cell, dims);
    }
    out.push_back(b);
  }
  return out;
}

namespace {

const BenchmarkResult* find_result(std::span<const BenchmarkResult> results, int experiment,
                                   CellKind cell, DgpKind kind) {
  for (const BenchmarkResult& r : results) {
    if (r.experiment == experiment && r.cell == cell && r.dgp == kind) return &r;
  }
  return nullptr;
}

}  // namespace

double behavior_mean(std::span<const BenchmarkResult> results, int experiment, CellKind cell,
                     dgp::Behavior behavior) {
  const auto kinds = dgp::dgps_of(behavior);
  double sum = 0.0;
  for (DgpKind k : kinds) {
    const BenchmarkResult* r = find_result(results, experiment, cell, k);
    if (r == nullptr || r->replicates == 0) {
      throw IncompleteBehaviorError(std::string(cells::cell_name(cell)) + " has no result for " +
                                    std::string(dgp::dgp_name(k)) + " (behavior " +
                                    std::string(dgp::behavior_name(behavior)) + ")");
    }
    sum += r->mean_test_rmse;
  }
  return sum / static_cast<double>(kinds.size());
}

std::vector<Star> select_stars(std::span<const StarCandidate> row, double tol) {
  std::vector<Star> stars(row.size(), Star::kNone);
  double best = std::numeric_limits<double>::infinity();
  for (const StarCandidate& c : row) {
    if (std::isfinite(c.rmse)) best = std::min(best, c.rmse);
  }
  if (!std::isfinite(best)) return stars;
  // Slack absorbs decimal representation error of values like 0.0286.
  const double limit = best + tol + 1e-12;
  std::optional<std::size_t> yellow;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!std::isfinite(row[i].rmse) || row[i].rmse > limit) continue;
    stars[i] = Star::kGray;
    if (!yellow || row[i].complexity < row[*yellow].complexity ||
        (row[i].complexity == row[*yellow].complexity && row[i].cell < row[*yellow].cell)) {
      yellow = i;
    }
  }
  stars[*yellow] = Star::kYellow;
  return stars;
}

GuidelineTable build_guideline(int experiment, std::span<const BenchmarkResult> results, double tol) {
  GuidelineTable table;
  table.experiment = experiment;
  std::vector<DgpKind> present;
  for (const BenchmarkResult& r : results) {
    if (r.experiment != experiment) continue;
    if (std::find(table.cells.begin(), table.cells.end(), r.cell) == table.cells.end()) {
      table.cells.push_back(r.cell);
    }
    if (std::find(present.begin(), present.end(), r.dgp) == present.end()) present.push_back(r.dgp);
  }
  const auto roster = cells::experiment_roster(experiment);
  std::vector<CellKind> ordered;
  for (CellKind k : roster) {
    if (std::find(table.cells.begin(), table.cells.end(), k) != table.cells.end()) ordered.push_back(k);
  }
  for (CellKind k : table.cells) {
    if (std::find(roster.begin(), roster.end(), k) == roster.end()) ordered.push_back(k);
  }
  table.cells = ordered;

  auto finish = [&](GuidelineRow& row) {
    std::vector<StarCandidate> candidates;
    for (std::size_t i = 0; i < table.cells.size(); ++i) {
      candidates.push_back({std::string(cells::cell_name(table.cells[i])), row.rmse[i], row.complexity[i]});
    }
    row.stars = select_stars(candidates, tol);
    table.rows.push_back(std::move(row));
  };

  for (dgp::Behavior behavior : dgp::kBehaviors) {
    const auto kinds = dgp::dgps_of(behavior);
    bool complete = true;
    for (DgpKind k : kinds) {
      if (std::find(present.begin(), present.end(), k) == present.end()) {
        complete = false;
        continue;
      }
      GuidelineRow row;
      row.behavior = behavior;
      row.label = std::string(dgp::dgp_name(k));
      for (CellKind c : table.cells) {
        const BenchmarkResult* r = find_result(results, experiment, c, k);
        const bool ok = r != nullptr && r->replicates > 0;
        row.rmse.push_back(ok ? r->mean_test_rmse : kNaN);
        row.complexity.push_back(ok ? static_cast<double>(r->empirical_complexity) : kNaN);
      }
      finish(row);
    }
    if (!complete) continue;
    GuidelineRow mean;
    mean.behavior = behavior;
    mean.label = "Mean";
    mean.is_mean = true;
    for (CellKind c : table.cells) {
      try {
        mean.rmse.push_back(behavior_mean(results, experiment, c, behavior));
        double total = 0.0;
        for (DgpKind k : kinds) {
          total += static_cast<double>(find_result(results, experiment, c, k)->empirical_complexity);
        }
        mean.complexity.push_back(total / static_cast<double>(kinds.size()));
      } catch (const IncompleteBehaviorError&) {
        mean.rmse.push_back(kNaN);
        mean.complexity.push_back(kNaN);
      }
    }
    finish(mean);
  }
  return table;
}

long reference_complexity(CellKind kind) {
  cells::CellDims dims;
  dims.n_i = 1;
  dims.n_h = 10;
  return cells::param_count(kind, dims);
}

SummaryRow summary_row(dgp::Behavior behavior, std::optional<std::string> best1, double rmse1,
                       std::optional<std::string> best2, double rmse2, double tol) {
  SummaryRow row;
  row.behavior = behavior;
  row.best1 = std::move(best1);
  row.rmse1 = rmse1;
  row.best2 = std::move(best2);
  row.rmse2 = rmse2;
  std::vector<StarCandidate> candidates;
  for (const auto& [name, rmse] : {std::pair{row.best1, rmse1}, std::pair{row.best2, rmse2}}) {
    if (!name) continue;
    const auto kind = cells::parse_cell(*name);
    if (!kind) throw ConfigError("unknown cell '" + *name + "' in summary row");
    candidates.push_back({std::string(cells::cell_name(*kind)), rmse,
                          static_cast<double>(reference_complexity(*kind))});
  }
  const auto stars = select_stars(candidates, tol);
  for (std::size_t i = 0; i < stars.size(); ++i) {
    if (stars[i] == Star::kYellow) row.recommended = candidates[i].cell;
  }
  return row;
}

std::vector<SummaryRow> build_summary(const GuidelineTable* exp1, const GuidelineTable* exp2, double tol) {
  auto best_of = [](const GuidelineTable* table, dgp::Behavior behavior)
      -> std::optional<std::pair<std::string, double>> {
    if (table == nullptr) return std::nullopt;
    for (const GuidelineRow& row : table->rows) {
      if (!row.is_mean || row.behavior != behavior) continue;
      for (std::size_t i = 0; i < row.stars.size(); ++i) {
        if (row.stars[i] == Star::kYellow) {
          return std::pair{std::string(cells::cell_name(table->cells[i])), row.rmse[i]};
        }
      }
    }
    return std::nullopt;
  };
  std::vector<SummaryRow> rows;
  for (dgp::Behavior behavior : dgp::kBehaviors) {
    const auto b1 = best_of(exp1, behavior);
    const auto b2 = best_of(exp2, behavior);
    if (!b1 && !b2) continue;
    rows.push_back(summary_row(behavior, b1 ? std::optional(b1->first) : std::nullopt,
                               b1 ? b1->second : kNaN, b2 ? std::optional(b2->first) : std::nullopt,
                               b2 ? b2->second : kNaN, tol));
  }
  return rows;
}

}  // namespace rnnbench::bench
