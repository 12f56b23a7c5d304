#include "rnnbench/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rnnbench/cells.hpp"
#include "rnnbench/dgp.hpp"
#include "rnnbench/error.hpp"
#include "rnnbench/harness.hpp"
#include "rnnbench/names.hpp"
#include "rnnbench/report.hpp"
#include "rnnbench/seeds.hpp"
#include "rnnbench/series_io.hpp"
#include "rnnbench/training.hpp"

namespace rnnbench::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kGradTolerance = 1e-5;

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<int> experiment;
  std::string scale;
  std::vector<std::string> cells;
  std::vector<std::string> dgps;
  bool all = false;
  std::string results;
  std::optional<int> hidden;
  std::optional<int> window;
  std::optional<int> replicate;
  int steps = 5;
  bool quiet = false;
};

std::string join(const std::vector<std::string>& items, const char* sep = ", ") {
  std::string out;
  for (const std::string& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

std::vector<std::string> cell_names() {
  std::vector<std::string> out;
  for (cells::CellKind k : cells::all_cell_kinds()) out.emplace_back(cells::cell_name(k));
  return out;
}

std::vector<std::string> dgp_names() {
  std::vector<std::string> out;
  for (dgp::DgpKind k : dgp::all_dgp_kinds()) out.emplace_back(dgp::dgp_name(k));
  return out;
}

std::string footer() {
  return "Cells (31): " + join(cell_names()) + "\nDGPs (21): " + join(dgp_names()) +
         "\nExit codes: 0 success, 1 usage/config error, 2 runtime failure.";
}

cells::CellKind require_cell(const std::string& name) {
  if (const auto k = cells::parse_cell(name)) return *k;
  throw ConfigError("unknown cell '" + name + "'; did you mean '" + cells::suggest_cell(name) +
                    "'?\nvalid cells: " + join(cell_names()));
}

dgp::DgpKind require_dgp(const std::string& name) {
  if (const auto k = dgp::parse_dgp(name)) return *k;
  std::vector<std::string_view> names;
  for (dgp::DgpKind k : dgp::all_dgp_kinds()) names.push_back(dgp::dgp_name(k));
  throw ConfigError("unknown DGP '" + name + "'; did you mean '" + closest_name(name, names) +
                    "'?\nvalid DGPs: " + join(dgp_names()));
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// "a.b.c=value" -> {"a": {"b": {"c": value}}}. Values parse as JSON when they
// can, otherwise they are taken as strings (so 1..4 and desk need no quoting).
json override_patch(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + text + "' is not of the form key=value");
  }
  const std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
    parts.push_back(part);
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  return patch;
}

bench::BenchConfig resolve_config(const Options& o) {
  json file;
  if (!o.config_path.empty()) file = read_json_file(o.config_path);
  std::string scale = o.scale;
  if (scale.empty() && file.is_object() && file.contains("scale") && file["scale"].is_string()) {
    scale = file["scale"].get<std::string>();
  }
  if (scale.empty()) scale = "desk";
  const auto preset = bench::parse_scale(scale);
  if (!preset) throw ConfigError("--scale must be 'paper' or 'desk', got '" + scale + "'");

  bench::BenchConfig config = bench::scale_preset(*preset);
  if (!file.is_null()) config = bench::merge_json(config, file);
  for (const std::string& text : o.overrides) config = bench::merge_json(config, override_patch(text));

  json flags = json::object();
  if (!o.scale.empty()) flags["scale"] = o.scale;
  if (o.seed) flags["seed"] = *o.seed;
  if (o.jobs) flags["jobs"] = *o.jobs;
  if (o.experiment) flags["experiments"] = json::array({*o.experiment});
  return bench::merge_json(config, flags);
}

fs::path resolve_out(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("RNNBENCH_OUT"); env != nullptr && *env != '\0') return env;
  return "rnnbench-out";
}

void write_resolved(const fs::path& out, const bench::BenchConfig& config) {
  fs::create_directories(out);
  report::write_text(out / "resolved_config.json", bench::to_json(config).dump(2) + "\n");
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::vector<dgp::DgpKind> selected_dgps(const Options& o, const bench::BenchConfig& config) {
  if (o.all || o.dgps.empty()) {
    if (!o.all && o.dgps.empty() && config.dgps.empty()) {
      throw ConfigError("pass --dgp NAME (repeatable) or --all");
    }
    return bench::resolve_dgps(config);
  }
  std::vector<dgp::DgpKind> out;
  for (const std::string& name : o.dgps) out.push_back(require_dgp(name));
  return out;
}

int cmd_generate(const Options& o, std::ostream& out) {
  bench::BenchConfig config = resolve_config(o);
  const auto kinds = selected_dgps(o, config);
  const fs::path dir = resolve_out(o);
  write_resolved(dir, config);
  int files = 0;
  for (dgp::DgpKind k : kinds) {
    for (const dgp::SeriesReplicate& s : bench::make_series(k, config)) {
      write_series(dir / "series", s);
      ++files;
    }
  }
  out << "wrote " << files << " series to " << (dir / "series").string() << "\n";
  return kExitOk;
}

struct Single {
  cells::CellKind cell;
  dgp::DgpKind dgp;
};

Single require_single(const Options& o) {
  if (o.cells.size() != 1 || o.dgps.size() != 1) {
    throw ConfigError("this command needs exactly one --cell and one --dgp");
  }
  return {require_cell(o.cells.front()), require_dgp(o.dgps.front())};
}

int cmd_train(const Options& o, std::ostream& out) {
  const Single job = require_single(o);
  const bench::BenchConfig config = resolve_config(o);
  const int rep = o.replicate.value_or(0);
  if (rep < 0 || rep >= config.reps) {
    throw ConfigError("--replicate must be in 0.." + std::to_string(config.reps - 1));
  }
  const int n_h = o.hidden.value_or(config.hidden.back());
  const int w = o.window.value_or(bench::window_grid(job.dgp, config).back());
  if (n_h < 1 || w < 1) throw ConfigError("--hidden and --window must be >= 1");

  const auto series = bench::make_series(job.dgp, config);
  const train::Partitions parts = train::split(series[static_cast<std::size_t>(rep)].values, config.split);
  const train::PreparedData data = train::prepare(parts, w);
  train::TrainConfig tc = config.train;
  const std::string cell(cells::cell_name(job.cell));
  const std::string kind(dgp::dgp_name(job.dgp));
  tc.seed = job_seed(config.seed, JobKey{cell, kind, rep, n_h, w, 0, Phase::kGrid});
  const train::TrainOutcome result = train::train(job.cell, n_h, data.train, &data.validation, tc);
  const train::RunResult& r = result.result;

  const fs::path dir = resolve_out(o);
  write_resolved(dir, config);
  json j = {{"cell", cell},          {"dgp", kind},
            {"replicate", rep},      {"n_H", n_h},
            {"w", w},                {"seed", r.seed},
            {"epochs", r.epochs},    {"failed", r.failed},
            {"val_rmse", std::isfinite(r.val_rmse) ? json(r.val_rmse) : json(nullptr)},
            {"train_curve", r.train_curve}};
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  report::write_text(dir / "train_result.json", j.dump(2) + "\n");
  out << cell << " on " << kind << " rep " << rep << " (n_H=" << n_h << ", w=" << w
      << "): val RMSE " << report::format_rmse(r.val_rmse) << (r.failed ? " [failed]" : "") << "\n";
  return r.failed ? kExitRuntime : kExitOk;
}

int cmd_grid(const Options& o, std::ostream& out) {
  const Single job = require_single(o);
  const bench::BenchConfig config = resolve_config(o);
  const auto series = bench::make_series(job.dgp, config);
  const int experiment = config.experiments.front();
  std::vector<bench::RunRecord> records;
  bool failed = false;
  for (const dgp::SeriesReplicate& s : series) {
    if (o.replicate && s.replicate_index != *o.replicate) continue;
    bench::JobOutcome result = bench::run_job(experiment, job.cell, s, config);
    records.insert(records.end(), result.records.begin(), result.records.end());
    if (result.failure) {
      failed = true;
      out << "replicate " << s.replicate_index << ": " << *result.failure << "\n";
      continue;
    }
    const bench::RunRecord& r = result.records.back();
    out << "replicate " << s.replicate_index << ": best n_H=" << r.n_h << " w=" << r.window
        << ", test RMSE " << report::format_rmse(r.test_rmse) << "\n";
  }
  if (records.empty()) throw ConfigError("--replicate is out of range");
  const fs::path dir = resolve_out(o);
  write_resolved(dir, config);
  report::write_text(dir / "results.jsonl", report::results_jsonl(records));
  return failed ? kExitRuntime : kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  Options opts = o;
  bench::BenchConfig config = resolve_config(opts);
  if (!o.cells.empty()) {
    config.cells.clear();
    for (const std::string& name : o.cells) config.cells.emplace_back(cells::cell_name(require_cell(name)));
  }
  if (!o.dgps.empty()) {
    config.dgps.clear();
    for (const std::string& name : o.dgps) config.dgps.emplace_back(dgp::dgp_name(require_dgp(name)));
  }
  config = bench::merge_json(config, json::object());
  for (int e : config.experiments) {
    if (bench::resolve_cells(e, config).empty()) {
      throw ConfigError("no selected cell belongs to experiment " + std::to_string(e));
    }
  }
  const fs::path dir = resolve_out(o);
  write_resolved(dir, config);

  const std::string started = timestamp();
  std::vector<bench::RunRecord> records;
  for (int e : config.experiments) {
    bench::ProgressFn progress;
    if (!o.quiet) {
      progress = [&err, e](std::size_t done, std::size_t total) {
        err << "experiment " << e << ": " << done << "/" << total << " jobs\n";
      };
    }
    bench::ExperimentRun run = bench::run_experiment(e, config, progress);
    records.insert(records.end(), run.records.begin(), run.records.end());
  }

  report::write_text(dir / "results.jsonl", report::results_jsonl(records));
  std::string log = json{{"started", started}, {"finished", timestamp()}}.dump() + "\n";
  for (const bench::RunRecord& r : records) {
    log += json{{"experiment", r.experiment}, {"phase", r.phase},     {"cell", r.cell},
                {"dgp", r.dgp},               {"replicate", r.replicate}, {"n_H", r.n_h},
                {"w", r.window},              {"run", r.run},         {"wall_time", r.wall_time}}
               .dump() +
           "\n";
  }
  report::write_text(dir / "run_log.jsonl", log);
  report::emit_report(dir, records, config.tie_tolerance);
  out << "wrote " << records.size() << " run records and the report to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  const fs::path dir = resolve_out(o);
  const fs::path results = o.results.empty() ? dir / "results.jsonl" : fs::path(o.results);
  double tol = bench::kTieTolerance;
  if (!o.config_path.empty() || !o.overrides.empty()) tol = resolve_config(o).tie_tolerance;
  const auto records = report::read_results(results);
  report::emit_report(dir, records, tol);
  out << "report written to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  std::vector<cells::CellKind> kinds;
  if (o.all) {
    kinds.assign(cells::all_cell_kinds().begin(), cells::all_cell_kinds().end());
  } else {
    for (const std::string& name : o.cells) kinds.push_back(require_cell(name));
  }
  if (kinds.empty()) throw ConfigError("pass --cell NAME (repeatable) or --all");
  cells::CellDims dims;
  dims.n_h = o.hidden.value_or(3);
  if (dims.n_h < 1 || o.steps < 1) throw ConfigError("--hidden and --steps must be >= 1");
  const std::uint64_t seed = o.seed.value_or(0);
  bool ok = true;
  for (cells::CellKind k : kinds) {
    const double e = cells::gradient_check(k, dims, o.steps, seed);
    const bool pass = e < kGradTolerance;
    ok &= pass;
    out << std::left << std::setw(14) << cells::cell_name(k) << " max rel err " << std::scientific
        << std::setprecision(3) << e << std::defaultfloat << (pass ? "  ok" : "  FAIL") << "\n";
  }
  return ok ? kExitOk : kExitRuntime;
}

int cmd_catalog(std::ostream& out) {
  json j = cells::cell_catalog();
  json dgps = json::array();
  for (dgp::DgpKind k : dgp::all_dgp_kinds()) {
    dgps.push_back({{"name", std::string(dgp::dgp_name(k))},
                    {"behavior", std::string(dgp::behavior_name(dgp::behavior_of(k)))},
                    {"window_max", dgp::default_window_max(k)}});
  }
  j["dgps"] = dgps;
  out << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recurrent cell benchmark on synthetic time series", "rnnbench"};
  app.require_subcommand(1);
  app.footer(footer());
  Options o;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--set", o.overrides, "Override a config key, e.g. grid.hidden_range=1..4");
    cmd->add_option("--out", o.out_dir, "Output directory (fallback: $RNNBENCH_OUT)");
    cmd->add_option("--seed", o.seed, "Top-level seed");
    cmd->add_option("--jobs", o.jobs, "Worker threads (default: available parallelism)");
    cmd->add_option("--scale", o.scale, "Preset: desk or paper");
    cmd->footer(footer());
  };

  CLI::App* generate = app.add_subcommand("generate", "Write Monte Carlo replicates of DGPs as CSV");
  common(generate);
  generate->add_option("--dgp", o.dgps, "DGP name (repeatable)");
  generate->add_flag("--all", o.all, "All 21 DGPs");

  CLI::App* train_cmd = app.add_subcommand("train", "Train one cell on one replicate");
  common(train_cmd);
  train_cmd->add_option("--cell", o.cells, "Cell name")->required();
  train_cmd->add_option("--dgp", o.dgps, "DGP name")->required();
  train_cmd->add_option("--hidden", o.hidden, "Hidden width n_H");
  train_cmd->add_option("--window", o.window, "Estimation window w");
  train_cmd->add_option("--replicate", o.replicate, "Replicate index");

  CLI::App* grid = app.add_subcommand("grid", "Grid search and retrain one cell on one DGP");
  common(grid);
  grid->add_option("--cell", o.cells, "Cell name")->required();
  grid->add_option("--dgp", o.dgps, "DGP name")->required();
  grid->add_option("--replicate", o.replicate, "Only this replicate");
  grid->add_option("--experiment", o.experiment, "Experiment tag for the records (1 or 2)");

  CLI::App* bench_cmd = app.add_subcommand("bench", "Run experiments and write the report set");
  common(bench_cmd);
  bench_cmd->add_option("--experiment", o.experiment, "1 or 2 (default: both)");
  bench_cmd->add_option("--cell", o.cells, "Restrict to these cells (repeatable)");
  bench_cmd->add_option("--dgp", o.dgps, "Restrict to these DGPs (repeatable)");
  bench_cmd->add_flag("--quiet", o.quiet, "No progress output");

  CLI::App* report_cmd = app.add_subcommand("report", "Regenerate the report from results.jsonl");
  report_cmd->add_option("--results", o.results, "results.jsonl (default: <out>/results.jsonl)");
  report_cmd->add_option("--out", o.out_dir, "Output directory (fallback: $RNNBENCH_OUT)");
  report_cmd->add_option("--config", o.config_path, "JSON config file");
  report_cmd->add_option("--set", o.overrides, "Override a config key");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of BPTT per cell");
  gradcheck->add_option("--cell", o.cells, "Cell name (repeatable)");
  gradcheck->add_flag("--all", o.all, "All 31 cells");
  gradcheck->add_option("--hidden", o.hidden, "Hidden width (default 3)");
  gradcheck->add_option("--steps", o.steps, "Unroll length (default 5)");
  gradcheck->add_option("--seed", o.seed, "Parameter seed");

  CLI::App* catalog = app.add_subcommand("catalog", "Print cells, complexity formulas and DGPs as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (grid->parsed()) return cmd_grid(o, out);
    if (bench_cmd->parsed()) return cmd_bench(o, out, err);
    if (report_cmd->parsed()) return cmd_report(o, out);
    if (gradcheck->parsed()) return cmd_gradcheck(o, out);
    if (catalog->parsed()) return cmd_catalog(out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidKindError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace rnnbench::cli
