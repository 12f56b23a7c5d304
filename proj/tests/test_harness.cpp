#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rnnbench/error.hpp"
#include "rnnbench/harness.hpp"
#include "rnnbench/report.hpp"

using namespace rnnbench;
using namespace rnnbench::bench;
using cells::CellKind;
using dgp::Behavior;
using dgp::DgpKind;

namespace {

RunRecord retrain(int experiment, CellKind cell, DgpKind dgp, int rep, double test_rmse, int n_h = 2,
                  int window = 1) {
  RunRecord r;
  r.experiment = experiment;
  r.phase = "retrain";
  r.cell = std::string(cells::cell_name(cell));
  r.dgp = std::string(dgp::dgp_name(dgp));
  r.replicate = rep;
  r.n_h = n_h;
  r.window = window;
  r.seed = static_cast<std::uint64_t>(rep);
  r.val_rmse = std::nan("");
  r.test_rmse = test_rmse;
  r.epochs = 1;
  return r;
}

BenchmarkResult result(int experiment, CellKind cell, DgpKind dgp, double mean, long complexity) {
  BenchmarkResult b;
  b.experiment = experiment;
  b.cell = cell;
  b.dgp = dgp;
  b.replicates = 3;
  b.mean_test_rmse = mean;
  b.n_h = 1;
  b.window = 1;
  b.empirical_complexity = complexity;
  return b;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

const std::vector<CellKind> kFixtureCells = {CellKind::ELMAN, CellKind::MGU_SLIM3, CellKind::MGU_SLIM2,
                                             CellKind::MGU, CellKind::GRU};

// Deterministic-behavior results for experiment 2 where MGU-SLIM3 and MGU share
// the best mean RMSE.
std::vector<BenchmarkResult> deterministic_fixture() {
  std::vector<BenchmarkResult> out;
  const auto dgps = dgp::dgps_of(Behavior::kDeterministic);
  for (std::size_t d = 0; d < dgps.size(); ++d) {
    const double shift = 0.001 * static_cast<double>(d);
    out.push_back(result(2, CellKind::ELMAN, dgps[d], 0.060 + shift, 120));
    out.push_back(result(2, CellKind::MGU_SLIM3, dgps[d], 0.0468 + (d % 2 ? 0.00002 : -0.00002), 140));
    out.push_back(result(2, CellKind::MGU_SLIM2, dgps[d], 0.052, 220));
    out.push_back(result(2, CellKind::MGU, dgps[d], 0.0468 + (d % 2 ? -0.00002 : 0.00002), 240));
    out.push_back(result(2, CellKind::GRU, dgps[d], 0.049 - shift, 360));
  }
  return out;
}

}  // namespace

TEST(Aggregate, MatchesOracleOnRandomFixtures) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 0.2);
  std::vector<RunRecord> records;
  std::vector<double> values;
  for (int rep = 0; rep < 7; ++rep) {
    values.push_back(u(rng));
    records.push_back(retrain(1, CellKind::PC, DgpKind::NAR2, rep, values.back(), rep < 4 ? 3 : 2, 2));
    RunRecord grid = records.back();
    grid.phase = "grid";
    grid.test_rmse = 99.0;
    records.push_back(grid);
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (values.size() - 1));
  const auto agg = aggregate(records);
  ASSERT_EQ(agg.size(), 1u);
  EXPECT_NEAR(agg[0].mean_test_rmse, mean, 1e-12);
  EXPECT_NEAR(agg[0].std_test_rmse, sd, 1e-12);
  EXPECT_EQ(agg[0].replicates, 7);
  EXPECT_EQ(agg[0].n_h, 3);
  EXPECT_EQ(agg[0].window, 2);
  EXPECT_EQ(agg[0].empirical_complexity, cells::param_count(CellKind::PC, {1, 3}));
}

TEST(Aggregate, SingleReplicateHasZeroStd) {
  const std::vector<RunRecord> records = {retrain(2, CellKind::GRU, DgpKind::T, 0, 0.05)};
  const auto agg = aggregate(records);
  EXPECT_EQ(agg[0].std_test_rmse, 0.0);
  EXPECT_EQ(agg[0].mean_test_rmse, 0.05);
}

TEST(Aggregate, FailedRetrainsAreLeftOut) {
  std::vector<RunRecord> records = {retrain(2, CellKind::GRU, DgpKind::T, 0, 0.05),
                                    retrain(2, CellKind::GRU, DgpKind::T, 1, 0.07),
                                    retrain(2, CellKind::GRU, DgpKind::T, 2, std::nan(""))};
  records[2].failed = true;
  const auto agg = aggregate(records);
  EXPECT_EQ(agg[0].replicates, 2);
  EXPECT_NEAR(agg[0].mean_test_rmse, 0.06, 1e-15);
}

TEST(BehaviorMean, UnweightedMeanOfDgpMeans) {
  std::vector<BenchmarkResult> rs = {result(2, CellKind::GRU, DgpKind::TRW, 0.02, 1),
                                     result(2, CellKind::GRU, DgpKind::SRW, 0.04, 1),
                                     result(2, CellKind::GRU, DgpKind::TSRW, 0.03, 1)};
  EXPECT_NEAR(behavior_mean(rs, 2, CellKind::GRU, Behavior::kRandomWalk), 0.03, 1e-15);
  rs.pop_back();
  EXPECT_THROW(behavior_mean(rs, 2, CellKind::GRU, Behavior::kRandomWalk), IncompleteBehaviorError);
}

TEST(BehaviorMean, DeterministicHasFiveTerms) {
  const auto rs = deterministic_fixture();
  double sum = 0.0;
  int terms = 0;
  for (const auto& r : rs) {
    if (r.cell == CellKind::GRU) {
      sum += r.mean_test_rmse;
      ++terms;
    }
  }
  EXPECT_EQ(terms, 5);
  EXPECT_NEAR(behavior_mean(rs, 2, CellKind::GRU, Behavior::kDeterministic), sum / 5, 1e-15);
}

TEST(Stars, RuleExample) {
  const std::vector<StarCandidate> row = {{"A", 0.050, 100}, {"B", 0.050, 120}, {"C", 0.060, 50}};
  EXPECT_EQ(select_stars(row), (std::vector<Star>{Star::kYellow, Star::kGray, Star::kNone}));
}

TEST(Stars, DistinctErrorsGiveOneStar) {
  const std::vector<StarCandidate> row = {{"A", 0.050, 100}, {"B", 0.040, 120}, {"C", 0.060, 50}};
  EXPECT_EQ(select_stars(row), (std::vector<Star>{Star::kNone, Star::kYellow, Star::kNone}));
}

TEST(Stars, ComplexityTieFallsBackToName) {
  const std::vector<StarCandidate> row = {{"MGU", 0.03, 10}, {"GRU", 0.03, 10}};
  EXPECT_EQ(select_stars(row), (std::vector<Star>{Star::kGray, Star::kYellow}));
}

TEST(Stars, PublishedFourthDecimalTies) {
  // 0.0286 vs 0.0286 tie; 0.1163 vs 0.1166 do not.
  const std::vector<StarCandidate> rw = {{"CIFG", 0.0286, 360}, {"MGU-SLIM2", 0.0286, 220}};
  EXPECT_EQ(select_stars(rw), (std::vector<Star>{Star::kGray, Star::kYellow}));
  const std::vector<StarCandidate> lm = {{"FB1", 0.1163, 470}, {"MGU-SLIM3", 0.1166, 130}};
  EXPECT_EQ(select_stars(lm), (std::vector<Star>{Star::kYellow, Star::kNone}));
}

TEST(Stars, NonFiniteNeverStarred) {
  const std::vector<StarCandidate> row = {{"A", std::nan(""), 1}, {"B", 0.2, 5}};
  EXPECT_EQ(select_stars(row), (std::vector<Star>{Star::kNone, Star::kYellow}));
  const std::vector<StarCandidate> none = {{"A", std::nan(""), 1}};
  EXPECT_EQ(select_stars(none), (std::vector<Star>{Star::kNone}));
}

TEST(Stars, InvariantsOnRandomRows) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.02, 0.0215);
  std::uniform_int_distribution<int> c(10, 500);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<StarCandidate> row;
    for (int i = 0; i < 12; ++i) row.push_back({"C" + std::to_string(i), u(rng), static_cast<double>(c(rng))});
    const auto stars = select_stars(row);
    double best = INFINITY;
    for (const auto& r : row) best = std::min(best, r.rmse);
    ASSERT_EQ(std::count(stars.begin(), stars.end(), Star::kYellow), 1);
    const std::size_t y = std::find(stars.begin(), stars.end(), Star::kYellow) - stars.begin();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const bool tied = row[i].rmse <= best + kTieTolerance + 1e-12;
      EXPECT_EQ(stars[i] != Star::kNone, tied);
      if (stars[i] == Star::kGray) EXPECT_LE(row[y].complexity, row[i].complexity);
    }
  }
}

TEST(Guideline, DeterministicMeanRowStars) {
  const auto table = build_guideline(2, deterministic_fixture());
  EXPECT_EQ(table.cells, kFixtureCells);
  ASSERT_EQ(table.rows.size(), 6u);
  const GuidelineRow& mean = table.rows.back();
  EXPECT_TRUE(mean.is_mean);
  EXPECT_EQ(mean.label, "Mean");
  EXPECT_NEAR(mean.rmse[1], 0.0468 - 0.00002 / 5, 1e-12);
  EXPECT_EQ(mean.stars, (std::vector<Star>{Star::kNone, Star::kYellow, Star::kNone, Star::kGray, Star::kNone}));
  for (const GuidelineRow& row : table.rows) {
    EXPECT_EQ(std::count(row.stars.begin(), row.stars.end(), Star::kYellow), 1) << row.label;
  }
}

TEST(Guideline, MeanRowNeedsEveryDgp) {
  auto rs = deterministic_fixture();
  rs.erase(std::remove_if(rs.begin(), rs.end(), [](const BenchmarkResult& r) { return r.dgp == DgpKind::TCS; }),
           rs.end());
  const auto table = build_guideline(2, rs);
  EXPECT_EQ(table.rows.size(), 4u);
  EXPECT_TRUE(std::none_of(table.rows.begin(), table.rows.end(), [](const GuidelineRow& r) { return r.is_mean; }));
}

TEST(Summary, PublishedRows) {
  struct Row {
    Behavior behavior;
    const char* best1;
    double rmse1;
    const char* best2;
    double rmse2;
    const char* recommended;
  };
  const std::vector<Row> rows = {
      {Behavior::kDeterministic, "CIFG", 0.048, "MGU-SLIM3", 0.0468, "MGU-SLIM3"},
      {Behavior::kRandomWalk, "CIFG", 0.0286, "MGU-SLIM2", 0.0286, "MGU-SLIM2"},
      {Behavior::kNonlinear, "NOG", 0.1418, "MGU-SLIM3", 0.1333, "MGU-SLIM3"},
      {Behavior::kLongMemory, "FB1", 0.1163, "MGU-SLIM3", 0.1166, "FB1"},
      {Behavior::kChaotic, "NOAF", 0.0667, "LSTM-SLIM1", 0.0662, "LSTM-SLIM1"},
  };
  for (const Row& r : rows) {
    EXPECT_EQ(summary_row(r.behavior, r.best1, r.rmse1, r.best2, r.rmse2).recommended, r.recommended)
        << dgp::behavior_name(r.behavior);
  }
}

TEST(Summary, CsvRowLayout) {
  const std::vector<SummaryRow> rows = {
      summary_row(Behavior::kDeterministic, "CIFG", 0.048, "MGU-SLIM3", 0.0468)};
  const std::string csv = report::summary_csv(rows);
  EXPECT_NE(csv.find("Deterministic,CIFG,0.048,MGU-SLIM3,0.0468,MGU-SLIM3\n"), std::string::npos) << csv;
}

TEST(Summary, BuiltFromGuidelineTables) {
  const auto t2 = build_guideline(2, deterministic_fixture());
  const auto rows = build_summary(nullptr, &t2);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].best1.has_value());
  EXPECT_EQ(rows[0].best2, "MGU-SLIM3");
  EXPECT_EQ(rows[0].recommended, "MGU-SLIM3");
}

TEST(Report, FormatRmse) {
  EXPECT_EQ(report::format_rmse(0.048), "0.048");
  EXPECT_EQ(report::format_rmse(0.04804), "0.048");
  EXPECT_EQ(report::format_rmse(0.0286), "0.0286");
  EXPECT_EQ(report::format_rmse(std::nan("")), "-");
}

TEST(Report, FigureOrderFollowsTheoreticComplexity) {
  const auto order = report::figure_order(deterministic_fixture(), Behavior::kDeterministic);
  ASSERT_EQ(order.size(), kFixtureCells.size());
  for (std::size_t i = 1; i < order.size(); ++i) {
    EXPECT_LE(reference_complexity(order[i - 1]), reference_complexity(order[i]));
  }
}

TEST(Report, FigureCsvRowCount) {
  const auto csv = report::figure_csv(deterministic_fixture(), Behavior::kDeterministic);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5 * 5);
}

TEST(Report, EmptyResultsAreAnError) {
  EXPECT_THROW(report::emit_report(fresh_dir("rnnbench_empty"), std::vector<RunRecord>{}), ContractError);
}

TEST(Report, DeterministicFiles) {
  std::vector<RunRecord> records;
  for (CellKind c : {CellKind::LSTM_VANILLA, CellKind::CIFG}) {
    for (DgpKind d : dgp::dgps_of(Behavior::kRandomWalk)) {
      for (int rep = 0; rep < 2; ++rep) {
        records.push_back(retrain(1, c, d, rep, 0.03 + 0.001 * rep + (c == CellKind::CIFG ? 0.002 : 0.0)));
      }
    }
  }
  const auto a = fresh_dir("rnnbench_report_a"), b = fresh_dir("rnnbench_report_b");
  report::emit_report(a, records);
  report::emit_report(b, records);
  for (const char* f : {"guideline_exp1.csv", "guideline_exp1.md", "summary.csv", "summary.md",
                        "figures/random-walk.csv", "figures/random-walk.svg", "failures.json"}) {
    ASSERT_TRUE(std::filesystem::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_NE(slurp(a / "summary.csv").find("Random-walk,LSTM-VANILLA,0.0305,,,LSTM-VANILLA"),
            std::string::npos)
      << slurp(a / "summary.csv");
}

TEST(Records, JsonRoundTripDropsWallTime) {
  RunRecord r = retrain(1, CellKind::NOG, DgpKind::LORENZ, 4, 0.123456789);
  r.wall_time = 3.5;
  const auto j = to_json(r);
  EXPECT_FALSE(j.contains("wall_time"));
  EXPECT_TRUE(j.at("val_rmse").is_null());
  const RunRecord back = record_from_json(j);
  EXPECT_EQ(back.test_rmse, r.test_rmse);
  EXPECT_TRUE(std::isnan(back.val_rmse));
  EXPECT_EQ(back.cell, "NOG");
  EXPECT_EQ(back.wall_time, 0.0);
}

TEST(Config, PresetsAndStrictMerge) {
  const BenchConfig paper = scale_preset(Scale::kPaper);
  EXPECT_EQ(paper.length, 3000);
  EXPECT_EQ(paper.reps, 30);
  EXPECT_EQ(paper.train.max_epochs, 500);
  EXPECT_EQ(paper.runs_per_config, 10);
  EXPECT_EQ(window_grid(DgpKind::ARFIMA_d04, paper).size(), 40u);
  const BenchConfig desk = scale_preset(Scale::kDesk);
  EXPECT_EQ(desk.length, 600);
  EXPECT_EQ(window_grid(DgpKind::ARFIMA_d04, desk).size(), 5u);
  EXPECT_EQ(window_grid(DgpKind::HENON, desk).size(), 3u);
  const BenchConfig round = merge_json(scale_preset(Scale::kDesk), to_json(desk));
  EXPECT_EQ(to_json(round), to_json(desk));
  EXPECT_THROW(merge_json(desk, nlohmann::json{{"bogus", 1}}), ConfigError);
}

TEST(Config, RosterRestriction) {
  BenchConfig cfg = scale_preset(Scale::kDesk);
  cfg.cells = {"GRU", "ELMAN"};
  EXPECT_EQ(resolve_cells(2, cfg), (std::vector<CellKind>{CellKind::ELMAN, CellKind::GRU}));
  EXPECT_TRUE(resolve_cells(1, cfg).empty());
  cfg.cells = {"GRUU"};
  EXPECT_THROW(resolve_cells(2, cfg), ConfigError);
}

TEST(Experiment, TinyRunIsDeterministicAndAggregates) {
  BenchConfig cfg = scale_preset(Scale::kDesk);
  cfg.seed = 11;
  cfg.jobs = 2;
  cfg.cells = {"ELMAN"};
  cfg.dgps = {"SS"};
  cfg.hidden = {1, 2};
  cfg.window_cap = 2;
  cfg.runs_per_config = 2;
  cfg.train.max_epochs = 4;
  const ExperimentRun a = run_experiment(2, cfg);
  const ExperimentRun b = run_experiment(2, cfg);
  EXPECT_TRUE(a.failures.empty());
  ASSERT_EQ(a.records.size(), 3u * (2 * 2 * 2 + 1));
  EXPECT_EQ(report::results_jsonl(a.records), report::results_jsonl(b.records));
  const auto agg = aggregate(a.records);
  ASSERT_EQ(agg.size(), 1u);
  EXPECT_EQ(agg[0].replicates, 3);
  double sum = 0.0;
  for (const RunRecord& r : a.records) {
    if (r.phase == "retrain") sum += r.test_rmse;
  }
  EXPECT_NEAR(agg[0].mean_test_rmse, sum / 3, 1e-15);
}
