#include "rnnbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rnnbench/error.hpp"
#include "rnnbench/series_io.hpp"

namespace rnnbench::report {

namespace {

using bench::BenchmarkResult;
using bench::GuidelineTable;
using bench::Star;
using bench::SummaryRow;
using cells::CellKind;

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : ""; }

std::string star_word(Star s) {
  switch (s) {
    case Star::kYellow: return "yellow";
    case Star::kGray: return "gray";
    case Star::kNone: break;
  }
  return "";
}

std::string star_glyph(Star s) {
  switch (s) {
    case Star::kYellow: return "★";
    case Star::kGray: return "☆";
    case Star::kNone: break;
  }
  return "";
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Palette for the DGP series of one chart.
constexpr const char* kColors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                   "#59a14f", "#edc948", "#b07aa1"};

}  // namespace

std::string format_rmse(double v) {
  if (!std::isfinite(v)) return "-";
  std::string s = fixed(v, 4);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string behavior_title(dgp::Behavior behavior) {
  std::string s(dgp::behavior_name(behavior));
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string guideline_markdown(const GuidelineTable& table) {
  std::ostringstream out;
  out << "# Experiment " << table.experiment << " guidelines\n\n";
  out << "★ lowest RMSE and lowest empirical complexity among tied cells; ☆ tied RMSE, "
         "larger empirical complexity. Entries are mean test RMSE over replicates.\n\n";
  out << "| Behavior | DGP |";
  for (CellKind c : table.cells) out << ' ' << cells::cell_name(c) << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < table.cells.size(); ++i) out << "---|";
  out << '\n';
  for (const bench::GuidelineRow& row : table.rows) {
    out << "| " << behavior_title(row.behavior) << " | " << (row.is_mean ? "**Mean**" : row.label) << " |";
    for (std::size_t i = 0; i < table.cells.size(); ++i) {
      const std::string glyph = star_glyph(row.stars[i]);
      out << ' ' << (glyph.empty() ? "" : glyph + " ") << format_rmse(row.rmse[i]) << " |";
    }
    out << '\n';
  }
  return out.str();
}

std::string guideline_csv(const GuidelineTable& table) {
  std::ostringstream out;
  out << "behavior,dgp";
  for (CellKind c : table.cells) out << ',' << cells::cell_name(c) << "_star";
  for (CellKind c : table.cells) out << ',' << cells::cell_name(c) << "_rmse";
  for (CellKind c : table.cells) out << ',' << cells::cell_name(c) << "_complexity";
  out << '\n';
  for (const bench::GuidelineRow& row : table.rows) {
    out << dgp::behavior_name(row.behavior) << ',' << row.label;
    for (Star s : row.stars) out << ',' << star_word(s);
    for (double v : row.rmse) out << ',' << csv_number(v);
    for (double v : row.complexity) out << ',' << csv_number(v);
    out << '\n';
  }
  return out.str();
}

std::string summary_markdown(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "# Summary\n\n";
  out << "| Behavior | Experiment 1 best cell | RMSE | Experiment 2 best cell | RMSE | Recommended cell |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const SummaryRow& r : rows) {
    out << "| " << behavior_title(r.behavior) << " | " << r.best1.value_or("-") << " | "
        << format_rmse(r.rmse1) << " | " << r.best2.value_or("-") << " | " << format_rmse(r.rmse2)
        << " | " << r.recommended << " |\n";
  }
  return out.str();
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "behavior,exp1_best_cell,exp1_rmse,exp2_best_cell,exp2_rmse,recommended_cell\n";
  for (const SummaryRow& r : rows) {
    out << behavior_title(r.behavior) << ',' << r.best1.value_or("") << ','
        << (r.best1 ? format_rmse(r.rmse1) : "") << ',' << r.best2.value_or("") << ','
        << (r.best2 ? format_rmse(r.rmse2) : "") << ',' << r.recommended << '\n';
  }
  return out.str();
}

std::vector<CellKind> figure_order(std::span<const BenchmarkResult> results, dgp::Behavior behavior) {
  std::vector<CellKind> out;
  for (const BenchmarkResult& r : results) {
    if (dgp::behavior_of(r.dgp) != behavior) continue;
    if (std::find(out.begin(), out.end(), r.cell) == out.end()) out.push_back(r.cell);
  }
  std::stable_sort(out.begin(), out.end(), [](CellKind a, CellKind b) {
    const long ca = bench::reference_complexity(a), cb = bench::reference_complexity(b);
    return ca != cb ? ca < cb : cells::cell_name(a) < cells::cell_name(b);
  });
  return out;
}

std::string figure_csv(std::span<const BenchmarkResult> results, dgp::Behavior behavior) {
  std::ostringstream out;
  out << "experiment,cell,theoretic_complexity,dgp,mean_test_rmse,std_test_rmse,replicates,n_H,w,"
         "empirical_complexity\n";
  const auto order = figure_order(results, behavior);
  for (int experiment : {1, 2}) {
    for (CellKind c : order) {
      for (dgp::DgpKind k : dgp::dgps_of(behavior)) {
        for (const BenchmarkResult& r : results) {
          if (r.experiment != experiment || r.cell != c || r.dgp != k) continue;
          out << experiment << ',' << cells::cell_name(c) << ',' << bench::reference_complexity(c)
              << ',' << dgp::dgp_name(k) << ',' << csv_number(r.mean_test_rmse) << ','
              << csv_number(r.std_test_rmse) << ',' << r.replicates << ',' << r.n_h << ','
              << r.window << ',' << r.empirical_complexity << '\n';
        }
      }
    }
  }
  return out.str();
}

std::string figure_svg(std::span<const BenchmarkResult> results, dgp::Behavior behavior) {
  const auto order = figure_order(results, behavior);
  const auto kinds = dgp::dgps_of(behavior);

  // One group of bars per (experiment, cell) column.
  struct Column {
    int experiment;
    CellKind cell;
  };
  std::vector<Column> columns;
  double top = 0.0;
  for (int experiment : {1, 2}) {
    for (CellKind c : order) {
      bool any = false;
      for (const BenchmarkResult& r : results) {
        if (r.experiment == experiment && r.cell == c && dgp::behavior_of(r.dgp) == behavior) {
          any = true;
          if (std::isfinite(r.mean_test_rmse)) top = std::max(top, r.mean_test_rmse);
        }
      }
      if (any) columns.push_back({experiment, c});
    }
  }
  if (top <= 0.0) top = 1.0;

  const double left = 60, bottom = 120, plot_h = 260, group_w = 14.0 * static_cast<double>(kinds.size()) + 10;
  const double width = left + group_w * static_cast<double>(columns.size()) + 160;
  const double height = plot_h + bottom + 40;
  const double base = 30 + plot_h;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out << "<text x=\"" << fixed(left, 0) << "\" y=\"18\" font-size=\"13\">Test RMSE, "
      << behavior_title(behavior) << " behavior</text>\n";
  out << "<line x1=\"" << fixed(left, 1) << "\" y1=\"" << fixed(base, 1) << "\" x2=\""
      << fixed(width - 150, 1) << "\" y2=\"" << fixed(base, 1) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << fixed(left, 1) << "\" y1=\"30\" x2=\"" << fixed(left, 1) << "\" y2=\""
      << fixed(base, 1) << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = top * tick / 4.0;
    const double y = base - plot_h * tick / 4.0;
    out << "<text x=\"" << fixed(left - 4, 1) << "\" y=\"" << fixed(y + 3, 1)
        << "\" text-anchor=\"end\">" << fixed(v, 4) << "</text>\n";
  }
  for (std::size_t col = 0; col < columns.size(); ++col) {
    const double x0 = left + 5 + group_w * static_cast<double>(col);
    for (std::size_t d = 0; d < kinds.size(); ++d) {
      for (const BenchmarkResult& r : results) {
        if (r.experiment != columns[col].experiment || r.cell != columns[col].cell || r.dgp != kinds[d] ||
            !std::isfinite(r.mean_test_rmse)) {
          continue;
        }
        const double h = plot_h * r.mean_test_rmse / top;
        out << "<rect x=\"" << fixed(x0 + 14.0 * static_cast<double>(d), 1) << "\" y=\""
            << fixed(base - h, 1) << "\" width=\"12\" height=\"" << fixed(h, 1) << "\" fill=\""
            << kColors[d % std::size(kColors)] << "\"/>\n";
      }
    }
    const double label_x = x0 + group_w / 2 - 5;
    out << "<text transform=\"translate(" << fixed(label_x, 1) << ',' << fixed(base + 8, 1)
        << ") rotate(60)\">" << cells::cell_name(columns[col].cell) << " (E" << columns[col].experiment
        << ")</text>\n";
  }
  for (std::size_t d = 0; d < kinds.size(); ++d) {
    const double y = 40 + 16.0 * static_cast<double>(d);
    out << "<rect x=\"" << fixed(width - 140, 1) << "\" y=\"" << fixed(y - 9, 1)
        << "\" width=\"10\" height=\"10\" fill=\"" << kColors[d % std::size(kColors)] << "\"/>\n";
    out << "<text x=\"" << fixed(width - 125, 1) << "\" y=\"" << fixed(y, 1) << "\">"
        << dgp::dgp_name(kinds[d]) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

nlohmann::json failures_json(std::span<const bench::RunRecord> records) {
  nlohmann::json runs = nlohmann::json::array();
  std::map<std::tuple<int, std::string, std::string, int>, bool> retrained;
  for (const bench::RunRecord& r : records) {
    auto key = std::tuple{r.experiment, r.cell, r.dgp, r.replicate};
    bool& ok = retrained[key];
    if (r.phase == "retrain" && !r.failed) ok = true;
    if (r.failed) {
      nlohmann::json j = bench::to_json(r);
      runs.push_back(j);
    }
  }
  nlohmann::json jobs = nlohmann::json::array();
  for (const auto& [key, ok] : retrained) {
    if (ok) continue;
    jobs.push_back({{"experiment", std::get<0>(key)},
                    {"cell", std::get<1>(key)},
                    {"dgp", std::get<2>(key)},
                    {"replicate", std::get<3>(key)}});
  }
  return {{"failed_runs", runs}, {"failed_jobs", jobs}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void emit_summary(const std::filesystem::path& dir, std::span<const SummaryRow> rows) {
  std::filesystem::create_directories(dir);
  write_text(dir / "summary.md", summary_markdown(rows));
  write_text(dir / "summary.csv", summary_csv(rows));
}

void emit_report(const std::filesystem::path& dir, std::span<const bench::RunRecord> records, double tol) {
  const std::vector<BenchmarkResult> results = bench::aggregate(records);
  if (results.empty()) throw ContractError("no retrain results to report");
  std::filesystem::create_directories(dir / "figures");

  std::optional<GuidelineTable> tables[2];
  for (int e : {1, 2}) {
    const bool present = std::any_of(results.begin(), results.end(),
                                     [e](const BenchmarkResult& r) { return r.experiment == e; });
    if (!present) continue;
    tables[e - 1] = bench::build_guideline(e, results, tol);
    const std::string stem = "guideline_exp" + std::to_string(e);
    write_text(dir / (stem + ".md"), guideline_markdown(*tables[e - 1]));
    write_text(dir / (stem + ".csv"), guideline_csv(*tables[e - 1]));
  }
  const auto summary = bench::build_summary(tables[0] ? &*tables[0] : nullptr,
                                            tables[1] ? &*tables[1] : nullptr, tol);
  emit_summary(dir, summary);

  for (dgp::Behavior b : dgp::kBehaviors) {
    const bool present = std::any_of(results.begin(), results.end(), [b](const BenchmarkResult& r) {
      return dgp::behavior_of(r.dgp) == b;
    });
    if (!present) continue;
    const std::string stem(dgp::behavior_name(b));
    write_text(dir / "figures" / (stem + ".csv"), figure_csv(results, b));
    write_text(dir / "figures" / (stem + ".svg"), figure_svg(results, b));
  }
  write_text(dir / "failures.json", failures_json(records).dump(2) + "\n");
}

std::string results_jsonl(std::span<const bench::RunRecord> records) {
  std::string out;
  for (const bench::RunRecord& r : records) out += bench::to_json(r).dump() + "\n";
  return out;
}

std::vector<bench::RunRecord> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<bench::RunRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(bench::record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace rnnbench::report
