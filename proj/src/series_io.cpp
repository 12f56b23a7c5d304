#include "rnnbench/series_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rnnbench/error.hpp"

namespace rnnbench {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nlohmann::json to_json(const dgp::DgpSpec& spec) {
  nlohmann::json j;
  j["kind"] = std::string(dgp::dgp_name(spec.kind));
  j["length"] = spec.length;
  j["noise"] = {{"mean", spec.noise.mean}, {"std", spec.noise.std}, {"seed", spec.noise.seed}};
  if (dgp::is_recursive(spec.kind)) j["burn_in"] = spec.burn_in;
  if (dgp::is_chaotic(spec.kind)) {
    j["integrator"] = {{"dt", spec.integrator.dt},
                       {"stride", spec.integrator.stride},
                       {"burn_in", spec.integrator.burn_in},
                       {"initial_state", spec.integrator.initial_state}};
  }
  if (dgp::is_arfima(spec.kind)) {
    j["fractional"] = {{"d", spec.fractional.d},
                       {"truncation", spec.fractional.truncation},
                       {"burn_in", spec.fractional.burn_in}};
  }
  return j;
}

std::string series_stem(const dgp::SeriesReplicate& series) {
  char idx[16];
  std::snprintf(idx, sizeof(idx), "%02d", series.replicate_index);
  return std::string(dgp::dgp_name(series.dgp.kind)) + "_rep" + idx;
}

std::filesystem::path write_series(const std::filesystem::path& dir,
                                   const dgp::SeriesReplicate& series) {
  std::filesystem::create_directories(dir);
  const std::string stem = series_stem(series);
  const auto csv_path = dir / (stem + ".csv");
  {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot open " + csv_path.string() + " for writing");
    csv << "t,value\n";
    for (std::size_t i = 0; i < series.values.size(); ++i) {
      csv << (i + 1) << ',' << format_double(series.values[i]) << '\n';
    }
    if (!csv) throw IoError("write failed: " + csv_path.string());
  }
  nlohmann::json sidecar;
  sidecar["dgp"] = to_json(series.dgp);
  sidecar["replicate_index"] = series.replicate_index;
  sidecar["seed"] = series.seed;
  sidecar["length"] = series.values.size();
  std::ofstream js(dir / (stem + ".json"), std::ios::binary);
  js << sidecar.dump(2) << '\n';
  if (!js) throw IoError("write failed: " + (dir / (stem + ".json")).string());
  return csv_path;
}

std::vector<double> read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "t,value") throw ConfigError(path.string() + ": expected header 't,value'");
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError(path.string() + ": malformed row '" + line + "'");
    double v = 0.0;
    const char* first = line.data() + comma + 1;
    const char* last = line.data() + line.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
      throw ConfigError(path.string() + ": bad value in row '" + line + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace rnnbench
