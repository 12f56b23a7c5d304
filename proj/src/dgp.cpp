#include "rnnbench/dgp.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "rnnbench/error.hpp"

namespace rnnbench::dgp {

namespace {

constexpr std::array<DgpKind, kDgpCount> kAllKinds = {
    DgpKind::T,          DgpKind::SS,         DgpKind::CS,         DgpKind::TSS,
    DgpKind::TCS,        DgpKind::TRW,        DgpKind::SRW,        DgpKind::TSRW,
    DgpKind::SAR2,       DgpKind::NMA2,       DgpKind::NAR2,       DgpKind::BL2,
    DgpKind::STAR2,      DgpKind::TAR2,       DgpKind::ARFIMA_d0,  DgpKind::ARFIMA_d02,
    DgpKind::ARFIMA_d04, DgpKind::MACKEY,     DgpKind::HENON,      DgpKind::ROSSLER,
    DgpKind::LORENZ};

constexpr std::array<std::string_view, kDgpCount> kNames = {
    "T",    "SS",    "CS",   "TSS",       "TCS",        "TRW",        "SRW",
    "TSRW", "SAR2",  "NMA2", "NAR2",      "BL2",        "STAR2",      "TAR2",
    "ARFIMA_d0", "ARFIMA_d02", "ARFIMA_d04", "MACKEY", "HENON", "ROSSLER", "LORENZ"};

// Mackey-Glass
constexpr double kMgTau = 17.0, kMgA = 0.2, kMgB = 0.1, kMgC = 10.0, kMgHistory = 1.2;
// Henon
constexpr double kHenonA = 1.4, kHenonB = 0.3;
// Rossler
constexpr double kRosA = 0.15, kRosB = 0.2, kRosC = 10.0;
// Lorenz
constexpr double kLorSigma = 16.0, kLorR = 45.92, kLorB = 4.0;

std::size_t index_of(DgpKind kind) { return static_cast<std::size_t>(kind); }

void require_kind(bool ok, DgpKind kind, std::string_view generator) {
  if (!ok) {
    throw InvalidKindError(std::string(generator) + " cannot produce kind " +
                           std::string(dgp_name(kind)));
  }
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double arfima_order(DgpKind kind) {
  switch (kind) {
    case DgpKind::ARFIMA_d0: return 0.0;
    case DgpKind::ARFIMA_d02: return 0.2;
    case DgpKind::ARFIMA_d04: return 0.4;
    default: return 0.0;
  }
}

SeriesReplicate make_replicate(const DgpSpec& spec, std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw GenerationDivergedError(std::string(dgp_name(spec.kind)) +
                                    " produced a non-finite value at output " + std::to_string(i));
    }
  }
  SeriesReplicate out;
  out.dgp = spec;
  out.seed = spec.noise.seed;
  out.values = std::move(values);
  return out;
}

template <typename Field>
Vec3 rk4_step(const Vec3& s, double dt, Field field) {
  auto axpy = [](const Vec3& a, const Vec3& k, double h) {
    return Vec3{a[0] + h * k[0], a[1] + h * k[1], a[2] + h * k[2]};
  };
  const Vec3 k1 = field(s);
  const Vec3 k2 = field(axpy(s, k1, dt / 2));
  const Vec3 k3 = field(axpy(s, k2, dt / 2));
  const Vec3 k4 = field(axpy(s, k3, dt));
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = s[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

void check_state(DgpKind kind, double x, long step) {
  if (!std::isfinite(x)) {
    throw GenerationDivergedError(std::string(dgp_name(kind)) + " trajectory diverged at step " +
                                  std::to_string(step));
  }
}

std::vector<double> flow_signal(DgpKind kind, const IntegratorConfig& config, int samples) {
  Vec3 s{};
  if (kind == DgpKind::ROSSLER) s = {10.0, 0.0, 0.0};
  if (kind == DgpKind::LORENZ) s = {1.0, 1.0, 1.0};
  for (std::size_t i = 0; i < config.initial_state.size() && i < 3; ++i) s[i] = config.initial_state[i];

  const long total = static_cast<long>(config.burn_in) + samples;
  std::vector<double> out;
  out.reserve(samples);
  long step = 0;
  for (long j = 0; j < total; ++j) {
    for (int k = 0; k < config.stride; ++k, ++step) {
      s = kind == DgpKind::LORENZ ? rk4_step(s, config.dt, lorenz_field)
                                  : rk4_step(s, config.dt, rossler_field);
      check_state(kind, s[0] + s[1] + s[2], step);
    }
    if (j >= config.burn_in) out.push_back(s[0]);
  }
  return out;
}

std::vector<double> mackey_glass_signal(const IntegratorConfig& config, int samples) {
  const double ratio = kMgTau / config.dt;
  const long delay = std::lround(ratio);
  if (delay < 1 || std::abs(ratio - static_cast<double>(delay)) > 1e-9) {
    throw ConfigError("Mackey-Glass delay tau/dt = " + std::to_string(ratio) +
                      " is not a positive integer");
  }
  const double history = config.initial_state.empty() ? kMgHistory : config.initial_state[0];
  double x = history;

  // ring[n mod (delay+1)] holds x at step n; steps before 0 read the constant history.
  std::vector<double> ring(static_cast<std::size_t>(delay + 1), history);
  const auto slot = [&](long n) { return static_cast<std::size_t>(n % (delay + 1)); };
  auto delayed = [&](long n) { return n < 0 ? history : ring[slot(n)]; };
  auto rhs = [](double now, double lagged) {
    return kMgA * lagged / (1.0 + std::pow(lagged, kMgC)) - kMgB * now;
  };

  const long total = static_cast<long>(config.burn_in) + samples;
  std::vector<double> out;
  out.reserve(samples);
  const double dt = config.dt;
  long n = 0;
  ring[slot(0)] = x;
  for (long j = 0; j < total; ++j) {
    for (int k = 0; k < config.stride; ++k, ++n) {
      const double lag0 = delayed(n - delay);
      const double lag1 = delayed(n - delay + 1);
      const double lag_half = 0.5 * (lag0 + lag1);
      const double k1 = rhs(x, lag0);
      const double k2 = rhs(x + dt / 2 * k1, lag_half);
      const double k3 = rhs(x + dt / 2 * k2, lag_half);
      const double k4 = rhs(x + dt * k3, lag1);
      x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      check_state(DgpKind::MACKEY, x, n);
      // slot of n+1 held step n - delay, which is no longer needed.
      ring[slot(n + 1)] = x;
    }
    if (j >= config.burn_in) out.push_back(x);
  }
  return out;
}

std::vector<double> henon_signal(const IntegratorConfig& config, int samples) {
  double x = 0.0, y = 0.0;
  if (config.initial_state.size() >= 1) x = config.initial_state[0];
  if (config.initial_state.size() >= 2) y = config.initial_state[1];
  const long total = static_cast<long>(config.burn_in) + samples;
  std::vector<double> out;
  out.reserve(samples);
  long step = 0;
  for (long j = 0; j < total; ++j) {
    for (int k = 0; k < config.stride; ++k, ++step) {
      const double nx = 1.0 + y - kHenonA * x * x;
      y = kHenonB * x;
      x = nx;
      check_state(DgpKind::HENON, x, step);
    }
    if (j >= config.burn_in) out.push_back(x);
  }
  return out;
}

}  // namespace

const std::array<DgpKind, kDgpCount>& all_dgp_kinds() { return kAllKinds; }

std::string_view dgp_name(DgpKind kind) { return kNames[index_of(kind)]; }

std::optional<DgpKind> parse_dgp(std::string_view name) {
  for (std::size_t i = 0; i < kDgpCount; ++i) {
    if (kNames[i] == name) return kAllKinds[i];
  }
  return std::nullopt;
}

Behavior behavior_of(DgpKind kind) {
  if (is_closed_form(kind)) return Behavior::kDeterministic;
  switch (kind) {
    case DgpKind::TRW:
    case DgpKind::SRW:
    case DgpKind::TSRW: return Behavior::kRandomWalk;
    default: break;
  }
  if (is_recursive(kind)) return Behavior::kNonlinear;
  if (is_arfima(kind)) return Behavior::kLongMemory;
  return Behavior::kChaotic;
}

std::string_view behavior_name(Behavior behavior) {
  switch (behavior) {
    case Behavior::kDeterministic: return "deterministic";
    case Behavior::kRandomWalk: return "random-walk";
    case Behavior::kNonlinear: return "nonlinear";
    case Behavior::kLongMemory: return "long-memory";
    case Behavior::kChaotic: return "chaotic";
  }
  return "?";
}

std::vector<DgpKind> dgps_of(Behavior behavior) {
  std::vector<DgpKind> out;
  for (DgpKind k : kAllKinds) {
    if (behavior_of(k) == behavior) out.push_back(k);
  }
  return out;
}

bool is_closed_form(DgpKind kind) { return index_of(kind) <= index_of(DgpKind::TCS); }

bool is_recursive(DgpKind kind) {
  return index_of(kind) >= index_of(DgpKind::TRW) && index_of(kind) <= index_of(DgpKind::TAR2);
}

bool is_arfima(DgpKind kind) {
  return kind == DgpKind::ARFIMA_d0 || kind == DgpKind::ARFIMA_d02 || kind == DgpKind::ARFIMA_d04;
}

bool is_chaotic(DgpKind kind) { return index_of(kind) >= index_of(DgpKind::MACKEY); }

int default_window_max(DgpKind kind) {
  switch (kind) {
    case DgpKind::T: return 10;
    case DgpKind::TRW: return 10;
    case DgpKind::SRW: return 4;
    case DgpKind::ARFIMA_d02: return 20;
    case DgpKind::ARFIMA_d04: return 40;
    case DgpKind::MACKEY: return 7;
    case DgpKind::HENON: return 3;
    case DgpKind::ROSSLER: return 14;
    case DgpKind::LORENZ: return 25;
    default: return 5;
  }
}

DgpSpec default_spec(DgpKind kind, int length, NoiseSpec noise) {
  DgpSpec spec;
  spec.kind = kind;
  spec.length = length;
  spec.noise = noise;
  spec.burn_in = 200;
  spec.fractional = FractionalConfig{arfima_order(kind), 1000, 200};
  switch (kind) {
    case DgpKind::MACKEY: spec.integrator = IntegratorConfig{0.1, 10, 1000, {kMgHistory}}; break;
    case DgpKind::HENON: spec.integrator = IntegratorConfig{1.0, 1, 1000, {0.0, 0.0}}; break;
    case DgpKind::ROSSLER: spec.integrator = IntegratorConfig{0.01, 25, 1000, {10.0, 0.0, 0.0}}; break;
    case DgpKind::LORENZ: spec.integrator = IntegratorConfig{0.01, 10, 1000, {1.0, 1.0, 1.0}}; break;
    default: spec.integrator = IntegratorConfig{0.01, 1, 0, {}}; break;
  }
  return spec;
}

void validate(const DgpSpec& spec) {
  if (spec.length < 10) throw ConfigError("series length must be >= 10");
  if (!(spec.noise.std >= 0.0)) throw ConfigError("noise std must be >= 0");
  if (spec.burn_in < 0) throw ConfigError("burn_in must be >= 0");
  if (is_chaotic(spec.kind)) {
    if (!(spec.integrator.dt > 0.0)) throw ConfigError("integrator dt must be > 0");
    if (spec.integrator.stride < 1) throw ConfigError("integrator stride must be >= 1");
    if (spec.integrator.burn_in < 0) throw ConfigError("integrator burn_in must be >= 0");
  }
  if (is_arfima(spec.kind)) {
    if (spec.fractional.d < 0.0 || spec.fractional.d >= 0.5) {
      throw NonstationaryOrderError("ARFIMA fractional order d = " +
                                    std::to_string(spec.fractional.d) + " is outside [0, 0.5)");
    }
    if (spec.fractional.truncation < 100) throw ConfigError("ARFIMA truncation must be >= 100");
    if (spec.fractional.burn_in < 0) throw ConfigError("ARFIMA burn_in must be >= 0");
  }
}

std::vector<double> gaussian_noise(std::size_t n, const NoiseSpec& spec) {
  if (!(spec.std >= 0.0)) throw ConfigError("noise std must be >= 0");
  std::vector<double> out(n, spec.mean);
  if (spec.std == 0.0) return out;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(spec.mean, spec.std);
  for (double& v : out) v = normal(rng);
  return out;
}

double closed_form_value(DgpKind kind, double t) {
  const double two_pi = 2.0 * std::numbers::pi;
  switch (kind) {
    case DgpKind::T: return 10.0 + 0.02 * t;
    case DgpKind::SS: return 2.0 * std::sin(two_pi * t / 5.0);
    case DgpKind::CS: return std::sin(two_pi * t / 100.0) + 0.5 * std::sin(two_pi * t / 5.0);
    case DgpKind::TSS: return 10.0 + 0.02 * t + 5.0 * std::sin(two_pi * t / 5.0);
    case DgpKind::TCS:
      return 10.0 + 0.02 * t + std::sin(two_pi * t / 100.0) + 0.5 * std::sin(two_pi * t / 5.0);
    default: break;
  }
  throw InvalidKindError("closed_form_value: " + std::string(dgp_name(kind)) +
                         " has no closed form");
}

SeriesReplicate generate_closed_form(const DgpSpec& spec) {
  require_kind(is_closed_form(spec.kind), spec.kind, "generate_closed_form");
  validate(spec);
  const auto eps = gaussian_noise(static_cast<std::size_t>(spec.length), spec.noise);
  std::vector<double> values(eps.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = closed_form_value(spec.kind, static_cast<double>(i + 1)) + eps[i];
  }
  return make_replicate(spec, std::move(values));
}

std::vector<double> simulate_recursive(DgpKind kind, std::span<const double> eps,
                                       const RecursiveInit& init) {
  require_kind(is_recursive(kind), kind, "simulate_recursive");
  const std::size_t n = eps.size();
  // z[k + 5] = z_{k+1}; z[4] = z_0 ... z[0] = z_{-4}. Same layout for e with 3 lags.
  std::vector<double> z(n + 5, 0.0), e(n + 3, 0.0);
  for (int k = 0; k < 5; ++k) z[4 - k] = init.z[k];
  for (int k = 0; k < 3; ++k) e[2 - k] = init.eps[k];
  for (std::size_t i = 0; i < n; ++i) e[i + 3] = eps[i];

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t zi = i + 5, ei = i + 3;
    const double z1 = z[zi - 1], z2 = z[zi - 2], z4 = z[zi - 4], z5 = z[zi - 5];
    const double e0 = e[ei], e1 = e[ei - 1], e2 = e[ei - 2];
    double v = 0.0;
    switch (kind) {
      case DgpKind::TRW: v = z1 + e0; break;
      case DgpKind::SRW: v = z4 + e0; break;
      case DgpKind::TSRW: v = z1 + z4 - z5 + e0; break;
      case DgpKind::SAR2: v = sign_of(z1 + z2) + e0; break;
      case DgpKind::NMA2: v = e0 - 0.3 * e1 + 0.2 * e2 + 0.4 * e1 * e2 - 0.25 * e2 * e2; break;
      case DgpKind::NAR2:
        v = 0.7 * std::abs(z1) / (std::abs(z1) + 2.0) + 0.35 * std::abs(z2) / (std::abs(z2) + 2.0) +
            e0;
        break;
      case DgpKind::BL2: v = 0.4 * z1 - 0.3 * z2 + 0.5 * z1 * e1 + e0; break;
      case DgpKind::STAR2:
        v = 0.3 * z1 + 0.6 * z2 + (0.1 - 0.9 * z1 + 0.8 * z2) / (1.0 + std::exp(-10.0 * z1)) + e0;
        break;
      case DgpKind::TAR2:
        v = std::abs(z1) <= 1.0 ? 0.9 * z1 + 0.05 * z2 + e0 : -0.3 * z1 + 0.65 * z2 - e0;
        break;
      default: break;
    }
    if (!std::isfinite(v)) {
      throw GenerationDivergedError(std::string(dgp_name(kind)) + " diverged at step " +
                                    std::to_string(i + 1));
    }
    z[zi] = v;
  }
  return {z.begin() + 5, z.end()};
}

SeriesReplicate generate_recursive(const DgpSpec& spec) {
  require_kind(is_recursive(spec.kind), spec.kind, "generate_recursive");
  validate(spec);
  const auto burn = static_cast<std::size_t>(spec.burn_in);
  const auto eps = gaussian_noise(burn + static_cast<std::size_t>(spec.length), spec.noise);
  auto z = simulate_recursive(spec.kind, eps);
  return make_replicate(spec, {z.begin() + static_cast<long>(burn), z.end()});
}

std::vector<double> fractional_weights(double d, int truncation) {
  std::vector<double> psi(static_cast<std::size_t>(truncation) + 1);
  psi[0] = 1.0;
  for (int k = 1; k <= truncation; ++k) {
    psi[k] = psi[k - 1] * (static_cast<double>(k - 1) + d) / static_cast<double>(k);
  }
  return psi;
}

std::vector<double> simulate_arfima(double d, int truncation, std::span<const double> eps) {
  if (d < 0.0 || d >= 0.5) {
    throw NonstationaryOrderError("ARFIMA fractional order d = " + std::to_string(d) +
                                  " is outside [0, 0.5)");
  }
  const auto k_max = static_cast<std::size_t>(truncation);
  if (eps.size() <= k_max) throw ConfigError("ARFIMA stream shorter than its truncation");
  const auto psi = fractional_weights(d, truncation);
  const std::size_t n = eps.size() - k_max;

  // u_t = sum_k psi_k eps_{t-k}; pre-sample z and u lags are zero.
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + k_max;
    double s = 0.0;
    for (std::size_t k = 0; k <= k_max; ++k) s += psi[k] * eps[j - k];
    u[i] = s;
  }
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = i >= 1 ? z[i - 1] : 0.0;
    const double z2 = i >= 2 ? z[i - 2] : 0.0;
    const double u1 = i >= 1 ? u[i - 1] : 0.0;
    const double u2 = i >= 2 ? u[i - 2] : 0.0;
    z[i] = 0.7 * z1 - 0.1 * z2 - 0.5 * u1 + 0.4 * u2 + u[i];
  }
  return z;
}

SeriesReplicate generate_arfima(const DgpSpec& spec) {
  require_kind(is_arfima(spec.kind), spec.kind, "generate_arfima");
  validate(spec);
  const auto& fc = spec.fractional;
  const auto burn = static_cast<std::size_t>(fc.burn_in);
  const auto eps = gaussian_noise(
      static_cast<std::size_t>(fc.truncation) + burn + static_cast<std::size_t>(spec.length),
      spec.noise);
  auto z = simulate_arfima(fc.d, fc.truncation, eps);
  return make_replicate(spec, {z.begin() + static_cast<long>(burn), z.end()});
}

Vec3 lorenz_field(const Vec3& s) {
  const double x = s[0], y = s[1], z = s[2];
  return {kLorSigma * (y - x), -x * z + kLorR * x - y, x * y - kLorB * z};
}

Vec3 rossler_field(const Vec3& s) {
  const double x = s[0], y = s[1], z = s[2];
  return {-y - z, x + kRosA * y, kRosB + z * (x - kRosC)};
}

std::vector<double> chaotic_signal(DgpKind kind, const IntegratorConfig& config, int samples) {
  require_kind(is_chaotic(kind), kind, "chaotic_signal");
  if (!(config.dt > 0.0) || config.stride < 1 || config.burn_in < 0 || samples < 0) {
    throw ConfigError("invalid integrator configuration");
  }
  switch (kind) {
    case DgpKind::MACKEY: return mackey_glass_signal(config, samples);
    case DgpKind::HENON: return henon_signal(config, samples);
    default: return flow_signal(kind, config, samples);
  }
}

SeriesReplicate generate_chaotic(const DgpSpec& spec) {
  require_kind(is_chaotic(spec.kind), spec.kind, "generate_chaotic");
  validate(spec);
  auto signal = chaotic_signal(spec.kind, spec.integrator, spec.length);
  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= static_cast<double>(signal.size());
  double var = 0.0;
  for (double v : signal) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(signal.size()));
  if (!(sd > 0.0)) {
    throw GenerationDivergedError(std::string(dgp_name(spec.kind)) + " signal collapsed to a constant");
  }
  const auto eps = gaussian_noise(signal.size(), spec.noise);
  for (std::size_t i = 0; i < signal.size(); ++i) signal[i] = (signal[i] - mean) / sd + eps[i];
  return make_replicate(spec, std::move(signal));
}

SeriesReplicate generate(const DgpSpec& spec) {
  if (is_closed_form(spec.kind)) return generate_closed_form(spec);
  if (is_recursive(spec.kind)) return generate_recursive(spec);
  if (is_arfima(spec.kind)) return generate_arfima(spec);
  return generate_chaotic(spec);
}

std::vector<SeriesReplicate> replicate(const DgpSpec& spec, int reps, std::uint64_t base_seed) {
  if (reps < 1) throw ConfigError("reps must be >= 1");
  std::vector<SeriesReplicate> out;
  out.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    DgpSpec s = spec;
    s.noise.seed = base_seed + static_cast<std::uint64_t>(i);
    SeriesReplicate r = generate(s);
    r.replicate_index = i;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace rnnbench::dgp
