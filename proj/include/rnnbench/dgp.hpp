#pragma once

// Synthetic series for the five behaviors: deterministic, random-walk,
// nonlinear, long-memory and chaotic.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rnnbench::dgp {

enum class DgpKind {
  T,
  SS,
  CS,
  TSS,
  TCS,
  TRW,
  SRW,
  TSRW,
  SAR2,
  NMA2,
  NAR2,
  BL2,
  STAR2,
  TAR2,
  ARFIMA_d0,
  ARFIMA_d02,
  ARFIMA_d04,
  MACKEY,
  HENON,
  ROSSLER,
  LORENZ,
};

inline constexpr std::size_t kDgpCount = 21;

enum class Behavior { kDeterministic, kRandomWalk, kNonlinear, kLongMemory, kChaotic };

inline constexpr std::array<Behavior, 5> kBehaviors = {
    Behavior::kDeterministic, Behavior::kRandomWalk, Behavior::kNonlinear,
    Behavior::kLongMemory, Behavior::kChaotic};

const std::array<DgpKind, kDgpCount>& all_dgp_kinds();
std::string_view dgp_name(DgpKind kind);
std::optional<DgpKind> parse_dgp(std::string_view name);
Behavior behavior_of(DgpKind kind);
std::string_view behavior_name(Behavior behavior);
/// Kinds of one behavior in table order.
std::vector<DgpKind> dgps_of(Behavior behavior);

bool is_closed_form(DgpKind kind);
bool is_recursive(DgpKind kind);
bool is_arfima(DgpKind kind);
bool is_chaotic(DgpKind kind);

/// Upper end of the estimation-window grid (1..N) for each process.
int default_window_max(DgpKind kind);

struct NoiseSpec {
  double mean = 0.0;
  double std = 0.2;
  std::uint64_t seed = 0;
};

struct IntegratorConfig {
  double dt = 0.01;
  int stride = 10;
  int burn_in = 1000;
  std::vector<double> initial_state;
};

struct FractionalConfig {
  double d = 0.0;
  int truncation = 1000;
  int burn_in = 200;
};

struct DgpSpec {
  DgpKind kind = DgpKind::T;
  int length = 3000;
  NoiseSpec noise;
  /// Discarded leading points for recursive kinds.
  int burn_in = 200;
  IntegratorConfig integrator;
  FractionalConfig fractional;
};

/// Spec with the default integrator / fractional settings for `kind`.
DgpSpec default_spec(DgpKind kind, int length = 3000, NoiseSpec noise = {});

/// Throws ConfigError when a structural invariant fails.
void validate(const DgpSpec& spec);

struct SeriesReplicate {
  DgpSpec dgp;
  int replicate_index = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;
};

/// i.i.d. Normal(mean, std^2) draws from a generator seeded with spec.seed.
std::vector<double> gaussian_noise(std::size_t n, const NoiseSpec& spec);

SeriesReplicate generate_closed_form(const DgpSpec& spec);
SeriesReplicate generate_recursive(const DgpSpec& spec);
SeriesReplicate generate_arfima(const DgpSpec& spec);
SeriesReplicate generate_chaotic(const DgpSpec& spec);
/// Dispatches on spec.kind.
SeriesReplicate generate(const DgpSpec& spec);

/// Replicate i draws its noise with seed base_seed + i.
std::vector<SeriesReplicate> replicate(const DgpSpec& spec, int reps, std::uint64_t base_seed);

/// Noise-free closed-form value at time t (t starts at 1).
double closed_form_value(DgpKind kind, double t);

/// Pre-sample state for the recursive processes: z[0] = z_0, z[1] = z_{-1}, ...
/// and eps[0] = eps_0, eps[1] = eps_{-1}, ...
struct RecursiveInit {
  std::array<double, 5> z{};
  std::array<double, 3> eps{};
};

/// Runs a recursive process over an explicit noise stream; output[i] is z_{i+1}
/// driven by eps[i] = eps_{i+1}. No burn-in is removed.
std::vector<double> simulate_recursive(DgpKind kind, std::span<const double> eps,
                                       const RecursiveInit& init = {});

/// psi_0..psi_K of (1 - B)^{-d}.
std::vector<double> fractional_weights(double d, int truncation);

/// ARFIMA(2,d,2) over an explicit stream. `eps` holds `truncation` pre-sample
/// draws followed by the draws for t = 1, 2, ...; output has eps.size() - truncation
/// points and no burn-in is removed.
std::vector<double> simulate_arfima(double d, int truncation, std::span<const double> eps);

/// Raw (noise-free, unstandardized) x-coordinate samples of a chaotic system.
std::vector<double> chaotic_signal(DgpKind kind, const IntegratorConfig& config, int samples);

using Vec3 = std::array<double, 3>;
Vec3 lorenz_field(const Vec3& s);
Vec3 rossler_field(const Vec3& s);

}  // namespace rnnbench::dgp
