#pragma once

// Per-job seed derivation. Every random stream in a benchmark run is a pure
// function of the top-level seed and the job's identity, so results do not
// depend on scheduling order or worker count.

#include <cstdint>
#include <string_view>

namespace rnnbench {

std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

/// Order-sensitive mix of `value` into `seed`.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

/// Noise seed of replicate 0 for a DGP; replicate i uses this + i.
/// Independent of the experiment, so both experiments see the same series.
std::uint64_t series_base_seed(std::uint64_t top_seed, std::string_view dgp);

enum class Phase { kGrid, kRetrain };

struct JobKey {
  std::string_view cell;
  std::string_view dgp;
  int replicate = 0;
  int n_h = 0;
  int window = 0;
  int run = 0;
  Phase phase = Phase::kGrid;
};

/// hash(top seed, cell, dgp, replicate, n_H, w, run, phase).
std::uint64_t job_seed(std::uint64_t top_seed, const JobKey& key);

}  // namespace rnnbench
