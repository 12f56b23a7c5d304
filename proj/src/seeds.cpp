#include "rnnbench/seeds.hpp"

namespace rnnbench {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ splitmix64(value + 0x632be59bd9b4e019ULL));
}

std::uint64_t series_base_seed(std::uint64_t top_seed, std::string_view dgp) {
  std::uint64_t h = hash_combine(splitmix64(top_seed), fnv1a("series"));
  return hash_combine(h, fnv1a(dgp));
}

std::uint64_t job_seed(std::uint64_t top_seed, const JobKey& key) {
  std::uint64_t h = splitmix64(top_seed);
  h = hash_combine(h, fnv1a(key.cell));
  h = hash_combine(h, fnv1a(key.dgp));
  h = hash_combine(h, static_cast<std::uint64_t>(key.replicate));
  h = hash_combine(h, static_cast<std::uint64_t>(key.n_h));
  h = hash_combine(h, static_cast<std::uint64_t>(key.window));
  h = hash_combine(h, static_cast<std::uint64_t>(key.run));
  return hash_combine(h, key.phase == Phase::kGrid ? 1 : 2);
}

}  // namespace rnnbench
