#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace rnnbench {

/// Levenshtein distance.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Candidate nearest to `name`, compared case-insensitively; first one wins ties.
std::string closest_name(std::string_view name, std::span<const std::string_view> candidates);

}  // namespace rnnbench
