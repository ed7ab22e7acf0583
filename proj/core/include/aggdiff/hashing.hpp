#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace aggdiff {

/// 64-bit FNV-1a; stable across platforms.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Hex digest of the canonical (sorted-key, compact) dump of a JSON value.
std::string json_hash(const nlohmann::json& j);

}  // namespace aggdiff
