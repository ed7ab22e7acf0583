#include "aggdiff/hashing.hpp"

#include <cstdio>

namespace aggdiff {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string json_hash(const nlohmann::json& j) {
  // nlohmann::json keeps object keys sorted, so dump() is canonical.
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace aggdiff
