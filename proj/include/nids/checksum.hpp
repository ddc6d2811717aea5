#pragma once

#include <cstdint>
#include <string>

namespace nids {

// FNV-1a, 64-bit. Stable across platforms; used for artifact staleness
// checks, not security.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);
std::string file_checksum(const std::string& path);

} // namespace nids
