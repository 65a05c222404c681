#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace perfedit {

/// SHA-256 hex digest. Used wherever a hash must be stable across runs,
/// platforms, and library versions (cache keys, code identity, signature
/// digests); std::hash gives no such guarantee.
std::string sha256_hex(std::string_view data);

/// FNV-1a 64-bit, for cheap non-cryptographic fingerprints.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace perfedit
