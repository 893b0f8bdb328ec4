#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace emx {

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(std::string_view text);

/// First 8 bytes (little-endian) of SHA-256("emx:" + label + ":" + decimal master).
/// Labels in use: "doping", "perturbation", "algebra".
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

}  // namespace emx
