#include "emx/io/seeds.hpp"

#include <openssl/sha.h>

#include <array>

namespace emx {

namespace {

std::array<unsigned char, SHA256_DIGEST_LENGTH> digest(std::span<const unsigned char> bytes) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> out{};
    SHA256(bytes.data(), bytes.size(), out.data());
    return out;
}

}  // namespace

std::string sha256_hex(std::span<const unsigned char> bytes) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    for (unsigned char c : digest(bytes)) {
        s += hex[c >> 4];
        s += hex[c & 15];
    }
    return s;
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    const std::string msg = "emx:" + std::string(label) + ":" + std::to_string(master);
    const auto d = digest(std::span(reinterpret_cast<const unsigned char*>(msg.data()), msg.size()));
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | d[static_cast<std::size_t>(k)];
    return v;
}

}  // namespace emx
