#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "longcast/errors.hpp"

namespace longcast {

// 64-bit FNV-1a content digest. Used for frozen-weight integrity checks and
// run-manifest input fingerprints; not a cryptographic hash.

inline std::uint64_t fnv1a_init() { return 0xCBF29CE484222325ull; }

inline void fnv1a_update(std::uint64_t& h, const void* bytes, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
}

inline void fnv1a_update(std::uint64_t& h, const std::string& s) { fnv1a_update(h, s.data(), s.size()); }

template <class T>
void fnv1a_update(std::uint64_t& h, const std::vector<T>& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    fnv1a_update(h, v.data(), v.size() * sizeof(T));
}

inline std::string digest_hex(std::uint64_t h) {
    static const char* x = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = x[h & 0xF];
        h >>= 4;
    }
    return out;
}

inline std::uint64_t digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for digest: " + path);
    std::uint64_t h = fnv1a_init();
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        fnv1a_update(h, buf, static_cast<std::size_t>(in.gcount()));
    }
    return h;
}

}  // namespace longcast
