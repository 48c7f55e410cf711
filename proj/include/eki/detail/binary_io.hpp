#pragma once

#include "eki/common.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <filesystem>
#include <string_view>

namespace eki::detail {

static_assert(std::endian::native == std::endian::little,
              "binary snapshot formats assume a little-endian host");

inline void write_magic(std::ostream& os, std::string_view magic) {
    os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void check_magic(std::istream& is, std::string_view magic) {
    char buf[8] = {};
    is.read(buf, static_cast<std::streamsize>(magic.size()));
    if (!is || std::string_view(buf, magic.size()) != magic)
        throw ConfigError("bad magic, expected " + std::string(magic));
}

template <class T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ConfigError("truncated binary file");
    return v;
}

inline void write_doubles(std::ostream& os, const double* p, std::size_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_doubles(std::istream& is, double* p, std::size_t n) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw ConfigError("truncated binary file");
}

inline std::ofstream open_out(const std::filesystem::path& p, bool binary = false) {
    std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
    if (!os) throw ConfigError("cannot open for writing: " + p.string());
    return os;
}

inline std::ifstream open_in(const std::filesystem::path& p, bool binary = false) {
    std::ifstream is(p, binary ? std::ios::binary : std::ios::in);
    if (!is) throw ConfigError("cannot open for reading: " + p.string());
    return is;
}

} // namespace eki::detail
