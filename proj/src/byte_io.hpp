#pragma once

// Little-endian byte packing shared by the binary file formats.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "segt/error.hpp"

namespace segt::detail {

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

/// Bounds-checked cursor; running past the end raises FormatError("<kind> truncated in <field>").
class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, std::string kind) : bytes_(bytes), kind_(std::move(kind)) {}

    template <typename U>
    U get_le(const char* what) {
        need(sizeof(U), what);
        U value = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(U{bytes_[pos_ + i]} << (8 * i));
        pos_ += sizeof(U);
        return value;
    }

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) throw FormatError(kind_ + " truncated in " + what);
    }

    const std::uint8_t* take(std::size_t n, const char* what) {
        need(n, what);
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::string kind_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path, const char* kind);
void write_file_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path);

} // namespace segt::detail
