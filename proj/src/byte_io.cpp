#include "byte_io.hpp"

#include <fstream>
#include <iterator>

namespace segt::detail {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path, const char* kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string("cannot open ") + kind + ": " + path.string());
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace segt::detail
