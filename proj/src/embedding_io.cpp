#include "segt/embedding_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "segt/error.hpp"
#include "byte_io.hpp"

namespace segt {

using detail::put_le;

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'E', 'G', 'T'};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

int amino_acid_index(char letter) noexcept {
    const auto pos = kAminoAcids.find(letter);
    return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

void validate_sequence(std::string_view sequence) {
    if (sequence.empty()) throw AlphabetError("empty sequence");
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        if (amino_acid_index(sequence[i]) < 0) {
            throw AlphabetError("non-canonical residue '" + std::string(1, sequence[i]) + "' at position " +
                                std::to_string(i + 1));
        }
    }
}

void ResidueEmbedding::validate() const {
    if (length == 0 || dim == 0) throw FormatError("embedding must have L >= 1 and D >= 1");
    if (values.size() != length * dim) throw FormatError("embedding value count does not equal L*D");
    for (float v : values) {
        if (!std::isfinite(v)) throw FormatError("embedding contains a non-finite value");
    }
}

template <typename T>
Tensor<T> ResidueEmbedding::as_batch() const {
    validate();
    std::vector<T> data(values.begin(), values.end());
    return Tensor<T>(Dims{1, length, dim}, std::move(data));
}

template Tensor<float> ResidueEmbedding::as_batch<float>() const;
template Tensor<double> ResidueEmbedding::as_batch<double>() const;

std::vector<std::uint8_t> encode_embedding(const ResidueEmbedding& e) {
    e.validate();
    if (e.accession.size() > 0xFFFF) throw FormatError("accession longer than 65535 bytes");
    std::vector<std::uint8_t> out;
    out.reserve(18 + e.accession.size() + 4 * e.values.size());
    for (std::uint8_t b : kMagic) out.push_back(b);
    put_le<std::uint32_t>(out, kEmbeddingFormatVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.length));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.dim));
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.accession.size()));
    for (char c : e.accession) out.push_back(static_cast<std::uint8_t>(c));
    for (float v : e.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

ResidueEmbedding decode_embedding(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader in(bytes, "embedding file");
    const std::uint8_t* magic = in.take(4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic: not a SEGT embedding file");
    const auto version = in.get_le<std::uint32_t>("version");
    if (version != kEmbeddingFormatVersion) {
        throw UnsupportedVersion("unsupported embedding format version " + std::to_string(version));
    }
    ResidueEmbedding e;
    e.length = in.get_le<std::uint32_t>("length");
    e.dim = in.get_le<std::uint32_t>("dim");
    const auto acc_len = in.get_le<std::uint16_t>("accession length");
    const std::uint8_t* acc = in.take(acc_len, "accession");
    e.accession.assign(reinterpret_cast<const char*>(acc), acc_len);
    if (e.length == 0 || e.dim == 0) throw FormatError("embedding header has zero L or D");
    const std::size_t count = e.length * e.dim;
    if (in.remaining() != count * 4) {
        throw FormatError("embedding payload holds " + std::to_string(in.remaining()) + " bytes, expected " +
                          std::to_string(count * 4));
    }
    e.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) e.values[i] = std::bit_cast<float>(in.get_le<std::uint32_t>("payload"));
    for (float v : e.values) {
        if (!std::isfinite(v)) throw FormatError("embedding contains a non-finite value");
    }
    return e;
}

void write_embedding(const ResidueEmbedding& embedding, const std::filesystem::path& path) {
    detail::write_file_bytes(encode_embedding(embedding), path);
}

ResidueEmbedding read_embedding(const std::filesystem::path& path) {
    return decode_embedding(detail::read_file_bytes(path, "embedding"));
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    const auto base = path.parent_path();
    std::vector<ManifestEntry> entries;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
            throw ParseError("manifest row must be accession<TAB>path", line_no);
        }
        ManifestEntry entry{line.substr(0, tab), line.substr(tab + 1)};
        if (line_no == 1 && entry.accession == "accession") continue;
        if (entry.path.is_relative()) entry.path = base / entry.path;
        if (!seen.insert(entry.accession).second) throw DuplicateError(entry.accession);
        entries.push_back(std::move(entry));
    }
    return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    const auto base = path.parent_path();
    for (const auto& e : entries) {
        auto rel = e.path.is_absolute() ? e.path.lexically_relative(base) : e.path;
        if (rel.empty()) rel = e.path;
        out << e.accession << '\t' << rel.generic_string() << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

ResidueEmbedding synth_embed(std::string_view sequence, std::size_t dim, std::uint64_t seed, std::string accession) {
    validate_sequence(sequence);
    if (dim == 0) throw FormatError("embedding dimension must be positive");
    ResidueEmbedding e;
    e.accession = std::move(accession);
    e.length = sequence.size();
    e.dim = dim;
    e.values.resize(e.length * dim);
    const std::uint64_t seeded = splitmix64(seed);
    for (std::size_t i = 0; i < e.length; ++i) {
        const std::uint64_t letter = splitmix64(seeded ^ static_cast<std::uint8_t>(sequence[i]));
        const std::uint64_t row = splitmix64(letter ^ (0xA24BAED4963EE407ULL * (i + 1)));
        for (std::size_t j = 0; j < dim; ++j) {
            const std::uint64_t h = splitmix64(row ^ (0x9FB21C651E98DF25ULL * (j + 1)));
            // Top 24 bits give a value exactly representable as float.
            const double unit = static_cast<double>(h >> 40) / static_cast<double>(1ULL << 24);
            e.values[i * dim + j] = static_cast<float>(2.0 * unit - 1.0);
        }
    }
    return e;
}

} // namespace segt
