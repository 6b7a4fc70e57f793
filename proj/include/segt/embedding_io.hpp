#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "segt/tensor.hpp"

namespace segt {

/// The 20 canonical amino acids in alphabetical one-letter order.
inline constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";

/// Index of `letter` in kAminoAcids, or -1.
int amino_acid_index(char letter) noexcept;

/// Per-residue features of one sequence: `length` rows of `dim` values.
struct ResidueEmbedding {
    std::string accession;
    std::size_t length = 0;
    std::size_t dim = 0;
    std::vector<float> values;

    /// Validates L>=1, D>=1, the value count and finiteness.
    void validate() const;
    /// View as a [1, L, D] tensor.
    template <typename T>
    Tensor<T> as_batch() const;

    friend bool operator==(const ResidueEmbedding&, const ResidueEmbedding&) = default;
};

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

/// Layout: "SEGT", u32 version, u32 L, u32 D, u16 accession length,
/// accession bytes, then L*D float32; all little-endian.
void write_embedding(const ResidueEmbedding& embedding, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_embedding(const ResidueEmbedding& embedding);

ResidueEmbedding read_embedding(const std::filesystem::path& path);
ResidueEmbedding decode_embedding(const std::vector<std::uint8_t>& bytes);

struct ManifestEntry {
    std::string accession;
    std::filesystem::path path;
};

/// UTF-8 TSV of `accession<TAB>path`; relative paths resolve against the
/// manifest's directory. Duplicate accessions raise DuplicateError.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

/// Deterministic stand-in for a protein language model: each value is a
/// fixed 64-bit hash of (seed, residue letter, position, feature) mapped to [-1, 1].
ResidueEmbedding synth_embed(std::string_view sequence, std::size_t dim, std::uint64_t seed,
                             std::string accession = {});

/// Throws AlphabetError naming the first non-canonical letter.
void validate_sequence(std::string_view sequence);

} // namespace segt
