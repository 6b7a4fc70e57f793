#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "segt/embedding_io.hpp"
#include "segt/error.hpp"
#include "test_support.hpp"

namespace segt {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("segt_embedding_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ResidueEmbedding small_embedding() {
    return ResidueEmbedding{"Q9XYZ1", 2, 3, {1.0f, -2.5f, 0.0f, 3.25f, -0.125f, 1e-20f}};
}

TEST(EmbeddingFile, SizeFollowsLayout) {
    const auto e = small_embedding();
    EXPECT_EQ(encode_embedding(e).size(), 4u + 4 + 4 + 4 + 2 + e.accession.size() + 24);
}

TEST(EmbeddingFile, LittleEndianGoldenBytes) {
    const ResidueEmbedding e{"AB", 1, 2, {1.0f, -2.0f}};
    const std::vector<std::uint8_t> want{'S', 'E', 'G', 'T', 1, 0, 0, 0,  1,    0,    0,    0,   2,   0,
                                         0,   0,   2,   0,   'A', 'B', 0, 0, 0x80, 0x3F, 0, 0, 0, 0xC0};
    EXPECT_EQ(encode_embedding(e), want);
    EXPECT_EQ(decode_embedding(want), e);
}

TEST(EmbeddingFile, VersionFieldIsOne) {
    const auto bytes = encode_embedding(small_embedding());
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
}

TEST(EmbeddingFile, RoundTripIsBitExact) {
    const auto dir = scratch_dir("roundtrip");
    Rng rng(3);
    auto e = synth_embed(testing::random_sequence(57, rng), 16, 9, "P12345");
    e.values[5] = -0.0f;
    e.values[6] = 1.17549435e-38f;
    write_embedding(e, dir / "e.segt");
    const auto back = read_embedding(dir / "e.segt");
    EXPECT_EQ(back.accession, e.accession);
    EXPECT_TRUE(bitwise_equal<float>(back.values, e.values));
    EXPECT_EQ(back, e);
}

TEST(EmbeddingFile, BadMagicIsFormatError) {
    auto bytes = encode_embedding(small_embedding());
    bytes[0] = bytes[1] = bytes[2] = bytes[3] = 'X';
    EXPECT_THROW(decode_embedding(bytes), FormatError);
}

TEST(EmbeddingFile, TruncationIsFormatError) {
    const auto bytes = encode_embedding(small_embedding());
    for (std::size_t keep : {0u, 3u, 10u, 17u, 20u}) {
        EXPECT_THROW(decode_embedding({bytes.begin(), bytes.begin() + keep}), FormatError) << keep;
    }
    EXPECT_THROW(decode_embedding({bytes.begin(), bytes.end() - 1}), FormatError);
    auto longer = bytes;
    longer.push_back(0);
    EXPECT_THROW(decode_embedding(longer), FormatError);
}

TEST(EmbeddingFile, OtherVersionIsUnsupported) {
    auto bytes = encode_embedding(small_embedding());
    bytes[4] = 2;
    EXPECT_THROW(decode_embedding(bytes), UnsupportedVersion);
}

TEST(EmbeddingFile, NonFiniteValuesAreRejected) {
    auto e = small_embedding();
    e.values[2] = std::numeric_limits<float>::infinity();
    EXPECT_THROW(encode_embedding(e), FormatError);
}

TEST(EmbeddingFile, MissingFileIsIoError) {
    EXPECT_THROW(read_embedding("/nonexistent/segt/none.segt"), IoError);
}

TEST(SynthEmbed, Deterministic) {
    const auto a = synth_embed("MKTAYIAKQR", 16, 42);
    const auto b = synth_embed("MKTAYIAKQR", 16, 42);
    EXPECT_TRUE(bitwise_equal<float>(a.values, b.values));
    EXPECT_NE(synth_embed("MKTAYIAKQR", 16, 43).values, a.values);
}

TEST(SynthEmbed, SingleSubstitutionChangesOnlyItsRow) {
    const std::string wt = "MKTAYIAKQRQISFVKSHFSRQ";
    std::string mut = wt;
    mut[7] = 'W';
    const auto a = synth_embed(wt, 8, 5);
    const auto b = synth_embed(mut, 8, 5);
    for (std::size_t i = 0; i < wt.size(); ++i) {
        const bool same = std::equal(a.values.begin() + i * 8, a.values.begin() + (i + 1) * 8, b.values.begin() + i * 8);
        EXPECT_EQ(same, i != 7) << "row " << i;
    }
}

TEST(SynthEmbed, ValuesInUnitRange) {
    const auto e = synth_embed("ACDEFGHIKLMNPQRSTVWY", 32, 1);
    for (float v : e.values) {
        EXPECT_GE(v, -1.0f);
        EXPECT_LE(v, 1.0f);
    }
}

TEST(SynthEmbed, NonCanonicalLetterIsAlphabetError) {
    EXPECT_THROW(synth_embed("MKB", 4, 1), AlphabetError);
    EXPECT_THROW(synth_embed("", 4, 1), AlphabetError);
}

TEST(Manifest, RoundTripWithRelativePaths) {
    const auto dir = scratch_dir("manifest");
    fs::create_directories(dir / "emb");
    const std::vector<ManifestEntry> entries{{"P1", dir / "emb" / "p1.segt"}, {"P2", dir / "emb" / "p2.segt"}};
    write_manifest(entries, dir / "m.tsv");
    std::ifstream in(dir / "m.tsv");
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first, "P1\temb/p1.segt");
    const auto back = read_manifest(dir / "m.tsv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].accession, "P2");
    EXPECT_EQ(fs::weakly_canonical(back[1].path), fs::weakly_canonical(entries[1].path));
}

TEST(Manifest, HeaderSkippedAndDuplicatesRejected) {
    const auto dir = scratch_dir("manifest_dup");
    {
        std::ofstream out(dir / "m.tsv");
        out << "accession\tpath\nP1\ta.segt\n";
    }
    EXPECT_EQ(read_manifest(dir / "m.tsv").size(), 1u);
    {
        std::ofstream out(dir / "d.tsv");
        out << "P1\ta.segt\nP1\tb.segt\n";
    }
    EXPECT_THROW(read_manifest(dir / "d.tsv"), DuplicateError);
}

} // namespace
} // namespace segt
