#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "segt/dataset.hpp"
#include "segt/error.hpp"
#include "segt/metrics.hpp"
#include "test_support.hpp"

namespace segt {
namespace {

std::vector<DatasetRecord> parse(const std::string& text) {
    std::istringstream in(text);
    return parse_dataset(in);
}

std::size_t parse_error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

const std::string kHeader = "accession\tsequence\ttemperature_c\n";

TEST(ParseDataset, ReadsRows) {
    const auto r = parse(kHeader + "P1\tMKT\t37.5\r\n\nP2\tACDE\t-2\n");
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0], (DatasetRecord{"P1", "MKT", 37.5}));
    EXPECT_EQ(r[1].temperature, -2.0);
}

TEST(ParseDataset, ErrorsCarryLineNumbers) {
    EXPECT_EQ(parse_error_line(""), 1u);
    EXPECT_EQ(parse_error_line("id\tseq\ttemp\nP1\tMKT\t3\n"), 1u);
    EXPECT_EQ(parse_error_line(kHeader + "P1\tMKT\t3\nP2\tMKT\n"), 3u);
    EXPECT_EQ(parse_error_line(kHeader + "P1\tMKT\tabc\n"), 2u);
    EXPECT_EQ(parse_error_line(kHeader + "P1\tMKT\t3x\n"), 2u);
    EXPECT_EQ(parse_error_line(kHeader + "P1\tMKT\tnan\n"), 2u);
    EXPECT_EQ(parse_error_line(kHeader + "P1\tMKZ\t3\n"), 2u);
    EXPECT_EQ(parse_error_line(kHeader + "\tMKT\t3\n"), 2u);
    EXPECT_EQ(parse_error_line(kHeader + "P1\t\t3\n"), 2u);
}

TEST(ParseDataset, DuplicateAccession) {
    EXPECT_THROW(parse(kHeader + "P1\tMKT\t3\nP1\tMKA\t4\n"), DuplicateError);
}

TEST(ParseDataset, WriteReadRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "segt_dataset_rt";
    std::filesystem::create_directories(dir);
    const auto records = testing::synthetic_dataset(40, 1);
    write_dataset(records, dir / "d.tsv");
    EXPECT_EQ(parse_dataset(dir / "d.tsv"), records);
    EXPECT_THROW(parse_dataset(dir / "missing.tsv"), IoError);
}

TEST(KmerSimilarity, Examples) {
    EXPECT_DOUBLE_EQ(kmer_similarity("AAAAAA", "AAAAAC"), 0.5);
    EXPECT_DOUBLE_EQ(kmer_similarity("MKTAYIAK", "MKTAYIAK"), 1.0);
    EXPECT_DOUBLE_EQ(kmer_similarity("AAAAAAA", "CCCCCCC"), 0.0);
    // k falls back to the shorter length.
    EXPECT_DOUBLE_EQ(kmer_similarity("MK", "MKT", 5), 0.5);
    EXPECT_DOUBLE_EQ(kmer_similarity("ACDEFGHIKL", "ACDEFGHIKW", 12), 0.0);
}

TEST(KmerSimilarity, MatchesBruteForce) {
    Rng rng(2);
    for (int t = 0; t < 200; ++t) {
        const auto a = testing::random_sequence(1 + rng.below(30), rng);
        std::string b = rng.below(2) ? a : testing::random_sequence(1 + rng.below(30), rng);
        if (!b.empty() && rng.below(2)) b[rng.below(b.size())] = 'W';
        for (std::size_t k : {1u, 3u, 5u, 9u, 11u}) {
            const std::size_t kk = std::max<std::size_t>(1, std::min({k, a.size(), b.size()}));
            std::set<std::string> sa, sb, un;
            for (std::size_t i = 0; i + kk <= a.size(); ++i) sa.insert(a.substr(i, kk));
            for (std::size_t i = 0; i + kk <= b.size(); ++i) sb.insert(b.substr(i, kk));
            un = sa;
            un.insert(sb.begin(), sb.end());
            std::size_t inter = 0;
            for (const auto& s : sa) inter += sb.count(s);
            EXPECT_DOUBLE_EQ(kmer_similarity(a, b, k), static_cast<double>(inter) / static_cast<double>(un.size()));
            EXPECT_DOUBLE_EQ(kmer_similarity(a, b, k), kmer_similarity(b, a, k));
        }
    }
}

TEST(GreedyCluster, GroupsFamilies) {
    const auto records = testing::synthetic_dataset(60, 3);
    const auto c = greedy_cluster(records, 0.5, 5);
    std::map<std::string, std::set<std::size_t>> by_family;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& acc = records[i].accession;
        by_family[acc.substr(0, acc.find('M'))].insert(c.cluster_of[i]);
    }
    for (const auto& [family, ids] : by_family) EXPECT_EQ(ids.size(), 1u) << family;
    EXPECT_EQ(c.clusters(), by_family.size());
    // Representatives are the longest member, first in input order.
    for (std::size_t k = 0; k < c.clusters(); ++k) {
        const std::size_t rep = c.representatives[k];
        EXPECT_EQ(c.cluster_of[rep], k);
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (c.cluster_of[i] == k) EXPECT_LE(records[i].sequence.size(), records[rep].sequence.size());
        }
    }
}

TEST(GreedyCluster, ThresholdExtremes) {
    const auto records = testing::synthetic_dataset(30, 4);
    EXPECT_EQ(greedy_cluster(records, 0.0).clusters(), 1u);
    EXPECT_EQ(greedy_cluster(records, 1.01).clusters(), records.size());
}

TEST(RoundHalfUp, Examples) {
    EXPECT_EQ(round_half_up(0.1, 500), 50u);
    EXPECT_EQ(round_half_up(0.1, 25), 3u);
    EXPECT_EQ(round_half_up(0.1, 24), 2u);
    EXPECT_EQ(round_half_up(0.1, 15), 2u);
    EXPECT_EQ(round_half_up(0.0, 15), 0u);
}

TEST(Subset, Names) {
    for (auto s : {Subset::train, Subset::validation, Subset::test}) EXPECT_EQ(parse_subset(subset_name(s)), s);
    EXPECT_THROW(parse_subset("dev"), Error);
}

class SplitTest : public ::testing::Test {
protected:
    std::vector<DatasetRecord> records = testing::synthetic_dataset(300, 5);
    SplitAssignment split = make_split(records, 11);
};

TEST_F(SplitTest, TestFractionAndPartition) {
    EXPECT_EQ(split.count(Subset::test), 30u);
    EXPECT_EQ(split.count(Subset::train) + split.count(Subset::validation) + split.count(Subset::test), 300u);
    ASSERT_EQ(split.entries.size(), records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        EXPECT_EQ(split.entries[i].accession, records[i].accession);
        EXPECT_EQ(split.entries[i].cluster_id.has_value(), split.entries[i].subset != Subset::test);
    }
}

TEST_F(SplitTest, ClustersNeverStraddleTrainAndValidation) {
    std::map<std::size_t, Subset> side;
    for (const auto& e : split.entries) {
        if (!e.cluster_id) continue;
        const auto [it, inserted] = side.emplace(*e.cluster_id, e.subset);
        EXPECT_EQ(it->second, e.subset) << "cluster " << *e.cluster_id;
    }
}

TEST_F(SplitTest, ClustersStayInsideOneInterval) {
    std::map<std::size_t, std::size_t> interval_of;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& e = split.entries[i];
        if (!e.cluster_id) continue;
        const std::size_t g = interval_index(SplitOptions{}.boundaries, records[i].temperature);
        const auto [it, inserted] = interval_of.emplace(*e.cluster_id, g);
        EXPECT_EQ(it->second, g);
    }
}

TEST_F(SplitTest, ValidationClusterCountPerInterval) {
    ASSERT_EQ(split.summary.size(), 4u);
    std::map<std::size_t, std::set<std::size_t>> val_clusters;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& e = split.entries[i];
        if (e.subset == Subset::validation) {
            val_clusters[interval_index(SplitOptions{}.boundaries, records[i].temperature)].insert(*e.cluster_id);
        }
    }
    std::size_t seqs = 0, test = 0;
    for (std::size_t g = 0; g < 4; ++g) {
        const auto& row = split.summary[g];
        EXPECT_EQ(row.train + row.validation, row.sequences);
        const std::size_t want = row.clusters >= 2 ? std::clamp<std::size_t>(round_half_up(0.1, row.clusters), 1, row.clusters - 1) : 0;
        EXPECT_EQ(val_clusters[g].size(), want) << row.range;
        seqs += row.sequences;
        test += row.test;
    }
    EXPECT_EQ(seqs, 270u);
    EXPECT_EQ(test, 30u);
    EXPECT_EQ(split.summary[0].range, "<45");
    EXPECT_EQ(split.summary[3].range, ">=100");
}

TEST_F(SplitTest, DeterministicPerSeed) {
    EXPECT_EQ(make_split(records, 11).entries, split.entries);
    EXPECT_NE(make_split(records, 12).entries, split.entries);
}

TEST_F(SplitTest, TsvRoundTripAndSummary) {
    const auto dir = std::filesystem::temp_directory_path() / "segt_split_rt";
    std::filesystem::create_directories(dir);
    write_split(split, dir / "split.tsv");
    EXPECT_EQ(read_split(dir / "split.tsv"), split.entries);
    std::ostringstream os;
    write_split_summary(split, os);
    const std::string text = os.str();
    EXPECT_EQ(text.rfind("range\tsequences\tclusters\ttrain\tvalidation\ttest\n", 0), 0u);
    EXPECT_NE(text.find("\ntotal\t270\t"), std::string::npos);
    EXPECT_NE(split.find(records[7].accession), nullptr);
    EXPECT_EQ(split.find("nope"), nullptr);
}

TEST(Split, RejectsBadInput) {
    const auto records = testing::synthetic_dataset(20, 6);
    EXPECT_THROW(make_split({records.begin(), records.begin() + 5}, 1), Error);
    SplitOptions o;
    o.test_frac = 1.0;
    EXPECT_THROW(make_split(records, 1, o), Error);
    o = {};
    o.boundaries = {70, 45};
    EXPECT_THROW(make_split(records, 1, o), Error);
}

} // namespace
} // namespace segt
