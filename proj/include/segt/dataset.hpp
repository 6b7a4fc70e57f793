#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace segt {

struct DatasetRecord {
    std::string accession;
    std::string sequence;
    double temperature = 0.0;  // °C

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

/// Reads the `accession<TAB>sequence<TAB>temperature_c` TSV. Bad rows raise
/// ParseError with their 1-based line; repeated accessions raise DuplicateError.
std::vector<DatasetRecord> parse_dataset(std::istream& in);
std::vector<DatasetRecord> parse_dataset(const std::filesystem::path& path);
void write_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path);

/// Jaccard index of the k-mer sets of `a` and `b`. When either sequence is
/// shorter than `kmer`, k drops to the shorter length (at least 1).
double kmer_similarity(std::string_view a, std::string_view b, std::size_t kmer = 5);

struct Clustering {
    std::vector<std::size_t> cluster_of;        // per input record
    std::vector<std::size_t> representatives;   // record index founding each cluster

    std::size_t clusters() const noexcept { return representatives.size(); }
};

/// Records are visited by descending length (input order breaks ties). Each
/// joins the first cluster whose representative has similarity >= threshold,
/// otherwise it founds a new cluster.
Clustering greedy_cluster(const std::vector<DatasetRecord>& records, double threshold = 0.5,
                          std::size_t kmer = 5);

enum class Subset { train, validation, test };

const char* subset_name(Subset subset) noexcept;
Subset parse_subset(std::string_view name);

struct SplitOptions {
    double test_frac = 0.10;
    double val_cluster_frac = 0.10;
    std::vector<double> boundaries{45.0, 70.0, 100.0};
    double threshold = 0.5;
    std::size_t kmer = 5;
};

struct SplitEntry {
    std::string accession;
    Subset subset = Subset::train;
    std::optional<std::size_t> cluster_id;  // absent for test records

    friend bool operator==(const SplitEntry&, const SplitEntry&) = default;
};

/// One row of the per-interval summary. `sequences` and `clusters` count the
/// non-test records of the interval, which `train` and `validation` partition;
/// `test` counts the interval's test draws.
struct SplitSummaryRow {
    std::string range;
    std::size_t sequences = 0;
    std::size_t clusters = 0;
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;
};

struct SplitAssignment {
    std::vector<SplitEntry> entries;  // input record order
    std::vector<SplitSummaryRow> summary;

    std::size_t count(Subset subset) const;
    const SplitEntry* find(std::string_view accession) const;
};

/// Half-up rounding of `fraction * n`.
std::size_t round_half_up(double fraction, std::size_t n);

/// Seeded test draw over all records, then per temperature interval:
/// cluster, shuffle clusters, send round_half_up(val_cluster_frac) of them to
/// validation (at least one per side when the interval has two or more).
SplitAssignment make_split(const std::vector<DatasetRecord>& records, std::uint64_t seed,
                           const SplitOptions& options = {});

/// TSV `accession<TAB>split<TAB>cluster_id`; test rows carry "-".
void write_split(const SplitAssignment& split, std::ostream& out);
void write_split(const SplitAssignment& split, const std::filesystem::path& path);
std::vector<SplitEntry> read_split(const std::filesystem::path& path);

/// Columns range, sequences, clusters, train, validation, test plus a total row.
void write_split_summary(const SplitAssignment& split, std::ostream& out);

} // namespace segt
