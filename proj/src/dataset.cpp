#include "segt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "segt/embedding_io.hpp"
#include "segt/error.hpp"
#include "segt/metrics.hpp"
#include "segt/rng.hpp"

namespace segt {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return fields;
}

void chomp(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

// k-mers of up to 8 bytes pack into one integer; longer ones compare as strings.
struct KmerSet {
    std::size_t k = 0;
    std::vector<std::uint64_t> packed;
    std::vector<std::string_view> wide;
};

KmerSet kmer_set(std::string_view s, std::size_t k) {
    KmerSet set;
    set.k = k;
    if (s.size() < k) return set;
    const std::size_t n = s.size() - k + 1;
    if (k <= 8) {
        set.packed.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t code = 0;
            for (std::size_t j = 0; j < k; ++j) code = (code << 8) | static_cast<unsigned char>(s[i + j]);
            set.packed.push_back(code);
        }
        std::sort(set.packed.begin(), set.packed.end());
        set.packed.erase(std::unique(set.packed.begin(), set.packed.end()), set.packed.end());
    } else {
        set.wide.reserve(n);
        for (std::size_t i = 0; i < n; ++i) set.wide.push_back(s.substr(i, k));
        std::sort(set.wide.begin(), set.wide.end());
        set.wide.erase(std::unique(set.wide.begin(), set.wide.end()), set.wide.end());
    }
    return set;
}

template <typename U>
double jaccard(const std::vector<U>& a, const std::vector<U>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t common = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++common;
            ++ia;
            ++ib;
        }
    }
    return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

double jaccard(const KmerSet& a, const KmerSet& b) {
    return a.k <= 8 ? jaccard(a.packed, b.packed) : jaccard(a.wide, b.wide);
}

std::size_t effective_k(std::size_t kmer, std::size_t la, std::size_t lb) {
    return std::max<std::size_t>(1, std::min({kmer, la, lb}));
}

} // namespace

std::vector<DatasetRecord> parse_dataset(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty dataset, expected header", 1);
    ++line_no;
    chomp(line);
    if (line != "accession\tsequence\ttemperature_c") {
        throw ParseError("expected header 'accession<TAB>sequence<TAB>temperature_c'", line_no);
    }

    std::vector<DatasetRecord> records;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        chomp(line);
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw ParseError("expected 3 tab-separated fields, got " + std::to_string(fields.size()), line_no);
        }
        DatasetRecord record;
        record.accession = std::string(fields[0]);
        record.sequence = std::string(fields[1]);
        if (record.accession.empty()) throw ParseError("empty accession", line_no);
        if (record.sequence.empty()) throw ParseError("empty sequence", line_no);
        try {
            validate_sequence(record.sequence);
        } catch (const AlphabetError& e) {
            throw ParseError(e.what(), line_no);
        }
        const std::string_view t = fields[2];
        const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), record.temperature);
        if (ec != std::errc{} || end != t.data() + t.size() || !std::isfinite(record.temperature)) {
            throw ParseError("temperature_c is not a finite number: '" + std::string(t) + "'", line_no);
        }
        if (!seen.insert(record.accession).second) throw DuplicateError(record.accession);
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<DatasetRecord> parse_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path.string());
    return parse_dataset(in);
}

void write_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset " + path.string());
    out << "accession\tsequence\ttemperature_c\n";
    out << std::setprecision(17);
    for (const auto& r : records) out << r.accession << '\t' << r.sequence << '\t' << r.temperature << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

double kmer_similarity(std::string_view a, std::string_view b, std::size_t kmer) {
    const std::size_t k = effective_k(kmer, a.size(), b.size());
    return jaccard(kmer_set(a, k), kmer_set(b, k));
}

Clustering greedy_cluster(const std::vector<DatasetRecord>& records, double threshold, std::size_t kmer) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].sequence.size() > records[b].sequence.size();
    });

    const std::size_t k_full = std::max<std::size_t>(1, kmer);
    std::vector<KmerSet> sets(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) sets[i] = kmer_set(records[i].sequence, k_full);

    Clustering out;
    out.cluster_of.assign(records.size(), 0);
    for (const std::size_t i : order) {
        bool placed = false;
        for (std::size_t c = 0; c < out.representatives.size() && !placed; ++c) {
            const std::size_t rep = out.representatives[c];
            const std::size_t la = records[i].sequence.size();
            const std::size_t lb = records[rep].sequence.size();
            const double sim = (la >= k_full && lb >= k_full)
                                   ? jaccard(sets[i], sets[rep])
                                   : kmer_similarity(records[i].sequence, records[rep].sequence, kmer);
            if (sim >= threshold) {
                out.cluster_of[i] = c;
                placed = true;
            }
        }
        if (!placed) {
            out.cluster_of[i] = out.representatives.size();
            out.representatives.push_back(i);
        }
    }
    return out;
}

const char* subset_name(Subset subset) noexcept {
    switch (subset) {
    case Subset::train: return "train";
    case Subset::validation: return "validation";
    case Subset::test: return "test";
    }
    return "?";
}

Subset parse_subset(std::string_view name) {
    if (name == "train") return Subset::train;
    if (name == "validation") return Subset::validation;
    if (name == "test") return Subset::test;
    throw Error("unknown split name '" + std::string(name) + "'");
}

std::size_t SplitAssignment::count(Subset subset) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [&](const SplitEntry& e) { return e.subset == subset; }));
}

const SplitEntry* SplitAssignment::find(std::string_view accession) const {
    for (const auto& e : entries) {
        if (e.accession == accession) return &e;
    }
    return nullptr;
}

std::size_t round_half_up(double fraction, std::size_t n) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

SplitAssignment make_split(const std::vector<DatasetRecord>& records, std::uint64_t seed,
                           const SplitOptions& options) {
    if (records.size() < 10) throw Error("make_split needs at least 10 records");
    if (!(options.test_frac >= 0.0 && options.test_frac < 1.0) ||
        !(options.val_cluster_frac >= 0.0 && options.val_cluster_frac < 1.0)) {
        throw Error("split fractions must lie in [0, 1)");
    }
    if (!std::is_sorted(options.boundaries.begin(), options.boundaries.end())) {
        throw Error("temperature boundaries must be ascending");
    }

    Rng rng(seed);
    const std::size_t n = records.size();
    SplitAssignment split;
    split.entries.resize(n);
    for (std::size_t i = 0; i < n; ++i) split.entries[i].accession = records[i].accession;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    const std::size_t n_test = std::min(n, round_half_up(options.test_frac, n));
    std::vector<bool> is_test(n, false);
    for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

    const std::size_t groups = options.boundaries.size() + 1;
    split.summary.resize(groups);
    std::vector<std::vector<std::size_t>> members(groups);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t g = interval_index(options.boundaries, records[i].temperature);
        if (is_test[i]) {
            split.entries[i].subset = Subset::test;
            ++split.summary[g].test;
        } else {
            members[g].push_back(i);
        }
    }

    std::size_t next_cluster = 0;
    for (std::size_t g = 0; g < groups; ++g) {
        auto& row = split.summary[g];
        row.range = interval_label(options.boundaries, g);
        row.sequences = members[g].size();
        if (members[g].empty()) continue;

        std::vector<DatasetRecord> group;
        group.reserve(members[g].size());
        for (const std::size_t i : members[g]) group.push_back(records[i]);
        const Clustering clustering = greedy_cluster(group, options.threshold, options.kmer);
        const std::size_t c = clustering.clusters();
        row.clusters = c;

        std::vector<std::size_t> cluster_order(c);
        std::iota(cluster_order.begin(), cluster_order.end(), std::size_t{0});
        rng.shuffle(cluster_order);
        std::size_t n_val = 0;
        if (c >= 2) n_val = std::clamp<std::size_t>(round_half_up(options.val_cluster_frac, c), 1, c - 1);
        std::vector<bool> to_val(c, false);
        for (std::size_t j = 0; j < n_val; ++j) to_val[cluster_order[j]] = true;

        for (std::size_t m = 0; m < group.size(); ++m) {
            auto& entry = split.entries[members[g][m]];
            const std::size_t local = clustering.cluster_of[m];
            entry.cluster_id = next_cluster + local;
            entry.subset = to_val[local] ? Subset::validation : Subset::train;
            ++(to_val[local] ? row.validation : row.train);
        }
        next_cluster += c;
    }
    return split;
}

void write_split(const SplitAssignment& split, std::ostream& out) {
    out << "accession\tsplit\tcluster_id\n";
    for (const auto& e : split.entries) {
        out << e.accession << '\t' << subset_name(e.subset) << '\t';
        if (e.cluster_id) {
            out << *e.cluster_id;
        } else {
            out << '-';
        }
        out << '\n';
    }
}

void write_split(const SplitAssignment& split, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write split " + path.string());
    write_split(split, out);
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<SplitEntry> read_split(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open split " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::vector<SplitEntry> entries;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        chomp(line);
        if (line_no == 1) {
            if (line != "accession\tsplit\tcluster_id") throw ParseError("expected split header", 1);
            continue;
        }
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 3) throw ParseError("expected 3 tab-separated fields", line_no);
        SplitEntry e;
        e.accession = std::string(fields[0]);
        try {
            e.subset = parse_subset(fields[1]);
        } catch (const Error& err) {
            throw ParseError(err.what(), line_no);
        }
        if (fields[2] != "-") {
            std::size_t id = 0;
            const auto [end, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), id);
            if (ec != std::errc{} || end != fields[2].data() + fields[2].size()) {
                throw ParseError("bad cluster_id '" + std::string(fields[2]) + "'", line_no);
            }
            e.cluster_id = id;
        }
        if (!seen.insert(e.accession).second) throw DuplicateError(e.accession);
        entries.push_back(std::move(e));
    }
    if (line_no == 0) throw ParseError("empty split file", 1);
    return entries;
}

void write_split_summary(const SplitAssignment& split, std::ostream& out) {
    out << "range\tsequences\tclusters\ttrain\tvalidation\ttest\n";
    SplitSummaryRow total{"total"};
    for (const auto& row : split.summary) {
        out << row.range << '\t' << row.sequences << '\t' << row.clusters << '\t' << row.train << '\t'
            << row.validation << '\t' << row.test << '\n';
        total.sequences += row.sequences;
        total.clusters += row.clusters;
        total.train += row.train;
        total.validation += row.validation;
        total.test += row.test;
    }
    out << total.range << '\t' << total.sequences << '\t' << total.clusters << '\t' << total.train << '\t'
        << total.validation << '\t' << total.test << '\n';
}

} // namespace segt
