#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "segt/embedding_io.hpp"
#include "segt/model.hpp"

namespace segt {

/// A residue position to scan with its wild-type letter. Positions are 0-based.
struct ScanSite {
    std::size_t position = 0;
    char wild_type = 'A';
};

/// Embedding of the wild type with `letter` substituted at `position`, if available.
using VariantProvider = std::function<std::optional<ResidueEmbedding>(std::size_t position, char letter)>;

struct ScanResult {
    std::string accession;
    std::size_t length = 0;
    Prediction wild_type;
    std::vector<ScanSite> sites;
    /// [length x 20] row-major in kAminoAcids order: y_hat(variant) - y_hat(wild type), °C.
    /// Rows of positions that were not scanned hold NaN.
    std::vector<double> delta;

    double at(std::size_t position, std::size_t letter_index) const { return delta[position * 20 + letter_index]; }
    /// Importance (ᾱ x 100) of the scale-0 segment holding `position`; 0 for uncovered tail residues.
    double segment_importance(std::size_t position) const;
};

/// Forward pass per substitution; substituting a residue with itself gives 0
/// without consulting the provider. A provider miss raises MissingVariant.
ScanResult scan(const ResidueEmbedding& wild_type, const std::vector<ScanSite>& sites,
                const VariantProvider& variants, const Model& model);
/// Scans every position of `sequence`.
ScanResult scan(const ResidueEmbedding& wild_type, std::string_view sequence, const VariantProvider& variants,
                const Model& model);

/// Provider embedding each variant sequence with synth_embed.
VariantProvider synth_variant_provider(std::string sequence, std::size_t dim, std::uint64_t seed);

/// Conventional variant name, e.g. A78E for position index 77.
std::string variant_name(char wild_type, std::size_t position, char letter);

struct ParsedVariant {
    char wild_type;
    std::size_t position;  // 0-based
    char letter;
};

/// Parses names like "A78E"; nullopt if malformed.
std::optional<ParsedVariant> parse_variant_name(std::string_view name);

/// Provider over manifest entries named by `variant_name`. Also reports the
/// scan sites implied by the names; conflicting wild-type letters raise Error.
struct ManifestVariants {
    VariantProvider provider;
    std::vector<ScanSite> sites;
};
ManifestVariants manifest_variants(const std::vector<ManifestEntry>& manifest);

struct SelectionCriteria {
    double importance_threshold = 20.0;
    double temperature_score_threshold = 50.0;

    void validate() const;
};

nlohmann::json to_json(const SelectionCriteria& c);
SelectionCriteria selection_criteria_from_json(const nlohmann::json& j);

struct Candidate {
    std::size_t position = 0;  // 0-based
    char wild_type = 'A';
    char letter = 'A';
    double delta = 0.0;
    double score = 0.0;  // delta / max|delta| * 100
    double segment_importance = 0.0;
};

/// Substitutions in segments with importance above the threshold whose score
/// exceeds the score threshold, by descending score (then position, letter).
std::vector<Candidate> select_candidates(const ScanResult& result, const SelectionCriteria& criteria);

nlohmann::json to_json(const ScanResult& result);
nlohmann::json to_json(const std::vector<Candidate>& candidates);
/// Header `position,wild_type,A,...,Y`; one row per residue, blank cells where unscanned.
void write_heatmap_csv(const ScanResult& result, std::ostream& out);

} // namespace segt
