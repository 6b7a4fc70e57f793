#include "segt/mutation_scan.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <unordered_map>

#include "segt/error.hpp"
#include "segt/parallel.hpp"

namespace segt {
namespace {

std::string shortest(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

} // namespace

double ScanResult::segment_importance(std::size_t position) const {
    for (const auto& seg : wild_type.importance) {
        if (position >= seg.start_residue && position < seg.end_residue) return seg.score();
    }
    return 0.0;
}

ScanResult scan(const ResidueEmbedding& wild_type, const std::vector<ScanSite>& sites,
                const VariantProvider& variants, const Model& model) {
    wild_type.validate();
    ScanResult result;
    result.accession = wild_type.accession;
    result.length = wild_type.length;
    result.wild_type = model.predict(wild_type);
    result.sites = sites;
    std::sort(result.sites.begin(), result.sites.end(),
              [](const ScanSite& a, const ScanSite& b) { return a.position < b.position; });
    for (std::size_t i = 0; i < result.sites.size(); ++i) {
        const auto& s = result.sites[i];
        if (s.position >= wild_type.length) {
            throw Error("scan position " + std::to_string(s.position + 1) + " is beyond the sequence length " +
                        std::to_string(wild_type.length));
        }
        if (amino_acid_index(s.wild_type) < 0) throw AlphabetError(std::string("bad wild-type letter ") + s.wild_type);
        if (i > 0 && result.sites[i - 1].position == s.position) {
            throw Error("scan position " + std::to_string(s.position + 1) + " listed twice");
        }
    }
    result.delta.assign(wild_type.length * 20, std::numeric_limits<double>::quiet_NaN());

    const double base = result.wild_type.y_hat;
    const std::size_t jobs = result.sites.size() * 20;
    parallel_for(jobs, [&](std::size_t job) {
        const ScanSite& site = result.sites[job / 20];
        const char letter = kAminoAcids[job % 20];
        double& cell = result.delta[site.position * 20 + job % 20];
        if (letter == site.wild_type) {
            cell = 0.0;
            return;
        }
        const auto variant = variants(site.position, letter);
        if (!variant) throw MissingVariant(site.position, letter);
        if (variant->dim != wild_type.dim || variant->length != wild_type.length) {
            throw ConfigMismatch("variant " + variant_name(site.wild_type, site.position, letter) + " has shape [" +
                                 std::to_string(variant->length) + ", " + std::to_string(variant->dim) +
                                 "], wild type has [" + std::to_string(wild_type.length) + ", " +
                                 std::to_string(wild_type.dim) + "]");
        }
        cell = model.predict(*variant).y_hat - base;
    });
    return result;
}

ScanResult scan(const ResidueEmbedding& wild_type, std::string_view sequence, const VariantProvider& variants,
                const Model& model) {
    validate_sequence(sequence);
    if (sequence.size() != wild_type.length) {
        throw ConfigMismatch("sequence has " + std::to_string(sequence.size()) + " residues, embedding has " +
                             std::to_string(wild_type.length));
    }
    std::vector<ScanSite> sites(sequence.size());
    for (std::size_t p = 0; p < sequence.size(); ++p) sites[p] = {p, sequence[p]};
    return scan(wild_type, sites, variants, model);
}

VariantProvider synth_variant_provider(std::string sequence, std::size_t dim, std::uint64_t seed) {
    validate_sequence(sequence);
    return [sequence = std::move(sequence), dim, seed](std::size_t position,
                                                       char letter) -> std::optional<ResidueEmbedding> {
        if (position >= sequence.size() || amino_acid_index(letter) < 0) return std::nullopt;
        std::string mutant = sequence;
        mutant[position] = letter;
        return synth_embed(mutant, dim, seed, variant_name(sequence[position], position, letter));
    };
}

std::string variant_name(char wild_type, std::size_t position, char letter) {
    return std::string(1, wild_type) + std::to_string(position + 1) + std::string(1, letter);
}

std::optional<ParsedVariant> parse_variant_name(std::string_view name) {
    if (name.size() < 3) return std::nullopt;
    const char wt = name.front();
    const char mut = name.back();
    if (amino_acid_index(wt) < 0 || amino_acid_index(mut) < 0) return std::nullopt;
    const std::string_view digits = name.substr(1, name.size() - 2);
    std::size_t pos = 0;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), pos);
    if (ec != std::errc{} || end != digits.data() + digits.size() || pos == 0) return std::nullopt;
    return ParsedVariant{wt, pos - 1, mut};
}

ManifestVariants manifest_variants(const std::vector<ManifestEntry>& manifest) {
    auto paths = std::make_shared<std::map<std::pair<std::size_t, char>, std::filesystem::path>>();
    std::map<std::size_t, char> wild;
    for (const auto& e : manifest) {
        const auto v = parse_variant_name(e.accession);
        if (!v) throw Error("variant manifest entry '" + e.accession + "' is not named like A78E");
        const auto [it, inserted] = wild.emplace(v->position, v->wild_type);
        if (!inserted && it->second != v->wild_type) {
            throw Error("variant manifest disagrees on the wild-type letter at position " +
                        std::to_string(v->position + 1));
        }
        (*paths)[{v->position, v->letter}] = e.path;
    }
    ManifestVariants out;
    for (const auto& [pos, letter] : wild) out.sites.push_back({pos, letter});
    out.provider = [paths](std::size_t position, char letter) -> std::optional<ResidueEmbedding> {
        const auto it = paths->find({position, letter});
        if (it == paths->end() || !std::filesystem::exists(it->second)) return std::nullopt;
        return read_embedding(it->second);
    };
    return out;
}

void SelectionCriteria::validate() const {
    if (!(importance_threshold >= 0.0) || !(temperature_score_threshold >= 0.0)) {
        throw Error("selection thresholds must be >= 0");
    }
}

nlohmann::json to_json(const SelectionCriteria& c) {
    return {{"importance_threshold", c.importance_threshold},
            {"temperature_score_threshold", c.temperature_score_threshold}};
}

SelectionCriteria selection_criteria_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{"importance_threshold", "temperature_score_threshold"};
    if (!j.is_object()) throw ConfigMismatch("criteria must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigMismatch("unknown criteria key: " + key);
    }
    SelectionCriteria c;
    try {
        c.importance_threshold = j.value("importance_threshold", c.importance_threshold);
        c.temperature_score_threshold = j.value("temperature_score_threshold", c.temperature_score_threshold);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigMismatch(std::string("bad criteria value: ") + e.what());
    }
    c.validate();
    return c;
}

std::vector<Candidate> select_candidates(const ScanResult& result, const SelectionCriteria& criteria) {
    criteria.validate();
    double max_abs = 0.0;
    for (double d : result.delta) {
        if (std::isfinite(d)) max_abs = std::max(max_abs, std::abs(d));
    }
    std::vector<Candidate> out;
    if (max_abs == 0.0) return out;
    for (const auto& site : result.sites) {
        const double importance = result.segment_importance(site.position);
        if (!(importance > criteria.importance_threshold)) continue;
        for (std::size_t a = 0; a < 20; ++a) {
            const double d = result.at(site.position, a);
            const double score = d / max_abs * 100.0;
            if (score > criteria.temperature_score_threshold) {
                out.push_back({site.position, site.wild_type, kAminoAcids[a], d, score, importance});
            }
        }
    }
    // Score is monotone in delta; delta breaks float ties so both rankings agree.
    std::stable_sort(out.begin(), out.end(), [](const Candidate& x, const Candidate& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.delta > y.delta;
    });
    return out;
}

nlohmann::json to_json(const ScanResult& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& site : r.sites) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t a = 0; a < 20; ++a) row.push_back(r.at(site.position, a));
        rows.push_back({{"position", site.position + 1},
                        {"wild_type", std::string(1, site.wild_type)},
                        {"delta", std::move(row)}});
    }
    return {{"accession", r.accession},
            {"length", r.length},
            {"alphabet", std::string(kAminoAcids)},
            {"wild_type_prediction", to_json(r.wild_type)},
            {"rows", std::move(rows)}};
}

nlohmann::json to_json(const std::vector<Candidate>& candidates) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : candidates) {
        out.push_back({{"variant", variant_name(c.wild_type, c.position, c.letter)},
                       {"position", c.position + 1},
                       {"wild_type", std::string(1, c.wild_type)},
                       {"letter", std::string(1, c.letter)},
                       {"delta", c.delta},
                       {"score", c.score},
                       {"segment_importance", c.segment_importance}});
    }
    return out;
}

void write_heatmap_csv(const ScanResult& r, std::ostream& out) {
    out << "position,wild_type";
    for (char a : kAminoAcids) out << ',' << a;
    out << '\n';
    std::unordered_map<std::size_t, char> wild;
    for (const auto& s : r.sites) wild.emplace(s.position, s.wild_type);
    for (std::size_t p = 0; p < r.length; ++p) {
        out << p + 1 << ',';
        const auto it = wild.find(p);
        if (it != wild.end()) out << it->second;
        for (std::size_t a = 0; a < 20; ++a) {
            out << ',';
            const double d = r.at(p, a);
            if (std::isfinite(d)) out << shortest(d);
        }
        out << '\n';
    }
}

} // namespace segt
