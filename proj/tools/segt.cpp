// segt: split, train, predict, evaluate, scan and export-features.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "segt/checkpoint.hpp"
#include "segt/dataset.hpp"
#include "segt/embedding_io.hpp"
#include "segt/error.hpp"
#include "segt/kernels.hpp"
#include "segt/metrics.hpp"
#include "segt/model.hpp"
#include "segt/mutation_scan.hpp"
#include "segt/parallel.hpp"
#include "segt/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitParse = 2;
constexpr int kExitMissingEmbedding = 3;
constexpr int kExitMismatch = 4;
constexpr int kExitAccession = 5;
constexpr int kExitMissingVariant = 6;

/// Failure that already knows its exit code.
struct Exit {
    int code;
    std::string message;
};

class RunManifest {
public:
    explicit RunManifest(std::string command)
        : start_(std::chrono::steady_clock::now()) {
        doc_["command"] = std::move(command);
        doc_["inputs"] = json::object();
        doc_["outputs"] = json::object();
        doc_["formats"] = {{"embedding", segt::kEmbeddingFormatVersion},
                           {"checkpoint", segt::kCheckpointFormatVersion}};
        doc_["kernels"] = segt::kernels::isa_name(segt::kernels::active_isa());
        doc_["threads"] = segt::thread_count();
        const std::time_t now = std::time(nullptr);
        std::tm utc{};
        gmtime_r(&now, &utc);
        std::ostringstream ts;
        ts << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
        doc_["started_at"] = ts.str();
    }

    void input(const std::string& key, const fs::path& p) { doc_["inputs"][key] = p.string(); }
    void output(const std::string& key, const fs::path& p) { doc_["outputs"][key] = p.string(); }
    void set(const std::string& key, json value) { doc_[key] = std::move(value); }

    void write(const fs::path& path) {
        doc_["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::ofstream out(path);
        if (!out) throw segt::IoError("cannot write run manifest " + path.string());
        out << doc_.dump(2) << '\n';
    }

private:
    json doc_;
    std::chrono::steady_clock::time_point start_;
};

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw segt::IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw segt::FormatError(path.string() + ": " + e.what());
    }
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw segt::IoError("cannot write " + path.string());
    return out;
}

std::vector<double> parse_boundaries(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Exit{kExitParse, "bad boundary value '" + item + "'"};
        }
    }
    if (out.empty() || !std::is_sorted(out.begin(), out.end()) ||
        std::adjacent_find(out.begin(), out.end()) != out.end()) {
        throw Exit{kExitParse, "boundaries must be strictly ascending numbers, e.g. 45,70"};
    }
    return out;
}

// ---------------------------------------------------------------------------

struct SplitArgs {
    std::string data;
    std::uint64_t seed = 0;
    std::string out;
    double test_frac = 0.10;
    double val_frac = 0.10;
    std::string boundaries = "45,70,100";
    double threshold = 0.5;
    std::size_t kmer = 5;
};

int cmd_split(const SplitArgs& a) {
    RunManifest manifest("split");
    const auto records = segt::parse_dataset(fs::path(a.data));
    segt::SplitOptions options;
    options.test_frac = a.test_frac;
    options.val_cluster_frac = a.val_frac;
    options.boundaries = parse_boundaries(a.boundaries);
    options.threshold = a.threshold;
    options.kmer = a.kmer;
    const auto split = segt::make_split(records, a.seed, options);

    const fs::path dir(a.out);
    fs::create_directories(dir);
    segt::write_split(split, dir / "split.tsv");
    {
        auto out = open_out(dir / "summary.tsv");
        segt::write_split_summary(split, out);
    }
    segt::write_split_summary(split, std::cout);

    manifest.input("data", a.data);
    manifest.output("split", dir / "split.tsv");
    manifest.output("summary", dir / "summary.tsv");
    manifest.set("seed", a.seed);
    manifest.set("options", {{"test_frac", a.test_frac},
                             {"val_cluster_frac", a.val_frac},
                             {"boundaries", options.boundaries},
                             {"threshold", a.threshold},
                             {"kmer", a.kmer}});
    manifest.write(dir / "run_manifest.json");
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::string split;
    std::string embeddings;
    std::string model_config;
    std::string train_config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
    RunManifest manifest("train");
    const auto records = segt::parse_dataset(fs::path(a.data));
    const auto split = segt::read_split(a.split);
    const auto model_config = segt::model_config_from_json(read_json_file(a.model_config));
    auto train_config = a.train_config.empty() ? segt::TrainConfig{}
                                               : segt::train_config_from_json(read_json_file(a.train_config));
    if (a.seed) train_config.seed = *a.seed;

    const auto lookup = segt::manifest_lookup(segt::read_manifest(a.embeddings));
    const auto train_set = segt::gather_examples(records, split, segt::Subset::train, lookup);
    const auto val_set = segt::gather_examples(records, split, segt::Subset::validation, lookup);

    const fs::path dir(a.out);
    fs::create_directories(dir);
    auto log = open_out(dir / "train_log.jsonl");
    const auto result = segt::train(train_set, val_set, model_config, train_config, &log);
    segt::save_checkpoint(result.best, dir / "best.segc");
    segt::save_checkpoint(result.last, dir / "last.segc");

    std::cout << "trained " << result.history.size() << " epochs on " << train_set.size() << " records; best epoch "
              << result.best.epoch << " validation RMSE " << result.best.metrics.at("rmse").get<double>() << '\n';

    manifest.input("data", a.data);
    manifest.input("split", a.split);
    manifest.input("embeddings", a.embeddings);
    manifest.input("model_config", a.model_config);
    if (!a.train_config.empty()) manifest.input("train_config", a.train_config);
    manifest.output("best_checkpoint", dir / "best.segc");
    manifest.output("last_checkpoint", dir / "last.segc");
    manifest.output("log", dir / "train_log.jsonl");
    manifest.set("seed", train_config.seed);
    manifest.set("best_epoch", result.best.epoch);
    manifest.write(dir / "run_manifest.json");
    return 0;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
    std::string checkpoint;
    std::string embeddings;
    std::string out;
};

json error_object(const std::string& accession, const std::exception& e) {
    std::string type = "Error";
    if (dynamic_cast<const segt::SequenceTooShort*>(&e)) type = "SequenceTooShort";
    else if (dynamic_cast<const segt::FormatError*>(&e)) type = "FormatError";
    else if (dynamic_cast<const segt::IoError*>(&e)) type = "IoError";
    else if (dynamic_cast<const segt::ShapeError*>(&e)) type = "ShapeError";
    return {{"accession", accession}, {"error", {{"type", type}, {"message", e.what()}}}};
}

int cmd_predict(const PredictArgs& a) {
    RunManifest manifest("predict");
    const auto checkpoint = segt::load_checkpoint(a.checkpoint);
    const segt::Model model(checkpoint.config, checkpoint.params);
    const auto entries = segt::read_manifest(a.embeddings);

    std::vector<std::string> lines(entries.size());
    std::vector<std::optional<std::string>> mismatch(entries.size());
    segt::parallel_for(entries.size(), [&](std::size_t i) {
        try {
            auto embedding = segt::read_embedding(entries[i].path);
            embedding.accession = entries[i].accession;
            lines[i] = segt::to_json(model.predict(embedding)).dump();
        } catch (const segt::ConfigMismatch& e) {
            mismatch[i] = e.what();
        } catch (const segt::Error& e) {
            lines[i] = error_object(entries[i].accession, e).dump();
        }
    });
    for (const auto& m : mismatch) {
        if (m) throw Exit{kExitMismatch, *m};
    }

    const fs::path out_path(a.out);
    auto out = open_out(out_path);
    std::size_t failed = 0;
    for (const auto& line : lines) {
        out << line << '\n';
        failed += line.find("\"error\":{") != std::string::npos;
    }
    out.close();
    std::cout << "predicted " << entries.size() - failed << " of " << entries.size() << " records\n";

    manifest.input("checkpoint", a.checkpoint);
    manifest.input("embeddings", a.embeddings);
    manifest.output("predictions", out_path);
    manifest.set("records", entries.size());
    manifest.set("failed", failed);
    manifest.write(out_path.string() + ".manifest.json");
    return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string predictions;
    std::string truth;
    std::string boundaries = "45,70";
    std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
    RunManifest manifest("evaluate");
    const auto boundaries = parse_boundaries(a.boundaries);
    const auto records = segt::parse_dataset(fs::path(a.truth));
    std::map<std::string, double> truth_of;
    for (const auto& r : records) truth_of.emplace(r.accession, r.temperature);

    std::ifstream in(a.predictions);
    if (!in) throw segt::IoError("cannot open " + a.predictions);
    std::vector<double> pred;
    std::vector<double> truth;
    std::vector<std::string> missing;
    std::set<std::string> seen;
    std::size_t skipped = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw segt::ParseError(std::string("prediction is not JSON: ") + e.what(), line_no);
        }
        if (j.contains("error")) {
            ++skipped;
            continue;
        }
        segt::Prediction p;
        try {
            p = segt::prediction_from_json(j);
        } catch (const std::exception& e) {
            throw segt::ParseError(std::string("malformed prediction: ") + e.what(), line_no);
        }
        if (!seen.insert(p.accession).second) throw segt::DuplicateError(p.accession);
        const auto it = truth_of.find(p.accession);
        if (it == truth_of.end()) {
            missing.push_back(p.accession);
            continue;
        }
        pred.push_back(p.y_hat);
        truth.push_back(it->second);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw Exit{kExitAccession, "predictions without a truth record: " + list};
    }
    if (pred.empty()) throw segt::Error("no scorable predictions in " + a.predictions);

    const auto report = segt::evaluate(pred, truth, boundaries);
    std::cout << segt::format_table(report);
    if (skipped) std::cout << "skipped " << skipped << " prediction lines carrying errors\n";

    json doc = segt::to_json(report);
    doc["skipped"] = skipped;
    const fs::path dir(a.out);
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "report.json");
        out << doc.dump(2) << '\n';
    }
    {
        auto out = open_out(dir / "report.txt");
        out << segt::format_table(report);
    }
    manifest.input("predictions", a.predictions);
    manifest.input("truth", a.truth);
    manifest.output("report", dir / "report.json");
    manifest.output("table", dir / "report.txt");
    manifest.set("boundaries", boundaries);
    manifest.write(dir / "run_manifest.json");
    return 0;
}

// ---------------------------------------------------------------------------

struct ScanArgs {
    std::string checkpoint;
    std::string wild_type;
    std::string variants;
    std::string criteria;
    std::string out;
};

int cmd_scan(const ScanArgs& a) {
    RunManifest manifest("scan");
    const auto checkpoint = segt::load_checkpoint(a.checkpoint);
    const segt::Model model(checkpoint.config, checkpoint.params);
    const auto criteria = a.criteria.empty() ? segt::SelectionCriteria{}
                                             : segt::selection_criteria_from_json(read_json_file(a.criteria));
    const auto wild_type = segt::read_embedding(a.wild_type);
    const auto variants = segt::manifest_variants(segt::read_manifest(a.variants));

    const auto result = segt::scan(wild_type, variants.sites, variants.provider, model);
    const auto candidates = segt::select_candidates(result, criteria);

    const fs::path dir(a.out);
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "scan.json");
        out << segt::to_json(result).dump(2) << '\n';
    }
    {
        auto out = open_out(dir / "heatmap.csv");
        segt::write_heatmap_csv(result, out);
    }
    {
        auto out = open_out(dir / "candidates.json");
        out << segt::to_json(candidates).dump(2) << '\n';
    }
    std::cout << "scanned " << result.sites.size() << " positions; " << candidates.size() << " candidates\n";

    manifest.input("checkpoint", a.checkpoint);
    manifest.input("wild_type", a.wild_type);
    manifest.input("variants", a.variants);
    if (!a.criteria.empty()) manifest.input("criteria", a.criteria);
    manifest.output("scan", dir / "scan.json");
    manifest.output("heatmap", dir / "heatmap.csv");
    manifest.output("candidates", dir / "candidates.json");
    manifest.set("criteria", segt::to_json(criteria));
    manifest.write(dir / "run_manifest.json");
    return 0;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
    std::string checkpoint;
    std::string embeddings;
    std::string stage;
    std::string data;
    std::string out;
};

int cmd_export_features(const ExportArgs& a) {
    RunManifest manifest("export-features");
    segt::FeatureStage stage;
    try {
        stage = segt::parse_feature_stage(a.stage);
    } catch (const segt::Error& e) {
        throw Exit{kExitParse, e.what()};
    }
    const auto checkpoint = segt::load_checkpoint(a.checkpoint);
    const segt::Model model(checkpoint.config, checkpoint.params);
    auto entries = segt::read_manifest(a.embeddings);
    std::sort(entries.begin(), entries.end(),
              [](const segt::ManifestEntry& x, const segt::ManifestEntry& y) { return x.accession < y.accession; });

    std::map<std::string, double> labels;
    if (!a.data.empty()) {
        for (const auto& r : segt::parse_dataset(fs::path(a.data))) labels.emplace(r.accession, r.temperature);
    }

    std::vector<std::vector<double>> rows(entries.size());
    segt::parallel_for(entries.size(), [&](std::size_t i) {
        rows[i] = model.features(segt::read_embedding(entries[i].path), stage);
    });

    const fs::path out_path(a.out);
    auto out = open_out(out_path);
    const std::size_t width = checkpoint.config.conversion.d_model * checkpoint.config.scales();
    out << "id";
    for (std::size_t k = 0; k < width; ++k) out << ",f" << k;
    out << ",temperature_c\n";
    out << std::setprecision(9);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        out << entries[i].accession;
        for (double v : rows[i]) out << ',' << v;
        out << ',';
        if (const auto it = labels.find(entries[i].accession); it != labels.end()) out << it->second;
        out << '\n';
    }
    out.close();
    std::cout << "exported " << entries.size() << " rows of " << width << " " << a.stage << " features\n";

    manifest.input("checkpoint", a.checkpoint);
    manifest.input("embeddings", a.embeddings);
    if (!a.data.empty()) manifest.input("data", a.data);
    manifest.output("features", out_path);
    manifest.set("stage", a.stage);
    manifest.write(out_path.string() + ".manifest.json");
    return 0;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const segt::MissingInput*>(&e)) return kExitMissingEmbedding;
    if (dynamic_cast<const segt::MissingVariant*>(&e)) return kExitMissingVariant;
    if (dynamic_cast<const segt::ConfigMismatch*>(&e)) return kExitMismatch;
    if (dynamic_cast<const segt::ParseError*>(&e) || dynamic_cast<const segt::FormatError*>(&e) ||
        dynamic_cast<const segt::IoError*>(&e) || dynamic_cast<const segt::DuplicateError*>(&e) ||
        dynamic_cast<const segt::AlphabetError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) {
        return kExitParse;
    }
    return kExitError;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Segment transformer for enzyme temperature-stability regression"};
    app.require_subcommand(1);

    SplitArgs split;
    auto* split_cmd = app.add_subcommand("split", "Cluster-aware train/validation/test split");
    split_cmd->add_option("--data", split.data, "Dataset TSV (accession, sequence, temperature_c)")->required();
    split_cmd->add_option("--seed", split.seed, "Random seed");
    split_cmd->add_option("--out", split.out, "Output directory")->required();
    split_cmd->add_option("--test-frac", split.test_frac, "Fraction of records held out for test");
    split_cmd->add_option("--val-frac", split.val_frac, "Fraction of clusters sent to validation");
    split_cmd->add_option("--boundaries", split.boundaries, "Temperature interval cut points, e.g. 45,70,100");
    split_cmd->add_option("--threshold", split.threshold, "k-mer Jaccard threshold for clustering");
    split_cmd->add_option("--kmer", split.kmer, "k-mer length for clustering");

    TrainArgs train;
    std::uint64_t train_seed = 0;
    auto* train_cmd = app.add_subcommand("train", "Train and keep the best validation checkpoint");
    train_cmd->add_option("--data", train.data, "Dataset TSV")->required();
    train_cmd->add_option("--split", train.split, "Split TSV from `split`")->required();
    train_cmd->add_option("--embeddings", train.embeddings, "Embedding manifest TSV")->required();
    train_cmd->add_option("--model-config", train.model_config, "Model config JSON")->required();
    train_cmd->add_option("--train-config", train.train_config, "Training config JSON");
    train_cmd->add_option("--out", train.out, "Output directory")->required();
    auto* seed_opt = train_cmd->add_option("--seed", train_seed, "Overrides the training config seed");

    PredictArgs predict;
    auto* predict_cmd = app.add_subcommand("predict", "Predict temperatures as JSON lines");
    predict_cmd->add_option("--checkpoint", predict.checkpoint, "SEGC checkpoint")->required();
    predict_cmd->add_option("--embeddings", predict.embeddings, "Embedding manifest TSV")->required();
    predict_cmd->add_option("--out", predict.out, "Output JSONL")->required();

    EvaluateArgs evaluate;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against labels");
    evaluate_cmd->add_option("--predictions", evaluate.predictions, "Predictions JSONL")->required();
    evaluate_cmd->add_option("--truth", evaluate.truth, "Dataset TSV with true temperatures")->required();
    evaluate_cmd->add_option("--boundaries", evaluate.boundaries, "Grouped-MAE cut points");
    evaluate_cmd->add_option("--out", evaluate.out, "Output directory")->required();

    ScanArgs scan;
    auto* scan_cmd = app.add_subcommand("scan", "Single-substitution scan and candidate selection");
    scan_cmd->add_option("--checkpoint", scan.checkpoint, "SEGC checkpoint")->required();
    scan_cmd->add_option("--wild-type", scan.wild_type, "Wild-type embedding file")->required();
    scan_cmd->add_option("--variants", scan.variants, "Manifest of variant embeddings named like A78E")->required();
    scan_cmd->add_option("--criteria", scan.criteria, "Selection criteria JSON");
    scan_cmd->add_option("--out", scan.out, "Output directory")->required();

    ExportArgs feats;
    auto* export_cmd = app.add_subcommand("export-features", "Export intermediate features as CSV");
    export_cmd->add_option("--checkpoint", feats.checkpoint, "SEGC checkpoint")->required();
    export_cmd->add_option("--embeddings", feats.embeddings, "Embedding manifest TSV")->required();
    export_cmd->add_option("--stage", feats.stage, "segments | dgsa | pooled")->required();
    export_cmd->add_option("--data", feats.data, "Dataset TSV supplying the label column");
    export_cmd->add_option("--out", feats.out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitParse;
    }

    try {
        if (*split_cmd) return cmd_split(split);
        if (*train_cmd) {
            if (*seed_opt) train.seed = train_seed;
            return cmd_train(train);
        }
        if (*predict_cmd) return cmd_predict(predict);
        if (*evaluate_cmd) return cmd_evaluate(evaluate);
        if (*scan_cmd) return cmd_scan(scan);
        if (*export_cmd) return cmd_export_features(feats);
    } catch (const Exit& e) {
        std::cerr << "segt: error: " << e.message << '\n';
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "segt: error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitError;
}
