#pragma once

// End-to-end orchestration behind the command-line tool: one declarative
// config file drives induction, training, evaluation and single-frame
// inference. Each command validates everything it needs before writing.

#include "vadsk/classifier.hpp"
#include "vadsk/common.hpp"
#include "vadsk/dataset.hpp"
#include "vadsk/deduction.hpp"
#include "vadsk/describer.hpp"
#include "vadsk/induction.hpp"
#include "vadsk/io.hpp"
#include "vadsk/metrics.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

namespace vadsk {

namespace fs = std::filesystem;

enum class DatasetProfile { Ped2, Avenue, ShanghaiTech, Generic };

inline DatasetProfile parse_profile(std::string_view s) {
    if (s == "ped2") return DatasetProfile::Ped2;
    if (s == "avenue") return DatasetProfile::Avenue;
    if (s == "shanghaitech") return DatasetProfile::ShanghaiTech;
    if (s == "generic") return DatasetProfile::Generic;
    throw Error(ErrorKind::ConfigError, "unknown dataset profile '" + std::string(s) + "'");
}

struct PipelineConfig {
    fs::path manifest;
    std::string dataset_name;
    DatasetProfile profile = DatasetProfile::Generic;
    ProviderConfig provider;
    std::optional<fs::path> stub_map;
    fs::path cache_dir;
    std::size_t induction_samples = 20;
    double train_ratio = 0.8;
    VectorizerConfig vectorizer;
    TrainConfig training;
    std::uint64_t seed = 0;
    fs::path output_dir = "vadsk-out";
    double threshold = 0.5;

    /// Per-dataset settings: keyword cap, max_df, batch size.
    void apply_profile(DatasetProfile p) {
        profile = p;
        switch (p) {
        case DatasetProfile::Ped2:
            vectorizer.max_features = 100;
            vectorizer.max_df = {0.95, true};
            training.batch_size = 200;
            break;
        case DatasetProfile::Avenue:
            vectorizer.max_features = 200;
            vectorizer.max_df = {1.0, true};
            training.batch_size = 1000;
            break;
        case DatasetProfile::ShanghaiTech:
            vectorizer.max_features = 200;
            vectorizer.max_df = {1.0, true};
            training.batch_size = 2000;
            break;
        case DatasetProfile::Generic:
            vectorizer.max_features = 200;
            vectorizer.max_df = {1.0, true};
            training.batch_size = 200;
            break;
        }
    }

    /// Checks every value and referenced input path; touches nothing on disk.
    void validate() const {
        if (!fs::is_regular_file(manifest)) throw Error(ErrorKind::ConfigError, "manifest not found: " + manifest.string());
        if (stub_map && !fs::is_regular_file(*stub_map))
            throw Error(ErrorKind::ConfigError, "stub map not found: " + stub_map->string());
        if (!stub_map) HttpProvider::split_endpoint(provider.endpoint_url);
        if (provider.model_id.empty()) throw Error(ErrorKind::ConfigError, "provider model must be set");
        if (provider.prompt.empty()) throw Error(ErrorKind::ConfigError, "provider prompt must be set");
        if (!(provider.timeout_seconds > 0)) throw Error(ErrorKind::ConfigError, "provider timeout must be positive");
        if (provider.max_retries < 0) throw Error(ErrorKind::ConfigError, "max_retries must be non-negative");
        if (provider.max_concurrency < 1) throw Error(ErrorKind::ConfigError, "max_concurrency must be at least 1");
        if (!(provider.retry_backoff_seconds >= 0)) throw Error(ErrorKind::ConfigError, "retry_backoff must be >= 0");
        if (induction_samples == 0) throw Error(ErrorKind::ConfigError, "induction samples must be positive");
        if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw Error(ErrorKind::ConfigError, "train_ratio must lie in (0, 1)");
        if (!std::isfinite(threshold)) throw Error(ErrorKind::ConfigError, "threshold must be finite");
        if (output_dir.empty()) throw Error(ErrorKind::ConfigError, "output_dir must be set");
        if (fs::exists(output_dir) && !fs::is_directory(output_dir))
            throw Error(ErrorKind::ConfigError, "output_dir is not a directory: " + output_dir.string());
        vectorizer.validate();
        training.validate();
    }
};

/// Command-line values that take precedence over the config file.
struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> output_dir;
    std::optional<double> threshold;
    std::optional<std::string> provider_url;
    std::optional<fs::path> stub_map;
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    s = s.substr(b, e - b + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

} // namespace detail

/// Parses INI text (`[section]` headers, `key = value` lines). Unknown
/// sections or keys are rejected. Relative paths resolve against `base_dir`.
inline PipelineConfig parse_pipeline_config(const std::string& text, const fs::path& base_dir,
                                            const ConfigOverrides& overrides = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorKind::ConfigError, e.what());
    }

    static const std::map<std::string, std::set<std::string>> known = {
        {"dataset", {"manifest", "name", "profile"}},
        {"provider",
         {"url", "model", "prompt", "timeout", "max_retries", "max_concurrency", "retry_backoff", "cache_dir", "stub"}},
        {"induction", {"samples", "max_features", "min_df", "max_df", "stop_words", "variant", "ngram_n"}},
        {"split", {"train_ratio"}},
        {"training",
         {"learning_rate", "weight_decay", "max_epochs", "patience", "folds", "batch_size", "hidden1", "hidden2",
          "pos_weight"}},
        {"run", {"seed", "output_dir", "threshold"}},
    };
    for (const auto& [section, body] : tree) {
        auto it = known.find(section);
        if (it == known.end() || !body.data().empty())
            throw Error(ErrorKind::ConfigError, "unknown config section '" + section + "'");
        for (const auto& [key, _] : body)
            if (!it->second.contains(key))
                throw Error(ErrorKind::ConfigError, "unknown config key '" + section + "." + key + "'");
    }

    auto get = [&](const std::string& key) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return detail::trim(*v);
        return std::nullopt;
    };
    auto path_of = [&](const std::string& s) {
        fs::path p(s);
        return p.is_relative() ? base_dir / p : p;
    };
    auto number = [&](const std::string& key, auto& target) {
        auto v = get(key);
        if (!v) return;
        using T = std::decay_t<decltype(target)>;
        std::optional<T> parsed;
        if constexpr (std::is_floating_point_v<T>) {
            parsed = parse_double(*v);
        } else {
            parsed = parse_int<T>(*v);
        }
        if (!parsed) throw Error(ErrorKind::ConfigError, "bad value for " + key + ": '" + *v + "'");
        target = *parsed;
    };

    PipelineConfig c;
    c.apply_profile(parse_profile(get("dataset.profile").value_or("generic")));

    const auto manifest = get("dataset.manifest");
    if (!manifest || manifest->empty()) throw Error(ErrorKind::ConfigError, "dataset.manifest is required");
    c.manifest = path_of(*manifest);
    c.dataset_name = get("dataset.name").value_or(c.manifest.stem().string());

    if (auto v = get("provider.url")) c.provider.endpoint_url = *v;
    if (auto v = get("provider.model")) c.provider.model_id = *v;
    if (auto v = get("provider.prompt")) c.provider.prompt = *v;
    number("provider.timeout", c.provider.timeout_seconds);
    number("provider.max_retries", c.provider.max_retries);
    number("provider.max_concurrency", c.provider.max_concurrency);
    number("provider.retry_backoff", c.provider.retry_backoff_seconds);
    if (auto v = get("provider.stub"); v && !v->empty()) c.stub_map = path_of(*v);

    number("induction.samples", c.induction_samples);
    number("induction.max_features", c.vectorizer.max_features);
    number("induction.ngram_n", c.vectorizer.ngram_n);
    if (auto v = get("induction.min_df")) c.vectorizer.min_df = DfBound::parse(*v);
    if (auto v = get("induction.max_df")) c.vectorizer.max_df = DfBound::parse(*v);
    if (auto v = get("induction.stop_words")) c.vectorizer.stop_words = *v;
    if (auto v = get("induction.variant")) c.vectorizer.variant = parse_variant(*v);

    number("split.train_ratio", c.train_ratio);

    number("training.learning_rate", c.training.learning_rate);
    number("training.weight_decay", c.training.weight_decay);
    number("training.max_epochs", c.training.max_epochs);
    number("training.patience", c.training.patience);
    number("training.folds", c.training.folds);
    number("training.batch_size", c.training.batch_size);
    number("training.hidden1", c.training.hidden1);
    number("training.hidden2", c.training.hidden2);
    if (auto v = get("training.pos_weight"); v && *v != "auto") {
        auto d = parse_double(*v);
        if (!d) throw Error(ErrorKind::ConfigError, "bad value for training.pos_weight: '" + *v + "'");
        c.training.pos_weight = *d;
    }

    number("run.seed", c.seed);
    if (auto v = get("run.output_dir")) c.output_dir = path_of(*v);
    number("run.threshold", c.threshold);

    if (overrides.seed) c.seed = *overrides.seed;
    if (overrides.output_dir) c.output_dir = *overrides.output_dir;
    if (overrides.threshold) c.threshold = *overrides.threshold;
    if (overrides.provider_url) c.provider.endpoint_url = *overrides.provider_url;
    if (overrides.stub_map) c.stub_map = *overrides.stub_map;

    c.training.seed = c.seed;
    if (auto v = get("provider.cache_dir"); v && !v->empty()) {
        c.cache_dir = path_of(*v);
    } else {
        c.cache_dir = c.output_dir / "cache";
    }
    if (const char* key = std::getenv(std::string(kApiKeyEnv).c_str())) c.provider.api_key = key;
    c.validate();
    return c;
}

inline PipelineConfig load_pipeline_config(const fs::path& path, const ConfigOverrides& overrides = {}) {
    if (!fs::is_regular_file(path)) throw Error(ErrorKind::ConfigError, "config file not found: " + path.string());
    return parse_pipeline_config(io::read_file(path), path.parent_path(), overrides);
}

/// Output file names inside the run directory.
namespace outputs {
inline constexpr const char* kSplits = "splits.json";
inline constexpr const char* kDescriptions = "descriptions.jsonl";
inline constexpr const char* kKeywords = "keywords.tsv";
inline constexpr const char* kTopKeywords = "top_keywords.tsv";
inline constexpr const char* kClassifier = "classifier.txt";
inline constexpr const char* kFoldMetrics = "fold_metrics.tsv";
inline constexpr const char* kTrainEncodings = "encodings_train.tsv";
inline constexpr const char* kEvalReport = "eval_report.json";
inline constexpr const char* kScores = "scores.csv";
inline constexpr const char* kTestEncodings = "encodings_test.csv";
inline constexpr const char* kInferDir = "infer";
} // namespace outputs

struct InferenceRecord {
    std::string frame_id;
    double probability = 0.0;
    double threshold = 0.5;
    bool anomalous = false;
    /// Keywords found in the description with their weights.
    std::vector<std::pair<std::string, double>> present_keywords;
    Encoding encoding;
    std::string description;
};

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Re-labels an error with the pipeline stage that raised it.
template <class F>
auto in_stage(std::string_view stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const AllFailedError& e) {
        const auto& first = e.failures().front();
        throw Error(first.kind, std::string(stage) + ": all " + std::to_string(e.failures().size()) +
                                    " frames failed; first: " + first.message);
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(stage) + ": " + e.detail());
    }
}

class Pipeline {
public:
    /// `provider` overrides the configured one (tests inject counting stubs).
    explicit Pipeline(PipelineConfig config, std::shared_ptr<Provider> provider = nullptr, std::ostream* log = &std::cerr)
        : config_(std::move(config)), provider_(std::move(provider)), log_(log) {
        config_.validate();
        dataset_ = in_stage("dataset", [&] { return load_manifest(config_.manifest); });
        dataset_.name = config_.dataset_name;
        if (!provider_) {
            if (config_.stub_map) {
                provider_ = StubProvider::from_file(*config_.stub_map);
            } else {
                provider_ = std::make_shared<HttpProvider>();
            }
        }
    }

    const PipelineConfig& config() const noexcept { return config_; }
    const Dataset& dataset() const noexcept { return dataset_; }
    Provider& provider() { return *provider_; }

    fs::path out(std::string_view name) const { return config_.output_dir / name; }

    SplitAssignment splits() const {
        return in_stage("split", [&] {
            return plan_splits(dataset_, config_.induction_samples, config_.train_ratio, config_.seed);
        });
    }

    /// Describes every frame the run will use (cache warm-up).
    BatchResult describe() {
        const auto s = splits();
        std::vector<std::string> ids = s.induction_normal;
        ids.insert(ids.end(), s.induction_anomalous.begin(), s.induction_anomalous.end());
        ids.insert(ids.end(), s.train.begin(), s.train.end());
        ids.insert(ids.end(), s.test.begin(), s.test.end());
        write_splits(s);
        return describe_frames(select_frames(dataset_, ids), false);
    }

    KeywordModel induce() {
        const auto s = splits();
        write_splits(s);
        auto normal = describe_frames(select_frames(dataset_, s.induction_normal), true).records;
        auto anomalous = describe_frames(select_frames(dataset_, s.induction_anomalous), true).records;
        auto model = in_stage("induce", [&] {
            return induce_keywords(normal, anomalous, config_.vectorizer,
                                   {dataset_.name, config_.seed, config_.provider.model_id});
        });
        io::write_file_atomic(out(outputs::kKeywords), serialize(model));
        io::write_file_atomic(out(outputs::kTopKeywords), format_keyword_listing(model));
        log("induce: " + std::to_string(model.k()) + " keywords -> " + out(outputs::kKeywords).string());
        return model;
    }

    TrainedModel train() {
        const auto keywords = in_stage("train", [&] { return load_keyword_model(out(outputs::kKeywords)); });
        const auto s = splits();
        write_splits(s);
        const auto train_set = encode_frames(select_frames(dataset_, s.train), keywords);
        auto model = in_stage("train", [&] {
            auto tc = config_.training;
            tc.seed = config_.seed;
            return vadsk::train(train_set, tc);
        });
        io::write_file_atomic(out(outputs::kTrainEncodings), serialize_encodings(train_set, keywords.hash()));
        io::write_file_atomic(out(outputs::kClassifier), serialize(model));
        io::write_file_atomic(out(outputs::kFoldMetrics), format_fold_metrics(model));
        log("train: " + std::to_string(train_set.size()) + " frames, chosen fold " +
            std::to_string(model.chosen_fold) + " (val loss " +
            format_double(model.fold_metrics[model.chosen_fold].best_val_loss) + ")");
        return model;
    }

    EvalReport eval() {
        const auto [keywords, model] = load_models();
        const auto s = splits();
        write_splits(s);
        const auto frames = select_frames(dataset_, s.test);
        const auto test_set = encode_frames(frames, keywords);
        std::map<std::string_view, const FrameRecord*> by_id;
        for (const auto& f : frames) by_id.emplace(f.frame_id, &f);

        std::vector<ScoredFrame> scored;
        std::vector<Encoding> rows;
        std::string dump = "frame_id,video_id,label,score\n";
        for (const auto& le : test_set) {
            const double p = in_stage("eval", [&] { return predict(model, le.encoding); });
            const auto& frame = *by_id.at(le.encoding.frame_id);
            scored.push_back({frame.frame_id, frame.video_id, le.label, p});
            rows.push_back(le.encoding);
            dump += csv_field(frame.frame_id) + "," + csv_field(frame.video_id) + "," +
                    std::to_string(static_cast<int>(le.label)) + "," + format_double(p) + "\n";
        }
        auto report = in_stage("eval", [&] { return evaluate(scored, config_.threshold); });
        io::write_file_atomic(out(outputs::kEvalReport), serialize(report));
        io::write_file_atomic(out(outputs::kScores), dump);
        io::write_file_atomic(out(outputs::kTestEncodings), encodings_csv(rows, keywords));
        return report;
    }

    /// `frame` is a manifest frame id or a path to an image file.
    InferenceRecord infer(const std::string& frame) {
        FrameRecord record;
        if (const auto* known = dataset_.find(frame)) {
            record = *known;
        } else if (fs::is_regular_file(frame)) {
            record = {fs::path(frame).stem().string(), "", frame, Label::Normal};
        } else {
            throw Error(ErrorKind::MissingFile, "infer: '" + frame + "' is neither a manifest frame id nor a file");
        }
        const auto [keywords, model] = load_models();
        const auto description = in_stage("describe", [&] {
            DescriptionCache cache(config_.cache_dir);
            return describe_frame(record, config_.provider, *provider_, &cache);
        });
        InferenceRecord r;
        r.frame_id = record.frame_id;
        r.description = description.text;
        r.encoding = encode(description, keywords);
        r.probability = in_stage("infer", [&] { return predict(model, r.encoding); });
        r.threshold = config_.threshold;
        r.anomalous = r.probability > config_.threshold;
        for (auto j : r.encoding.present_terms) r.present_keywords.emplace_back(keywords.terms[j], keywords.weights[j]);

        const auto dir = out(outputs::kInferDir);
        io::write_file_atomic(dir / (r.frame_id + ".json"), to_json(r).dump(2) + "\n");
        io::write_file_atomic(dir / (r.frame_id + ".csv"), encodings_csv({r.encoding}, keywords));
        return r;
    }

    static nlohmann::ordered_json to_json(const InferenceRecord& r) {
        nlohmann::ordered_json j;
        j["frame_id"] = r.frame_id;
        j["probability"] = r.probability;
        j["threshold"] = r.threshold;
        j["decision"] = r.anomalous ? "anomalous" : "normal";
        j["description"] = r.description;
        auto present = nlohmann::ordered_json::array();
        for (const auto& [term, weight] : r.present_keywords) present.push_back({{"term", term}, {"weight", weight}});
        j["present_keywords"] = present;
        j["encoding"] = r.encoding.values;
        return j;
    }

private:
    void log(const std::string& line) const {
        if (log_) *log_ << line << '\n';
    }

    void write_splits(const SplitAssignment& s) const { io::write_file_atomic(out(outputs::kSplits), serialize(s)); }

    std::pair<KeywordModel, TrainedModel> load_models() const {
        return in_stage("load", [&] {
            auto keywords = load_keyword_model(out(outputs::kKeywords));
            auto model = load_trained_model(out(outputs::kClassifier));
            if (model.keyword_model_hash != keywords.hash())
                throw Error(ErrorKind::ModelEncodingMismatch, "classifier was trained against another keyword model");
            return std::pair{std::move(keywords), std::move(model)};
        });
    }

    /// `strict`: any failed frame aborts (induction needs every sample).
    BatchResult describe_frames(const std::vector<FrameRecord>& frames, bool strict) {
        auto result = in_stage("describe", [&] {
            DescriptionCache cache(config_.cache_dir);
            return batch_describe(frames, config_.provider, *provider_, &cache);
        });
        if (!result.failures.empty()) {
            const auto& first = result.failures.front();
            if (strict) throw Error(first.kind, "describe: " + first.message);
            log("describe: skipped " + std::to_string(result.failures.size()) + " of " +
                std::to_string(frames.size()) + " frames; first: " + first.message);
        }
        merge_into_store(result.records);
        return result;
    }

    void merge_into_store(const std::vector<DescriptionRecord>& records) const {
        const auto path = out(outputs::kDescriptions);
        std::map<std::string, DescriptionRecord> merged;
        if (fs::is_regular_file(path))
            for (auto& r : parse_descriptions(io::read_file(path))) merged[r.frame_id] = std::move(r);
        for (const auto& r : records) merged[r.frame_id] = r;
        std::vector<DescriptionRecord> ordered;
        for (const auto& f : dataset_.frames) {
            if (auto it = merged.find(f.frame_id); it != merged.end()) {
                ordered.push_back(std::move(it->second));
                merged.erase(it);
            }
        }
        for (auto& [_, r] : merged) ordered.push_back(std::move(r));
        io::write_file_atomic(path, serialize_descriptions(ordered));
    }

    std::vector<LabeledEncoding> encode_frames(const std::vector<FrameRecord>& frames, const KeywordModel& keywords) {
        const auto described = describe_frames(frames, false);
        std::map<std::string_view, Label> labels;
        for (const auto& f : frames) labels.emplace(f.frame_id, f.label);
        const auto hash = keywords.hash();
        std::vector<LabeledEncoding> out;
        out.reserve(described.records.size());
        for (const auto& d : described.records) out.push_back({encode(d, keywords, hash), labels.at(d.frame_id)});
        return out;
    }

    PipelineConfig config_;
    Dataset dataset_;
    std::shared_ptr<Provider> provider_;
    std::ostream* log_;
};

} // namespace vadsk
