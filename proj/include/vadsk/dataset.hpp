#pragma once

// Frame manifests, seeded induction sampling and train/test splitting.

#include "vadsk/common.hpp"
#include "vadsk/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace vadsk {

enum class Label : int { Normal = 0, Anomalous = 1 };

inline constexpr std::string_view to_string(Label l) noexcept {
    return l == Label::Normal ? "normal" : "anomalous";
}

struct FrameRecord {
    std::string frame_id;
    std::string video_id;
    std::filesystem::path path;
    Label label = Label::Normal;

    bool operator==(const FrameRecord&) const = default;
};

struct Dataset {
    std::string name;
    std::vector<FrameRecord> frames;
    std::optional<double> fps;

    const FrameRecord* find(std::string_view frame_id) const {
        for (const auto& f : frames)
            if (f.frame_id == frame_id) return &f;
        return nullptr;
    }

    std::size_t count(Label label) const {
        return static_cast<std::size_t>(
            std::count_if(frames.begin(), frames.end(), [&](const auto& f) { return f.label == label; }));
    }
};

/// Parses manifest text: `frame_id<TAB>video_id<TAB>path<TAB>label` per line,
/// `#` comments and blank lines skipped. Relative image paths are resolved
/// against `base_dir`.
inline Dataset parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {}) {
    Dataset ds;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 0;
    for (auto line : io::lines(text)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split(line, '\t');
        if (fields.size() != 4 || fields[0].empty() || fields[2].empty())
            throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line_no));
        Label label;
        if (fields[3] == "0") {
            label = Label::Normal;
        } else if (fields[3] == "1") {
            label = Label::Anomalous;
        } else {
            throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line_no));
        }
        std::string id(fields[0]);
        if (!seen.insert(id).second) throw Error(ErrorKind::DuplicateFrameId, id);
        std::filesystem::path p{std::string(fields[2])};
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        ds.frames.push_back({std::move(id), std::string(fields[1]), std::move(p), label});
    }
    return ds;
}

inline Dataset load_manifest(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw Error(ErrorKind::MissingFile, path.string());
    Dataset ds = parse_manifest(io::read_file(path), path.parent_path());
    ds.name = path.stem().string();
    return ds;
}

struct InductionSample {
    std::vector<FrameRecord> normal;
    std::vector<FrameRecord> anomalous;
};

namespace detail {

inline constexpr std::uint64_t kStreamInduction = 1;
inline constexpr std::uint64_t kStreamSplit = 2;

// Partial Fisher-Yates: the first n entries of a seeded shuffle.
inline std::vector<FrameRecord> draw_without_replacement(std::vector<FrameRecord> pool, std::size_t n,
                                                         Rng& rng) {
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

} // namespace detail

/// Draws exactly n frames of each label without replacement.
inline InductionSample sample_induction_frames(const Dataset& dataset, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error(ErrorKind::ConfigError, "induction sample count must be positive");
    std::vector<FrameRecord> normal, anomalous;
    for (const auto& f : dataset.frames) (f.label == Label::Normal ? normal : anomalous).push_back(f);
    for (auto [label, pool] : {std::pair{Label::Normal, &normal}, std::pair{Label::Anomalous, &anomalous}}) {
        if (pool->size() < n)
            throw Error(ErrorKind::InsufficientFrames, std::string(to_string(label)) + " have " +
                                                           std::to_string(pool->size()) + " need " +
                                                           std::to_string(n));
    }
    Rng rng(seed, detail::kStreamInduction);
    InductionSample out;
    out.normal = detail::draw_without_replacement(std::move(normal), n, rng);
    out.anomalous = detail::draw_without_replacement(std::move(anomalous), n, rng);
    return out;
}

/// Frame-id sets for one run. Ids within each list follow manifest order.
struct SplitAssignment {
    std::vector<std::string> induction_normal;
    std::vector<std::string> induction_anomalous;
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
    std::string prng = std::string(kPrngId);

    bool operator==(const SplitAssignment&) const = default;
};

/// floor(ratio * remaining) frames go to train; the 1e-9 slack absorbs
/// representation error such as 0.29 * 100 = 28.999999999999996.
inline std::size_t train_count(std::size_t remaining, double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(remaining) + 1e-9));
}

inline SplitAssignment make_splits(const Dataset& dataset, const std::set<std::string>& excluded, double ratio,
                                   std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw Error(ErrorKind::ConfigError, "split ratio must lie in (0, 1), got " + format_double(ratio));
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < dataset.frames.size(); ++i) position.emplace(dataset.frames[i].frame_id, i);
    for (const auto& id : excluded)
        if (!position.contains(id)) throw Error(ErrorKind::UnknownExcludedId, id);

    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < dataset.frames.size(); ++i)
        if (!excluded.contains(dataset.frames[i].frame_id)) pool.push_back(i);

    Rng rng(seed, detail::kStreamSplit);
    rng.shuffle(pool);
    const std::size_t n_train = train_count(pool.size(), ratio);
    std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::sort(pool.begin() + static_cast<std::ptrdiff_t>(n_train), pool.end());

    SplitAssignment out;
    out.seed = seed;
    for (std::size_t i = 0; i < pool.size(); ++i)
        (i < n_train ? out.train : out.test).push_back(dataset.frames[pool[i]].frame_id);
    return out;
}

/// Induction sampling followed by an exclusion-aware split: the full
/// assignment for one seed.
inline SplitAssignment plan_splits(const Dataset& dataset, std::size_t n, double ratio, std::uint64_t seed) {
    const auto sample = sample_induction_frames(dataset, n, seed);
    std::set<std::string> excluded;
    for (const auto& f : sample.normal) excluded.insert(f.frame_id);
    for (const auto& f : sample.anomalous) excluded.insert(f.frame_id);
    auto out = make_splits(dataset, excluded, ratio, seed);
    // Sampled order, not manifest order: it fixes the corpus concatenation order.
    for (const auto& f : sample.normal) out.induction_normal.push_back(f.frame_id);
    for (const auto& f : sample.anomalous) out.induction_anomalous.push_back(f.frame_id);
    return out;
}

inline std::string serialize(const SplitAssignment& s) {
    nlohmann::ordered_json j;
    j["format"] = "vadsk-splits/1";
    j["seed"] = s.seed;
    j["prng"] = s.prng;
    j["induction_normal"] = s.induction_normal;
    j["induction_anomalous"] = s.induction_anomalous;
    j["train"] = s.train;
    j["test"] = s.test;
    return j.dump(1) + "\n";
}

inline SplitAssignment parse_split_assignment(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        SplitAssignment s;
        s.seed = j.at("seed").get<std::uint64_t>();
        s.prng = j.at("prng").get<std::string>();
        s.induction_normal = j.at("induction_normal").get<std::vector<std::string>>();
        s.induction_anomalous = j.at("induction_anomalous").get<std::vector<std::string>>();
        s.train = j.at("train").get<std::vector<std::string>>();
        s.test = j.at("test").get<std::vector<std::string>>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedRecord, std::string("split file: ") + e.what());
    }
}

/// Looks up frames by id, preserving the order of `ids`.
inline std::vector<FrameRecord> select_frames(const Dataset& dataset, const std::vector<std::string>& ids) {
    std::unordered_map<std::string_view, const FrameRecord*> index;
    for (const auto& f : dataset.frames) index.emplace(f.frame_id, &f);
    std::vector<FrameRecord> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = index.find(id);
        if (it == index.end()) throw Error(ErrorKind::UnknownExcludedId, id);
        out.push_back(*it->second);
    }
    return out;
}

} // namespace vadsk
