#pragma once

// Frame-level ROC AUC (pooled and per-video) and thresholded counts.

#include "vadsk/common.hpp"
#include "vadsk/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace vadsk {

/// Mann-Whitney AUC: P(score_pos > score_neg) with ties counted as 1/2.
/// Average ranks over a sort, O(n log n). Twice the U statistic is an exact
/// integer, so the result matches pairwise counting bit for bit.
inline double auroc(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size())
        throw Error(ErrorKind::DimensionMismatch, std::to_string(scores.size()) + " scores vs " +
                                                      std::to_string(labels.size()) + " labels");
    for (double s : scores)
        if (std::isnan(s)) throw Error(ErrorKind::DomainError, "NaN score");
    const auto n = scores.size();
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l == Label::Anomalous;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::SingleClassError, "need both labels to compute AUROC");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

    // Sum of doubled 1-based average ranks of positives: a tie block covering
    // ranks [i+1, j] has doubled average rank (i + 1 + j).
    std::uint64_t doubled_rank_sum = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        std::size_t pos_in_block = 0;
        for (std::size_t t = i; t < j; ++t) pos_in_block += labels[order[t]] == Label::Anomalous;
        doubled_rank_sum += pos_in_block * (i + 1 + j);
        i = j;
    }
    const std::uint64_t doubled_u = doubled_rank_sum - static_cast<std::uint64_t>(n_pos) * (n_pos + 1);
    return static_cast<double>(doubled_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct VideoScores {
    std::vector<double> scores;
    std::vector<Label> labels;
};

struct MacroAuroc {
    double mean = 0.0;
    std::map<std::string, double> per_video;
    /// Videos without both labels; excluded from the mean.
    std::vector<std::string> skipped;
};

inline MacroAuroc auroc_macro(const std::map<std::string, VideoScores>& per_video) {
    MacroAuroc out;
    double sum = 0.0;
    for (const auto& [video, vs] : per_video) {
        const bool has_pos = std::find(vs.labels.begin(), vs.labels.end(), Label::Anomalous) != vs.labels.end();
        const bool has_neg = std::find(vs.labels.begin(), vs.labels.end(), Label::Normal) != vs.labels.end();
        if (!has_pos || !has_neg) {
            out.skipped.push_back(video);
            continue;
        }
        const double a = auroc(vs.scores, vs.labels);
        out.per_video.emplace(video, a);
        sum += a;
    }
    if (out.per_video.empty()) throw Error(ErrorKind::NoEligibleVideos, "no video contains both labels");
    out.mean = sum / static_cast<double>(out.per_video.size());
    return out;
}

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    bool operator==(const Confusion&) const = default;
};

/// A frame is flagged anomalous iff its score is strictly above `threshold`.
inline Confusion confusion_at(std::span<const double> scores, std::span<const Label> labels, double threshold) {
    if (scores.size() != labels.size()) throw Error(ErrorKind::DimensionMismatch, "scores/labels length");
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool flagged = scores[i] > threshold;
        const bool anomalous = labels[i] == Label::Anomalous;
        if (flagged && anomalous) ++c.tp;
        else if (flagged) ++c.fp;
        else if (anomalous) ++c.fn;
        else ++c.tn;
    }
    return c;
}

struct EvalReport {
    double auroc_micro = 0.0;
    std::optional<double> auroc_macro;
    std::map<std::string, double> per_video_auroc;
    std::vector<std::string> skipped_videos;
    double threshold = 0.5;
    Confusion confusion;
    std::size_t n_frames = 0;
};

struct ScoredFrame {
    std::string frame_id;
    std::string video_id;
    Label label = Label::Normal;
    double score = 0.0;
};

/// Micro AUROC over all frames; macro AUROC when at least one video holds
/// both labels.
inline EvalReport evaluate(const std::vector<ScoredFrame>& frames, double threshold) {
    std::vector<double> scores;
    std::vector<Label> labels;
    std::map<std::string, VideoScores> per_video;
    for (const auto& f : frames) {
        scores.push_back(f.score);
        labels.push_back(f.label);
        auto& vs = per_video[f.video_id];
        vs.scores.push_back(f.score);
        vs.labels.push_back(f.label);
    }
    EvalReport r;
    r.auroc_micro = auroc(scores, labels);
    try {
        auto macro = auroc_macro(per_video);
        r.auroc_macro = macro.mean;
        r.per_video_auroc = std::move(macro.per_video);
        r.skipped_videos = std::move(macro.skipped);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoEligibleVideos) throw;
        for (const auto& [v, _] : per_video) r.skipped_videos.push_back(v);
    }
    r.threshold = threshold;
    r.confusion = confusion_at(scores, labels, threshold);
    r.n_frames = frames.size();
    return r;
}

inline std::string serialize(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["format"] = "vadsk-eval/1";
    j["n_frames"] = r.n_frames;
    j["auroc_micro"] = r.auroc_micro;
    j["auroc_macro"] = r.auroc_macro ? nlohmann::ordered_json(*r.auroc_macro) : nlohmann::ordered_json(nullptr);
    j["per_video_auroc"] = r.per_video_auroc;
    j["skipped_videos"] = r.skipped_videos;
    j["threshold"] = r.threshold;
    j["tp"] = r.confusion.tp;
    j["fp"] = r.confusion.fp;
    j["tn"] = r.confusion.tn;
    j["fn"] = r.confusion.fn;
    return j.dump(2) + "\n";
}

inline EvalReport parse_eval_report(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        EvalReport r;
        r.n_frames = j.at("n_frames").get<std::size_t>();
        r.auroc_micro = j.at("auroc_micro").get<double>();
        if (!j.at("auroc_macro").is_null()) r.auroc_macro = j.at("auroc_macro").get<double>();
        r.per_video_auroc = j.at("per_video_auroc").get<std::map<std::string, double>>();
        r.skipped_videos = j.at("skipped_videos").get<std::vector<std::string>>();
        r.threshold = j.at("threshold").get<double>();
        r.confusion = {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("tn").get<std::size_t>(),
                       j.at("fn").get<std::size_t>()};
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedRecord, std::string("eval report: ") + e.what());
    }
}

/// Fixed-order human-readable summary.
inline std::string format_summary(const EvalReport& r) {
    auto pct = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    std::string out;
    out += "frames          " + std::to_string(r.n_frames) + "\n";
    out += "auroc (micro)   " + pct(r.auroc_micro) + "\n";
    out += "auroc (macro)   " + (r.auroc_macro ? pct(*r.auroc_macro) : std::string("n/a")) + "\n";
    out += "videos scored   " + std::to_string(r.per_video_auroc.size()) + " (skipped " +
           std::to_string(r.skipped_videos.size()) + ")\n";
    out += "threshold       " + pct(r.threshold) + "\n";
    out += "tp fp tn fn     " + std::to_string(r.confusion.tp) + " " + std::to_string(r.confusion.fp) + " " +
           std::to_string(r.confusion.tn) + " " + std::to_string(r.confusion.fn) + "\n";
    for (const auto& [video, a] : r.per_video_auroc) out += "  " + video + "\t" + pct(a) + "\n";
    return out;
}

} // namespace vadsk
