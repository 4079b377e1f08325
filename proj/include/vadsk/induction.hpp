#pragma once

// Two-document TF-IDF over a normal and an anomalous description corpus,
// reduced to one unit-length keyword weight vector.
//
//   tf(t, d)    = count(t in d) / |d|
//   idf(t)      = ln(2 / df(t)),  df(t) in {1, 2}
//   w           = (tfidf(anomalous) - tfidf(normal)) / ||.||_2
//
// Positive weights mark terms seen only in anomalous descriptions, negative
// ones terms seen only in normal descriptions. Shared terms have idf 0.

#include "vadsk/common.hpp"
#include "vadsk/describer.hpp"
#include "vadsk/io.hpp"
#include "vadsk/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace vadsk {

/// Document-frequency bound: a fraction of the two documents, or an
/// absolute document count.
struct DfBound {
    double value = 0.0;
    bool fraction = true;

    static DfBound parse(std::string_view s) {
        const bool frac = s.find_first_of(".eE") != std::string_view::npos;
        if (frac) {
            auto v = parse_double(s);
            if (!v) throw Error(ErrorKind::ConfigError, "bad document-frequency bound '" + std::string(s) + "'");
            return {*v, true};
        }
        auto v = parse_int<long>(s);
        if (!v) throw Error(ErrorKind::ConfigError, "bad document-frequency bound '" + std::string(s) + "'");
        return {static_cast<double>(*v), false};
    }

    std::string str() const {
        if (!fraction) return std::to_string(static_cast<long>(value));
        auto s = format_double(value);
        if (s.find_first_of(".e") == std::string::npos) s += ".0";
        return s;
    }

    bool operator==(const DfBound&) const = default;
};

enum class TfidfVariant { Plain, Smoothed };

inline std::string_view to_string(TfidfVariant v) { return v == TfidfVariant::Plain ? "plain" : "smoothed"; }

inline TfidfVariant parse_variant(std::string_view s) {
    if (s == "plain") return TfidfVariant::Plain;
    if (s == "smoothed") return TfidfVariant::Smoothed;
    throw Error(ErrorKind::ConfigError, "unknown tfidf variant '" + std::string(s) + "'");
}

struct VectorizerConfig {
    std::size_t max_features = 100;
    DfBound min_df{0.0, true};
    DfBound max_df{1.0, true};
    int ngram_n = 1;
    std::string stop_words = "english";
    std::string log_base = "e";
    TfidfVariant variant = TfidfVariant::Plain;

    bool operator==(const VectorizerConfig&) const = default;

    const StopWords& stop_list() const { return StopWords::by_name(stop_words); }

    /// Inclusive [min, max] document-count window over the two documents.
    std::pair<int, int> df_window() const {
        const int lo = min_df.fraction ? static_cast<int>(std::ceil(min_df.value * 2.0)) : static_cast<int>(min_df.value);
        const int hi = max_df.fraction ? static_cast<int>(std::floor(max_df.value * 2.0)) : static_cast<int>(max_df.value);
        return {lo, hi};
    }

    void validate() const {
        if (max_features == 0) throw Error(ErrorKind::ConfigError, "max_features must be positive");
        if (ngram_n != 1) throw Error(ErrorKind::ConfigError, "only unigrams are supported (ngram_n = 1)");
        if (log_base != "e") throw Error(ErrorKind::ConfigError, "log_base must be 'e'");
        for (const auto* b : {&min_df, &max_df}) {
            if (b->fraction && !(b->value >= 0.0 && b->value <= 1.0))
                throw Error(ErrorKind::ConfigError, "fractional df bound outside [0, 1]: " + b->str());
            if (!b->fraction && b->value < 0)
                throw Error(ErrorKind::ConfigError, "negative df count: " + b->str());
        }
        const auto [lo, hi] = df_window();
        if (lo > hi) throw Error(ErrorKind::ConfigError, "min_df exceeds max_df");
        (void)stop_list();
    }
};

struct Corpus {
    static constexpr std::size_t N = 2;
    std::string doc_normal;
    std::string doc_anomalous;
};

inline Corpus build_corpus(const std::vector<DescriptionRecord>& normal,
                           const std::vector<DescriptionRecord>& anomalous) {
    if (normal.empty()) throw Error(ErrorKind::EmptyDescriptionSet, "normal");
    if (anomalous.empty()) throw Error(ErrorKind::EmptyDescriptionSet, "anomalous");
    auto join = [](const std::vector<DescriptionRecord>& rs) {
        std::string out;
        for (std::size_t i = 0; i < rs.size(); ++i) {
            if (i) out += ' ';
            out += rs[i].text;
        }
        return out;
    };
    return {join(normal), join(anomalous)};
}

/// Token lists per document (0 = normal, 1 = anomalous), stop words removed.
using DocumentTokens = std::array<std::vector<std::string>, 2>;

inline DocumentTokens corpus_tokens(const Corpus& corpus, const StopWords& stop) {
    return {stop.filter(tokenize(corpus.doc_normal)), stop.filter(tokenize(corpus.doc_anomalous))};
}

namespace detail {

struct TermStats {
    std::array<std::size_t, 2> count{};
    std::size_t total() const { return count[0] + count[1]; }
    int df() const { return (count[0] > 0) + (count[1] > 0); }
};

inline std::map<std::string, TermStats> term_stats(const DocumentTokens& docs) {
    std::map<std::string, TermStats> stats;
    for (std::size_t d = 0; d < 2; ++d)
        for (const auto& t : docs[d]) ++stats[t].count[d];
    return stats;
}

} // namespace detail

/// Keyword candidates: df-window filtering, top-k by total count
/// (ties lexicographic), returned in lexicographic order.
inline std::vector<std::string> build_vocabulary(const Corpus& corpus, const VectorizerConfig& config) {
    config.validate();
    const auto stats = detail::term_stats(corpus_tokens(corpus, config.stop_list()));
    const auto [lo, hi] = config.df_window();

    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (const auto& [term, s] : stats)
        if (s.df() >= lo && s.df() <= hi) ranked.emplace_back(term, s.total());
    if (ranked.empty()) throw Error(ErrorKind::EmptyVocabulary, "every term was filtered out");

    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > config.max_features) ranked.resize(config.max_features);

    std::vector<std::string> terms;
    terms.reserve(ranked.size());
    for (auto& r : ranked) terms.push_back(std::move(r.first));
    std::sort(terms.begin(), terms.end());
    return terms;
}

inline double tf(std::string_view term, std::span<const std::string> doc_tokens) {
    if (doc_tokens.empty()) throw Error(ErrorKind::EmptyDocument, std::string(term));
    const auto n = std::count(doc_tokens.begin(), doc_tokens.end(), term);
    return static_cast<double>(n) / static_cast<double>(doc_tokens.size());
}

inline double idf(std::string_view term, const DocumentTokens& docs) {
    int df = 0;
    for (const auto& d : docs) df += std::find(d.begin(), d.end(), term) != d.end();
    if (df == 0) throw Error(ErrorKind::DivisionByZeroDocFreq, std::string(term));
    return std::log(static_cast<double>(Corpus::N) / df);
}

struct TfidfMatrix {
    std::vector<std::string> terms;
    /// scores[0] = normal document, scores[1] = anomalous document.
    std::array<std::vector<double>, 2> scores;

    std::size_t k() const { return terms.size(); }
};

/// Scores every vocabulary term in both documents. The tf denominator is
/// the document's full stop-word-free token count, not just vocabulary hits.
inline TfidfMatrix tfidf_matrix(const Corpus& corpus, const std::vector<std::string>& terms,
                                const VectorizerConfig& config = {}) {
    const auto docs = corpus_tokens(corpus, config.stop_list());
    for (std::size_t d = 0; d < 2; ++d)
        if (docs[d].empty()) throw Error(ErrorKind::EmptyDocument, d == 0 ? "normal" : "anomalous");
    const auto stats = detail::term_stats(docs);

    TfidfMatrix m;
    m.terms = terms;
    for (auto& row : m.scores) row.assign(terms.size(), 0.0);
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const auto it = stats.find(terms[j]);
        if (it == stats.end()) throw Error(ErrorKind::DivisionByZeroDocFreq, terms[j]);
        const auto& s = it->second;
        const double df = s.df();
        const double inverse = config.variant == TfidfVariant::Plain ? std::log(static_cast<double>(Corpus::N) / df)
                                                                     : std::log((1.0 + Corpus::N) / (1.0 + df)) + 1.0;
        for (std::size_t d = 0; d < 2; ++d)
            m.scores[d][j] = static_cast<double>(s.count[d]) / static_cast<double>(docs[d].size()) * inverse;
    }
    if (config.variant == TfidfVariant::Smoothed) {
        for (auto& row : m.scores) {
            double norm = 0.0;
            for (double v : row) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > 0.0)
                for (double& v : row) v /= norm;
        }
    }
    return m;
}

struct Provenance {
    std::string dataset;
    std::uint64_t seed = 0;
    std::string model_id;

    bool operator==(const Provenance&) const = default;
};

struct KeywordModel {
    std::vector<std::string> terms;
    std::vector<double> weights;
    VectorizerConfig vectorizer;
    Provenance provenance;

    std::size_t k() const { return terms.size(); }

    /// Content hash of the serialized model; binds classifiers and encodings to it.
    std::uint64_t hash() const;

    bool operator==(const KeywordModel&) const = default;
};

/// Unit-normalized difference of the anomalous and normal rows.
inline KeywordModel derive_keyword_weights(const TfidfMatrix& matrix, const VectorizerConfig& config = {},
                                           Provenance provenance = {}) {
    const std::size_t k = matrix.k();
    if (matrix.scores[0].size() != k || matrix.scores[1].size() != k)
        throw Error(ErrorKind::DimensionMismatch, "tf-idf rows do not match term count");
    std::vector<double> diff(k);
    double norm = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        diff[j] = matrix.scores[1][j] - matrix.scores[0][j];
        norm += diff[j] * diff[j];
    }
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw Error(ErrorKind::ZeroDifferenceVector, "normal and anomalous tf-idf rows coincide");
    for (double& v : diff) v /= norm;
    return {matrix.terms, std::move(diff), config, std::move(provenance)};
}

/// build_corpus -> build_vocabulary -> tfidf_matrix -> derive_keyword_weights.
inline KeywordModel induce_keywords(const std::vector<DescriptionRecord>& normal,
                                    const std::vector<DescriptionRecord>& anomalous, const VectorizerConfig& config,
                                    Provenance provenance = {}) {
    const Corpus corpus = build_corpus(normal, anomalous);
    const auto terms = build_vocabulary(corpus, config);
    return derive_keyword_weights(tfidf_matrix(corpus, terms, config), config, std::move(provenance));
}

// ---------------------------------------------------------------------------
// Keyword model file: `key<TAB>value` header, a `keywords<TAB>k` line, then
// k lines of `term<TAB>weight` in vocabulary order.

inline std::string serialize(const KeywordModel& m) {
    const auto& stop = m.vectorizer.stop_list();
    std::string out = "# vadsk keyword model\n";
    auto kv = [&](std::string_view key, const std::string& value) {
        out.append(key).append("\t").append(value).append("\n");
    };
    kv("format", "vadsk-keywords/1");
    kv("dataset", m.provenance.dataset);
    kv("seed", std::to_string(m.provenance.seed));
    kv("model_id", m.provenance.model_id);
    kv("max_features", std::to_string(m.vectorizer.max_features));
    kv("min_df", m.vectorizer.min_df.str());
    kv("max_df", m.vectorizer.max_df.str());
    kv("ngram_n", std::to_string(m.vectorizer.ngram_n));
    kv("stop_words", stop.name());
    kv("stop_words_hash", to_hex(stop.hash()));
    kv("log_base", m.vectorizer.log_base);
    kv("variant", std::string(to_string(m.vectorizer.variant)));
    kv("keywords", std::to_string(m.k()));
    for (std::size_t j = 0; j < m.k(); ++j) kv(m.terms[j], format_double(m.weights[j]));
    return out;
}

inline std::uint64_t KeywordModel::hash() const { return fnv1a64(serialize(*this)); }

inline KeywordModel parse_keyword_model(std::string_view text) {
    KeywordModel m;
    std::map<std::string, std::string, std::less<>> header;
    std::optional<std::size_t> k;
    std::size_t line_no = 0;
    auto malformed = [&](const std::string& why) {
        return Error(ErrorKind::MalformedRecord, "keyword model line " + std::to_string(line_no) + ": " + why);
    };
    for (auto line : io::lines(text)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) throw malformed("expected key<TAB>value");
        const auto key = line.substr(0, tab);
        const auto value = line.substr(tab + 1);
        if (!k) {
            if (key == "keywords") {
                k = parse_int<std::size_t>(value);
                if (!k) throw malformed("bad keyword count");
            } else {
                header.emplace(std::string(key), std::string(value));
            }
            continue;
        }
        const auto w = parse_double(value);
        if (!w) throw malformed("bad weight");
        m.terms.emplace_back(key);
        m.weights.push_back(*w);
    }
    if (!k || m.terms.size() != *k) throw Error(ErrorKind::MalformedRecord, "keyword model: keyword count mismatch");
    auto get = [&](std::string_view key) -> const std::string& {
        auto it = header.find(key);
        if (it == header.end()) throw Error(ErrorKind::MalformedRecord, "keyword model: missing " + std::string(key));
        return it->second;
    };
    if (get("format") != "vadsk-keywords/1") throw Error(ErrorKind::MalformedRecord, "keyword model: unknown format");
    m.provenance.dataset = get("dataset");
    m.provenance.model_id = get("model_id");
    const auto seed = parse_int<std::uint64_t>(get("seed"));
    const auto max_features = parse_int<std::size_t>(get("max_features"));
    const auto ngram = parse_int<int>(get("ngram_n"));
    if (!seed || !max_features || !ngram) throw Error(ErrorKind::MalformedRecord, "keyword model: bad header number");
    m.provenance.seed = *seed;
    m.vectorizer.max_features = *max_features;
    m.vectorizer.ngram_n = *ngram;
    try {
        m.vectorizer.min_df = DfBound::parse(get("min_df"));
        m.vectorizer.max_df = DfBound::parse(get("max_df"));
        m.vectorizer.variant = parse_variant(get("variant"));
        m.vectorizer.stop_words = get("stop_words");
        const auto& stop = m.vectorizer.stop_list();
        if (to_hex(stop.hash()) != get("stop_words_hash"))
            throw Error(ErrorKind::MalformedRecord, "keyword model: stop-word list hash differs from this build");
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigError) throw Error(ErrorKind::MalformedRecord, e.detail());
        throw;
    }
    m.vectorizer.log_base = get("log_base");
    return m;
}

inline KeywordModel load_keyword_model(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw Error(ErrorKind::MissingFile, path.string());
    return parse_keyword_model(io::read_file(path));
}

/// Keywords by decreasing |weight|, with the side each one indicates.
inline std::string format_keyword_listing(const KeywordModel& m, std::size_t limit = 0) {
    std::vector<std::size_t> order(m.k());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return std::abs(m.weights[a]) > std::abs(m.weights[b]); });
    if (limit > 0 && order.size() > limit) order.resize(limit);
    std::string out = "rank\tterm\tweight\tside\n";
    std::size_t rank = 0;
    for (auto j : order) {
        const double w = m.weights[j];
        const char* side = w > 0 ? "anomalous" : (w < 0 ? "normal" : "neutral");
        out += std::to_string(++rank) + "\t" + m.terms[j] + "\t" + format_double(w) + "\t" + side + "\n";
    }
    return out;
}

} // namespace vadsk
