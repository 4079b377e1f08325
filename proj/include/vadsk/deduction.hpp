#pragma once

#include "vadsk/common.hpp"
#include "vadsk/dataset.hpp"
#include "vadsk/describer.hpp"
#include "vadsk/induction.hpp"
#include "vadsk/io.hpp"
#include "vadsk/text.hpp"

#include <string>
#include <unordered_set>
#include <vector>

namespace vadsk {

/// Presence-weighted keyword vector for one frame: values[j] is the keyword
/// weight when keyword j occurs in the description, 0 otherwise.
struct Encoding {
    std::string frame_id;
    std::vector<double> values;
    /// Indices of keywords found in the description, ascending.
    std::vector<std::size_t> present_terms;
    std::uint64_t keyword_model_hash = 0;

    bool operator==(const Encoding&) const = default;
};

/// Encoding from an already computed model hash; avoids re-serializing the
/// model for each frame of a batch.
inline Encoding encode(const DescriptionRecord& description, const KeywordModel& model, std::uint64_t model_hash) {
    const auto tokens = tokenize(description.text);
    const std::unordered_set<std::string> present(tokens.begin(), tokens.end());
    Encoding e{description.frame_id, std::vector<double>(model.k(), 0.0), {}, model_hash};
    for (std::size_t j = 0; j < model.k(); ++j) {
        if (present.contains(model.terms[j])) {
            e.values[j] = model.weights[j];
            e.present_terms.push_back(j);
        }
    }
    return e;
}

inline Encoding encode(const DescriptionRecord& description, const KeywordModel& model) {
    return encode(description, model, model.hash());
}

struct LabeledEncoding {
    Encoding encoding;
    Label label = Label::Normal;
};

// ---------------------------------------------------------------------------
// Encoding batch file: a `# keyword_model_hash <hex>` line, then
// `frame_id<TAB>label<TAB>v1,v2,...,vk` per frame.

inline std::string serialize_encodings(const std::vector<LabeledEncoding>& batch, std::uint64_t model_hash) {
    std::string out = "# keyword_model_hash " + to_hex(model_hash) + "\n";
    for (const auto& le : batch) {
        out += le.encoding.frame_id;
        out += '\t';
        out += std::to_string(static_cast<int>(le.label));
        out += '\t';
        for (std::size_t j = 0; j < le.encoding.values.size(); ++j) {
            if (j) out += ',';
            out += format_double(le.encoding.values[j]);
        }
        out += '\n';
    }
    return out;
}

inline std::vector<LabeledEncoding> parse_encodings(std::string_view text) {
    std::vector<LabeledEncoding> out;
    std::uint64_t hash = 0;
    std::size_t line_no = 0;
    auto malformed = [&] { return Error(ErrorKind::MalformedRecord, "encoding line " + std::to_string(line_no)); };
    for (auto line : io::lines(text)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '#') {
            constexpr std::string_view tag = "# keyword_model_hash ";
            if (line.starts_with(tag)) {
                auto h = parse_hex64(line.substr(tag.size()));
                if (!h) throw malformed();
                hash = *h;
            }
            continue;
        }
        const auto fields = split(line, '\t');
        if (fields.size() != 3 || (fields[1] != "0" && fields[1] != "1")) throw malformed();
        LabeledEncoding le;
        le.encoding.frame_id = std::string(fields[0]);
        le.encoding.keyword_model_hash = hash;
        le.label = fields[1] == "1" ? Label::Anomalous : Label::Normal;
        if (!fields[2].empty()) {
            for (auto v : split(fields[2], ',')) {
                auto d = parse_double(v);
                if (!d) throw malformed();
                if (*d != 0.0) le.encoding.present_terms.push_back(le.encoding.values.size());
                le.encoding.values.push_back(*d);
            }
        }
        out.push_back(std::move(le));
    }
    return out;
}

/// Heatmap matrix: header `frame_id,<term1>,...,<termk>` then one row per frame.
inline std::string encodings_csv(const std::vector<Encoding>& rows, const KeywordModel& model) {
    std::string out = "frame_id";
    for (const auto& t : model.terms) out += "," + t;
    out += '\n';
    for (const auto& e : rows) {
        out += e.frame_id;
        for (double v : e.values) out += "," + format_double(v);
        out += '\n';
    }
    return out;
}

} // namespace vadsk
