#pragma once

// Tokenizer and stop-word lists shared by induction and deduction.

#include "vadsk/common.hpp"
#include "vadsk/stop_words_en.hpp"

#include <algorithm>
#include <locale>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vadsk {

namespace detail {

// Letter/digit classification and lowercasing for non-ASCII code points.
// Falls back to the classic locale (ASCII only) when no UTF-8 locale exists.
inline const std::ctype<wchar_t>& unicode_ctype() {
    static const std::locale loc = [] {
        for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
            try {
                return std::locale(name);
            } catch (const std::runtime_error&) {
            }
        }
        return std::locale::classic();
    }();
    return std::use_facet<std::ctype<wchar_t>>(loc);
}

inline constexpr char32_t kInvalid = 0xFFFD;

// Decodes one code point at s[i] and advances i. Malformed input yields U+FFFD.
inline char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i++]);
    if (b0 < 0x80) return b0;
    int extra;
    char32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
        extra = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        extra = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        extra = 3;
        cp = b0 & 0x07;
    } else {
        return kInvalid;
    }
    for (int k = 0; k < extra; ++k) {
        if (i >= s.size()) return kInvalid;
        const auto b = static_cast<unsigned char>(s[i]);
        if ((b & 0xC0) != 0x80) return kInvalid;
        cp = (cp << 6) | (b & 0x3F);
        ++i;
    }
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline bool is_alnum(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    if (cp == kInvalid) return false;
    return unicode_ctype().is(std::ctype_base::alnum, static_cast<wchar_t>(cp));
}

inline char32_t to_lower(char32_t cp) {
    if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    return static_cast<char32_t>(unicode_ctype().tolower(static_cast<wchar_t>(cp)));
}

} // namespace detail

/// Lowercased maximal runs of at least two letters/digits, in input order.
/// Everything else, including '_', separates tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t run_length = 0;
    auto flush = [&] {
        if (run_length >= 2) tokens.push_back(current);
        current.clear();
        run_length = 0;
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const char32_t cp = detail::next_code_point(text, i);
        if (detail::is_alnum(cp)) {
            detail::append_utf8(current, detail::to_lower(cp));
            ++run_length;
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

/// A named, content-hashed stop-word list.
class StopWords {
public:
    static const StopWords& english() {
        static const StopWords list("english", {detail::kEnglishStopWords.begin(), detail::kEnglishStopWords.end()});
        return list;
    }

    static const StopWords& none() {
        static const StopWords list("none", {});
        return list;
    }

    /// Resolves a list id as written in configs and model headers.
    static const StopWords& by_name(std::string_view name) {
        if (name == "english") return english();
        if (name == "none") return none();
        throw Error(ErrorKind::ConfigError, "unknown stop-word list '" + std::string(name) + "'");
    }

    const std::string& name() const noexcept { return name_; }
    std::uint64_t hash() const noexcept { return hash_; }
    std::size_t size() const noexcept { return words_.size(); }

    bool contains(std::string_view word) const {
        return std::binary_search(words_.begin(), words_.end(), word);
    }

    std::vector<std::string> filter(std::vector<std::string> tokens) const {
        std::erase_if(tokens, [&](const std::string& t) { return contains(t); });
        return tokens;
    }

private:
    StopWords(std::string name, std::vector<std::string_view> words) : name_(std::move(name)), words_(std::move(words)) {
        std::sort(words_.begin(), words_.end());
        for (auto w : words_) {
            hash_ = fnv1a64(w, hash_);
            hash_ = fnv1a64("\n", hash_);
        }
    }

    std::string name_;
    std::vector<std::string_view> words_;
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

} // namespace vadsk
