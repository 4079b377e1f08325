#pragma once

#include <charconv>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace vadsk {

enum class ErrorKind {
    // configuration
    ConfigError,
    // data / input
    MissingFile,
    MalformedRecord,
    DuplicateFrameId,
    InsufficientFrames,
    UnknownExcludedId,
    ImageReadError,
    EmptyDescriptionSet,
    EmptyVocabulary,
    EmptyDocument,
    DivisionByZeroDocFreq,
    DimensionMismatch,
    ModelEncodingMismatch,
    InsufficientSamples,
    SingleClassError,
    NoEligibleVideos,
    // provider
    ProviderUnreachable,
    ProviderRejected,
    EmptyResponse,
    AllFailed,
    // degenerate math
    ZeroDifferenceVector,
    DegenerateLabels,
    DomainError,
};

inline constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::DuplicateFrameId: return "DuplicateFrameId";
    case ErrorKind::InsufficientFrames: return "InsufficientFrames";
    case ErrorKind::UnknownExcludedId: return "UnknownExcludedId";
    case ErrorKind::ImageReadError: return "ImageReadError";
    case ErrorKind::EmptyDescriptionSet: return "EmptyDescriptionSet";
    case ErrorKind::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorKind::EmptyDocument: return "EmptyDocument";
    case ErrorKind::DivisionByZeroDocFreq: return "DivisionByZeroDocFreq";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ModelEncodingMismatch: return "ModelEncodingMismatch";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::SingleClassError: return "SingleClassError";
    case ErrorKind::NoEligibleVideos: return "NoEligibleVideos";
    case ErrorKind::ProviderUnreachable: return "ProviderUnreachable";
    case ErrorKind::ProviderRejected: return "ProviderRejected";
    case ErrorKind::EmptyResponse: return "EmptyResponse";
    case ErrorKind::AllFailed: return "AllFailed";
    case ErrorKind::ZeroDifferenceVector: return "ZeroDifferenceVector";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::DomainError: return "DomainError";
    }
    return "Unknown";
}

/// Process exit code for an error category:
/// 1 config, 2 data, 3 provider, 4 degenerate math.
inline constexpr int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::ConfigError:
        return 1;
    case ErrorKind::ProviderUnreachable:
    case ErrorKind::ProviderRejected:
    case ErrorKind::EmptyResponse:
    case ErrorKind::AllFailed:
        return 3;
    case ErrorKind::ZeroDifferenceVector:
    case ErrorKind::DegenerateLabels:
    case ErrorKind::DomainError:
        return 4;
    default:
        return 2;
    }
}

/// Every failure raised by the library. `detail()` holds the raw payload
/// (an offending id, a line number) without the formatted prefix.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
          kind_(kind), detail_(std::move(detail)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

// ---------------------------------------------------------------------------
// Hashing

/// 64-bit FNV-1a. Stable across platforms; used for content addressing.
inline constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                       std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

inline std::optional<std::uint64_t> parse_hex64(std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

// ---------------------------------------------------------------------------
// Seeded randomness
//
// std::mt19937_64 is bit-specified by the standard, but the std
// distributions and std::shuffle are not, so bounded draws and shuffles are
// done here by hand to keep results identical across standard libraries.

inline constexpr std::string_view kPrngId = "mt19937_64+splitmix64-streams+fisher-yates/v1";

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    /// Independent streams for one user seed, e.g. sampling vs splitting.
    Rng(std::uint64_t seed, std::uint64_t stream)
        : engine_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % bound;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Number formatting

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
    Int v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace vadsk
