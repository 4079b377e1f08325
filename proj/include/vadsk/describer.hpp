#pragma once

// Frame -> text description through a pluggable vision-language provider.
//
// Providers: HttpProvider talks to an OpenAI-compatible chat-completions
// endpoint; StubProvider answers from an in-memory map. DescriptionCache is a
// content-addressed directory that makes repeated requests free.

#include "vadsk/common.hpp"
#include "vadsk/dataset.hpp"
#include "vadsk/io.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace vadsk {

inline constexpr std::string_view kDefaultPrompt =
    "You are a surveillance monitor for urban safety. Describe the activities and objects present in this scene.";

inline constexpr std::string_view kApiKeyEnv = "VADSK_API_KEY";

struct DescriptionRecord {
    std::string frame_id;
    std::string text;
    std::string model_id;
    std::uint64_t prompt_hash = 0;
    std::string created_at;
    /// Whatever the server reported alongside the text (served model name,
    /// finish reason, token usage). Empty for stubs.
    std::map<std::string, std::string> metadata;

    bool operator==(const DescriptionRecord&) const = default;
};

struct ProviderConfig {
    std::string endpoint_url = "http://127.0.0.1:8000";
    std::string model_id = "llama-3.2-11b-vision";
    std::string prompt = std::string(kDefaultPrompt);
    double timeout_seconds = 120.0;
    int max_retries = 3;
    int max_concurrency = 4;
    /// First backoff delay; doubles after each failed attempt.
    double retry_backoff_seconds = 1.0;
    std::string api_key;

    std::uint64_t prompt_hash() const { return fnv1a64(prompt); }
};

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// Images

struct FrameImage {
    std::string bytes;
    std::string mime;

    std::uint64_t content_hash() const { return fnv1a64(bytes); }
};

/// Sniffs JPEG/PNG/TIFF by signature; anything else is an ImageReadError.
inline std::optional<std::string> image_mime_type(std::string_view bytes) {
    if (bytes.size() >= 3 && bytes.substr(0, 3) == "\xFF\xD8\xFF") return "image/jpeg";
    if (bytes.size() >= 8 && bytes.substr(0, 8) == "\x89PNG\r\n\x1A\n") return "image/png";
    if (bytes.size() >= 4 &&
        (bytes.substr(0, 4) == std::string_view("II*\0", 4) || bytes.substr(0, 4) == std::string_view("MM\0*", 4)))
        return "image/tiff";
    return std::nullopt;
}

inline FrameImage read_frame_image(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw Error(ErrorKind::ImageReadError, path.string());
    std::string bytes;
    try {
        bytes = io::read_file(path);
    } catch (const Error&) {
        throw Error(ErrorKind::ImageReadError, path.string());
    }
    auto mime = image_mime_type(bytes);
    if (!mime) throw Error(ErrorKind::ImageReadError, path.string() + " (unsupported image format)");
    return {std::move(bytes), std::move(*mime)};
}

inline std::string base64_encode(std::string_view in) {
    static constexpr char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < in.size(); i += 3) {
        const std::uint32_t n = (static_cast<unsigned char>(in[i]) << 16) |
                                (static_cast<unsigned char>(in[i + 1]) << 8) | static_cast<unsigned char>(in[i + 2]);
        out += table[(n >> 18) & 63];
        out += table[(n >> 12) & 63];
        out += table[(n >> 6) & 63];
        out += table[n & 63];
    }
    if (const auto rest = in.size() - i; rest > 0) {
        std::uint32_t n = static_cast<unsigned char>(in[i]) << 16;
        if (rest == 2) n |= static_cast<unsigned char>(in[i + 1]) << 8;
        out += table[(n >> 18) & 63];
        out += table[(n >> 12) & 63];
        out += rest == 2 ? table[(n >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Providers

struct ProviderReply {
    std::string text;
    std::map<std::string, std::string> metadata;
};

/// Implementations must be safe to call from several threads at once.
class Provider {
public:
    virtual ~Provider() = default;
    virtual ProviderReply complete(const FrameRecord& frame, const FrameImage& image,
                                   const ProviderConfig& config) = 0;
    /// Outbound requests issued so far, including retries.
    virtual std::size_t request_count() const = 0;
};

class StubProvider final : public Provider {
public:
    explicit StubProvider(std::map<std::string, std::string> replies) : replies_(std::move(replies)) {}

    /// Reads `frame_id<TAB>text` lines; `#` starts a comment line.
    static std::shared_ptr<StubProvider> from_file(const std::filesystem::path& path) {
        if (!std::filesystem::is_regular_file(path)) throw Error(ErrorKind::MissingFile, path.string());
        std::map<std::string, std::string> replies;
        std::size_t line_no = 0;
        const std::string text = io::read_file(path);
        for (auto line : io::lines(text)) {
            ++line_no;
            if (line.empty() || line.front() == '#') continue;
            const auto tab = line.find('\t');
            if (tab == std::string_view::npos || tab == 0)
                throw Error(ErrorKind::MalformedRecord, path.string() + " line " + std::to_string(line_no));
            replies[std::string(line.substr(0, tab))] = std::string(line.substr(tab + 1));
        }
        return std::make_shared<StubProvider>(std::move(replies));
    }

    /// Hook run before every reply; tests use it to inject latency.
    void set_before_reply(std::function<void(const FrameRecord&)> hook) { before_reply_ = std::move(hook); }

    ProviderReply complete(const FrameRecord& frame, const FrameImage&, const ProviderConfig&) override {
        ++requests_;
        if (before_reply_) before_reply_(frame);
        auto it = replies_.find(frame.frame_id);
        if (it == replies_.end()) throw Error(ErrorKind::ProviderRejected, "404 no stub entry for " + frame.frame_id);
        if (it->second.empty()) throw Error(ErrorKind::EmptyResponse, frame.frame_id);
        return {it->second, {}};
    }

    std::size_t request_count() const override { return requests_.load(); }

private:
    std::map<std::string, std::string> replies_;
    std::function<void(const FrameRecord&)> before_reply_;
    std::atomic<std::size_t> requests_{0};
};

/// Request body for one frame, as sent to `{endpoint}/v1/chat/completions`.
inline nlohmann::ordered_json chat_request_body(const ProviderConfig& config, const FrameImage& image) {
    nlohmann::ordered_json text_part = {{"type", "text"}, {"text", config.prompt}};
    nlohmann::ordered_json image_part = {
        {"type", "image_url"},
        {"image_url", {{"url", "data:" + image.mime + ";base64," + base64_encode(image.bytes)}}}};
    nlohmann::ordered_json message;
    message["role"] = "user";
    message["content"] = nlohmann::ordered_json::array({text_part, image_part});
    nlohmann::ordered_json body;
    body["model"] = config.model_id;
    body["messages"] = nlohmann::ordered_json::array({message});
    return body;
}

/// Extracts `choices[0].message.content` plus any reported metadata.
/// Content given as an array of parts is joined from its text parts.
inline ProviderReply parse_chat_response(std::string_view body) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorKind::EmptyResponse, "response is not a JSON object");
    ProviderReply reply;
    try {
        const auto& choice = j.at("choices").at(0);
        const auto& content = choice.at("message").at("content");
        if (content.is_string()) {
            reply.text = content.get<std::string>();
        } else if (content.is_array()) {
            for (const auto& part : content)
                if (part.value("type", "") == "text") reply.text += part.value("text", "");
        }
        if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
            reply.metadata["finish_reason"] = choice["finish_reason"].get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorKind::EmptyResponse, "response lacks choices[0].message.content");
    }
    if (j.contains("model") && j["model"].is_string()) reply.metadata["served_model"] = j["model"].get<std::string>();
    if (j.contains("system_fingerprint") && j["system_fingerprint"].is_string())
        reply.metadata["system_fingerprint"] = j["system_fingerprint"].get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) reply.metadata["usage"] = j["usage"].dump();
    if (reply.text.find_first_not_of(" \t\r\n") == std::string::npos)
        throw Error(ErrorKind::EmptyResponse, "empty message content");
    return reply;
}

class HttpProvider final : public Provider {
public:
    ProviderReply complete(const FrameRecord& frame, const FrameImage& image, const ProviderConfig& config) override {
        const auto [origin, base_path] = split_endpoint(config.endpoint_url);
        const std::string body = chat_request_body(config, image).dump();
        httplib::Headers headers;
        if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);

        std::string last_error;
        auto delay = std::chrono::duration<double>(config.retry_backoff_seconds);
        for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(delay);
                delay *= 2;
            }
            httplib::Client client(origin);
            const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
                std::chrono::duration<double>(config.timeout_seconds));
            client.set_connection_timeout(timeout);
            client.set_read_timeout(timeout);
            client.set_write_timeout(timeout);
            ++requests_;
            auto res = client.Post(base_path + "/v1/chat/completions", headers, body, "application/json");
            if (!res) {
                last_error = httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500 || res->status == 429) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status < 200 || res->status >= 300)
                throw Error(ErrorKind::ProviderRejected, std::to_string(res->status) + " " + res->body);
            return parse_chat_response(res->body);
        }
        throw Error(ErrorKind::ProviderUnreachable, frame.frame_id + " after " +
                                                         std::to_string(config.max_retries + 1) +
                                                         " attempts: " + last_error);
    }

    std::size_t request_count() const override { return requests_.load(); }

    /// "http://host:port/prefix" -> {"http://host:port", "/prefix"}.
    static std::pair<std::string, std::string> split_endpoint(std::string_view url) {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string_view::npos) throw Error(ErrorKind::ConfigError, "bad endpoint URL: " + std::string(url));
        const auto scheme = url.substr(0, scheme_end);
        if (scheme != "http") {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
            throw Error(ErrorKind::ConfigError, "endpoint scheme '" + std::string(scheme) + "' needs a TLS-enabled build");
#else
            if (scheme != "https") throw Error(ErrorKind::ConfigError, "bad endpoint URL: " + std::string(url));
#endif
        }
        const auto path_start = url.find('/', scheme_end + 3);
        std::string origin(url.substr(0, path_start));
        std::string path = path_start == std::string_view::npos ? "" : std::string(url.substr(path_start));
        while (!path.empty() && path.back() == '/') path.pop_back();
        if (path.ends_with("/v1")) path.resize(path.size() - 3);
        return {std::move(origin), std::move(path)};
    }

private:
    std::atomic<std::size_t> requests_{0};
};

// ---------------------------------------------------------------------------
// Cache

class DescriptionCache {
public:
    explicit DescriptionCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    static std::uint64_t key(std::string_view frame_id, std::uint64_t content_hash, std::string_view model_id,
                             std::uint64_t prompt_hash) {
        std::uint64_t h = fnv1a64(frame_id);
        h = fnv1a64(std::string_view("\0", 1), h);
        h = fnv1a64(to_hex(content_hash), h);
        h = fnv1a64(std::string_view("\0", 1), h);
        h = fnv1a64(model_id, h);
        h = fnv1a64(std::string_view("\0", 1), h);
        return fnv1a64(to_hex(prompt_hash), h);
    }

    std::optional<DescriptionRecord> get(std::string_view frame_id, std::uint64_t content_hash,
                                         std::string_view model_id, std::uint64_t prompt_hash) const;

    void put(const DescriptionRecord& record, std::uint64_t content_hash) const;

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path entry_path(std::uint64_t k) const { return dir_ / (to_hex(k) + ".json"); }

    std::filesystem::path dir_;
};

inline nlohmann::ordered_json to_json(const DescriptionRecord& r) {
    nlohmann::ordered_json j;
    j["frame_id"] = r.frame_id;
    j["text"] = r.text;
    j["model_id"] = r.model_id;
    j["prompt_hash"] = to_hex(r.prompt_hash);
    j["created_at"] = r.created_at;
    if (!r.metadata.empty()) j["metadata"] = r.metadata;
    return j;
}

inline DescriptionRecord description_from_json(const nlohmann::json& j) {
    DescriptionRecord r;
    r.frame_id = j.at("frame_id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    const auto hash = parse_hex64(j.at("prompt_hash").get<std::string>());
    if (!hash) throw Error(ErrorKind::MalformedRecord, "prompt_hash");
    r.prompt_hash = *hash;
    r.created_at = j.at("created_at").get<std::string>();
    if (j.contains("metadata")) r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    return r;
}

inline std::optional<DescriptionRecord> DescriptionCache::get(std::string_view frame_id, std::uint64_t content_hash,
                                                              std::string_view model_id,
                                                              std::uint64_t prompt_hash) const {
    const auto path = entry_path(key(frame_id, content_hash, model_id, prompt_hash));
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
    try {
        const auto j = nlohmann::json::parse(io::read_file(path));
        if (j.at("content_hash").get<std::string>() != to_hex(content_hash)) return std::nullopt;
        auto r = description_from_json(j.at("record"));
        if (r.frame_id != frame_id || r.model_id != model_id || r.prompt_hash != prompt_hash) return std::nullopt;
        return r;
    } catch (const std::exception&) {
        return std::nullopt;  // unreadable entry counts as a miss and is overwritten
    }
}

inline void DescriptionCache::put(const DescriptionRecord& r, std::uint64_t content_hash) const {
    nlohmann::ordered_json j;
    j["content_hash"] = to_hex(content_hash);
    j["record"] = to_json(r);
    io::write_file_atomic(entry_path(key(r.frame_id, content_hash, r.model_id, r.prompt_hash)), j.dump() + "\n");
}

// ---------------------------------------------------------------------------
// Describing frames

/// Reads the frame, consults the cache, and only on a miss asks the provider.
inline DescriptionRecord describe_frame(const FrameRecord& frame, const ProviderConfig& config, Provider& provider,
                                        const DescriptionCache* cache = nullptr) {
    const FrameImage image = read_frame_image(frame.path);
    const auto content_hash = image.content_hash();
    const auto prompt_hash = config.prompt_hash();
    if (cache) {
        if (auto hit = cache->get(frame.frame_id, content_hash, config.model_id, prompt_hash)) return *hit;
    }
    auto reply = provider.complete(frame, image, config);
    if (reply.text.empty()) throw Error(ErrorKind::EmptyResponse, frame.frame_id);
    DescriptionRecord record{frame.frame_id, std::move(reply.text), config.model_id, prompt_hash, utc_timestamp(),
                             std::move(reply.metadata)};
    if (cache) cache->put(record, content_hash);
    return record;
}

struct DescribeFailure {
    std::string frame_id;
    ErrorKind kind;
    std::string message;
};

struct BatchResult {
    /// Successful records, in input order.
    std::vector<DescriptionRecord> records;
    std::vector<DescribeFailure> failures;
};

class AllFailedError : public Error {
public:
    explicit AllFailedError(std::vector<DescribeFailure> failures)
        : Error(ErrorKind::AllFailed, summarize(failures)), failures_(std::move(failures)) {}

    const std::vector<DescribeFailure>& failures() const noexcept { return failures_; }

private:
    static std::string summarize(const std::vector<DescribeFailure>& f) {
        std::string s = std::to_string(f.size()) + " frames failed";
        if (!f.empty()) s += "; first: " + f.front().message;
        return s;
    }

    std::vector<DescribeFailure> failures_;
};

/// Describes frames with at most `config.max_concurrency` requests in flight.
/// Per-frame failures are collected; if every frame fails, AllFailedError.
inline BatchResult batch_describe(const std::vector<FrameRecord>& frames, const ProviderConfig& config,
                                  Provider& provider, const DescriptionCache* cache = nullptr) {
    std::vector<std::optional<DescriptionRecord>> slots(frames.size());
    std::vector<std::optional<DescribeFailure>> errors(frames.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < frames.size(); i = next++) {
            try {
                slots[i] = describe_frame(frames[i], config, provider, cache);
            } catch (const Error& e) {
                errors[i] = DescribeFailure{frames[i].frame_id, e.kind(), e.what()};
            } catch (const std::exception& e) {
                errors[i] = DescribeFailure{frames[i].frame_id, ErrorKind::ProviderUnreachable, e.what()};
            }
        }
    };

    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config.max_concurrency)),
                                                 frames.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
        if (n_workers > 0) worker();
    }

    BatchResult out;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (slots[i]) out.records.push_back(std::move(*slots[i]));
        if (errors[i]) out.failures.push_back(std::move(*errors[i]));
    }
    if (!frames.empty() && out.records.empty()) throw AllFailedError(std::move(out.failures));
    return out;
}

// ---------------------------------------------------------------------------
// Description store: one JSON object per line.

inline std::string serialize_descriptions(const std::vector<DescriptionRecord>& records) {
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + "\n";
    return out;
}

inline std::vector<DescriptionRecord> parse_descriptions(std::string_view text) {
    std::vector<DescriptionRecord> out;
    std::size_t line_no = 0;
    for (auto line : io::lines(text)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(description_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception&) {
            throw Error(ErrorKind::MalformedRecord, "description store line " + std::to_string(line_no));
        }
    }
    return out;
}

} // namespace vadsk
