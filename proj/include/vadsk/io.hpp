#pragma once

#include "vadsk/common.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

namespace vadsk::io {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write-temp-then-rename, so readers never observe a partial file.
inline void write_file_atomic(const fs::path& path, std::string_view contents) {
    static std::atomic<std::uint64_t> counter{0};
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto tag = std::hash<std::thread::id>{}(std::this_thread::get_id()) ^ (counter++ << 20);
    fs::path tmp = path;
    tmp += ".tmp." + to_hex(tag);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(ErrorKind::MissingFile, "short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

/// Splits text into lines, dropping a trailing '\r' from each.
inline std::vector<std::string_view> lines(std::string_view text) {
    std::vector<std::string_view> out;
    if (text.empty()) return out;
    auto parts = split(text, '\n');
    if (!parts.empty() && parts.back().empty()) parts.pop_back();
    for (auto& p : parts) {
        if (!p.empty() && p.back() == '\r') p.remove_suffix(1);
        out.push_back(p);
    }
    return out;
}

} // namespace vadsk::io
