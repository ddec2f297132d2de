#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <string>

#include <nlohmann/json.hpp>

#include "memvqa/error.hpp"

namespace memvqa::detail {

/// Calls `fn(json, line_no)` for every non-blank line. Parse failures become RecordError.
inline void for_each_jsonl(std::istream& in, const std::string& source,
                           const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw RecordError(source, line_no, std::string("invalid JSON: ") + e.what());
        }
        try {
            fn(j, line_no);
        } catch (const nlohmann::json::exception& e) {
            throw RecordError(source, line_no, std::string("bad record: ") + e.what());
        }
    }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileLayoutError("cannot open " + path.string());
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileLayoutError("cannot write " + path.string());
    return out;
}

inline std::string dump_line(const nlohmann::json& j) {
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace memvqa::detail
