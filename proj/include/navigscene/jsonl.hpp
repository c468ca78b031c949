#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "navigscene/errors.hpp"

#include <json.hpp>

namespace navigscene {

// One JSON document per line. Blank lines are tolerated and skipped; the
// returned line numbers are 1-based positions in the file.
inline std::vector<std::pair<nlohmann::ordered_json, long>> read_jsonl_lines(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    std::vector<std::pair<nlohmann::ordered_json, long>> docs;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = true;
        for (char c : line)
            if (c != ' ' && c != '\t') {
                blank = false;
                break;
            }
        if (blank) continue;
        try {
            docs.emplace_back(nlohmann::ordered_json::parse(line), line_no);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ": invalid JSON: " + e.what(), line_no);
        }
    }
    if (in.bad()) throw IoError("read error on " + path);
    return docs;
}

inline std::vector<nlohmann::ordered_json> read_jsonl(const std::string& path) {
    std::vector<nlohmann::ordered_json> docs;
    for (auto& [doc, line] : read_jsonl_lines(path)) docs.push_back(std::move(doc));
    return docs;
}

// Serializes each record on its own line with a trailing newline; zero
// records produce a zero-byte file. dump() emits no spaces and nlohmann's
// shortest-round-trip doubles, so output bytes depend only on the values.
template <typename Range, typename ToJson>
void write_jsonl(const Range& records, const std::string& path, ToJson&& to_json) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const auto& record : records) {
        out << to_json(record).dump() << '\n';
    }
    out.flush();
    if (!out) throw IoError("write error on " + path);
}

inline nlohmann::ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }
}

inline void write_json_file(const nlohmann::ordered_json& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) throw IoError("write error on " + path);
}

}  // namespace navigscene
