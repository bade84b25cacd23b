#pragma once

// Parser corpus: tests/corpus/manifest.txt lists every file with either
// "ok" or the expected error line and message fragment.

#include "scnw/scenario.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace corpus {

struct Entry {
    std::string file;
    std::optional<std::size_t> error_line;  // empty: valid file
    std::string fragment;
};

inline std::string dir() { return std::string(SCNW_SOURCE_DIR) + "/tests/corpus/"; }

inline std::string read(const std::string& file) {
    std::ifstream in(dir() + file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file " + file);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<Entry> manifest() {
    std::istringstream in(read("manifest.txt"));
    std::vector<Entry> out;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        Entry e;
        std::string status;
        fields >> e.file >> status;
        if (status != "ok") {
            e.error_line = std::stoul(status);
            std::getline(fields >> std::ws, e.fragment);
        }
        out.push_back(e);
    }
    return out;
}

struct Outcome {
    bool passed = false;
    std::string detail;
};

// Parses one entry and compares against the manifest; valid files must also
// survive render -> parse unchanged.
inline Outcome check(const Entry& e) {
    const std::string text = read(e.file);
    try {
        const auto s = scnw::scenario::parse_scenario(text);
        if (e.error_line) return {false, "parsed, expected an error on line " + std::to_string(*e.error_line)};
        const auto rendered = scnw::scenario::render_scenario(s);
        const auto again = scnw::scenario::parse_scenario(rendered);
        if (!(again == s)) return {false, "round trip changed the record"};
        if (scnw::scenario::render_scenario(again) != rendered) return {false, "rendering is not a fixpoint"};
        return {true, ""};
    } catch (const scnw::ScenarioError& err) {
        if (!e.error_line) return {false, std::string("unexpected error: ") + err.what()};
        if (err.line() != *e.error_line) {
            return {false, "error on line " + std::to_string(err.line()) + ", expected " + std::to_string(*e.error_line)};
        }
        if (std::string(err.what()).find(e.fragment) == std::string::npos) {
            return {false, std::string("message '") + err.what() + "' lacks '" + e.fragment + "'"};
        }
        return {true, ""};
    }
}

}  // namespace corpus
