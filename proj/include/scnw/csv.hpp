#pragma once

#include "scnw/error.hpp"
#include "scnw/scenario.hpp"

#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace scnw {

/// A numeric value or a text marker (enum tokens, error markers).
using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::string> headers;
    std::vector<std::vector<Cell>> rows;
};

namespace detail {

// Commas and line breaks would break the column structure.
[[nodiscard]] inline std::string sanitize_cell(std::string text) {
    for (char& ch : text) {
        if (ch == ',') ch = ';';
        else if (ch == '\n' || ch == '\r') ch = ' ';
    }
    return text;
}

}  // namespace detail

[[nodiscard]] inline std::string render_cell(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return scenario::format_number(*d);
    return detail::sanitize_cell(std::get<std::string>(c));
}

/// Incremental writer for tables too large to hold in memory.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> headers) : out_(out), width_(headers.size()) {
        for (std::size_t k = 0; k < headers.size(); ++k) {
            if (k) out_ << ',';
            out_ << detail::sanitize_cell(headers[k]);
        }
        out_ << '\n';
    }

    void row(const std::vector<Cell>& cells) {
        if (cells.size() != width_) {
            throw InvalidArgument("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(width_));
        }
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) out_ << ',';
            out_ << render_cell(cells[k]);
        }
        out_ << '\n';
    }

    void finish() {
        out_.flush();
        if (!out_) throw Error("failed writing CSV output");
    }

private:
    std::ostream& out_;
    std::size_t width_;
};

/// Headers line, then one line per row; LF terminated, shortest round-trip
/// numbers.
inline void write_csv(const Table& table, std::ostream& out) {
    CsvWriter w(out, table.headers);
    for (const auto& row : table.rows) w.row(row);
    w.finish();
}

}  // namespace scnw
