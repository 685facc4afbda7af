#include "legalrank/csv.hpp"

#include <string>

#include "legalrank/errors.hpp"

namespace legalrank::csv {

Reader::Reader(std::istream& in, char separator) : in_(in), sep_(separator) {}

std::optional<Row> Reader::next() {
    while (true) {
        if (in_.peek() == std::char_traits<char>::eof()) {
            return std::nullopt;
        }
        Row row;
        std::string field;
        bool quoted = false;
        bool field_was_quoted = false;
        bool any = false;
        record_line_ = line_;

        if (first_) {
            first_ = false;
            // UTF-8 byte-order mark.
            if (in_.peek() == 0xEF) {
                char bom[3];
                in_.read(bom, 3);
                if (!(in_.gcount() == 3 && static_cast<unsigned char>(bom[1]) == 0xBB &&
                      static_cast<unsigned char>(bom[2]) == 0xBF)) {
                    field.append(bom, static_cast<std::size_t>(in_.gcount()));
                    any = true;
                }
            }
        }

        int c;
        while ((c = in_.get()) != std::char_traits<char>::eof()) {
            char ch = static_cast<char>(c);
            if (quoted) {
                if (ch == '"') {
                    if (in_.peek() == '"') {
                        in_.get();
                        field.push_back('"');
                    } else {
                        quoted = false;
                    }
                } else {
                    if (ch == '\n') {
                        ++line_;
                    }
                    field.push_back(ch);
                }
                continue;
            }
            if (ch == '"' && field.empty() && !field_was_quoted) {
                quoted = true;
                field_was_quoted = true;
                any = true;
            } else if (ch == sep_) {
                row.push_back(std::move(field));
                field.clear();
                field_was_quoted = false;
                any = true;
            } else if (ch == '\r') {
                if (in_.peek() == '\n') {
                    continue;
                }
                ++line_;
                break;
            } else if (ch == '\n') {
                ++line_;
                break;
            } else {
                field.push_back(ch);
                any = true;
            }
        }
        if (quoted) {
            throw FormatError("csv: unterminated quoted field starting on line " +
                              std::to_string(record_line_));
        }
        if (!any && field.empty()) {
            continue;  // blank line
        }
        row.push_back(std::move(field));
        return row;
    }
}

std::vector<std::size_t> locate_columns(const Row& header,
                                        const std::vector<std::string_view>& required,
                                        std::string_view source) {
    std::vector<std::size_t> positions;
    positions.reserve(required.size());
    for (auto name : required) {
        std::size_t found = header.size();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                found = i;
                break;
            }
        }
        if (found == header.size()) {
            throw FormatError(std::string(source) + ": missing column '" + std::string(name) + "'");
        }
        positions.push_back(found);
    }
    return positions;
}

void write_field(std::ostream& out, std::string_view field, char separator) {
    bool needs_quotes = field.find_first_of(std::string{'"', '\n', '\r', separator}) !=
                        std::string_view::npos;
    if (!needs_quotes) {
        out << field;
        return;
    }
    out << '"';
    for (char ch : field) {
        if (ch == '"') {
            out << '"';
        }
        out << ch;
    }
    out << '"';
}

void write_row(std::ostream& out, const Row& row, char separator) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i > 0) {
            out << separator;
        }
        write_field(out, row[i], separator);
    }
    out << '\n';
}

}  // namespace legalrank::csv
