#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace legalrank::csv {

using Row = std::vector<std::string>;

/// Streaming RFC-4180 reader. Quoted fields may contain separators, doubled
/// quotes and line breaks. A UTF-8 byte-order mark before the first field is dropped.
class Reader {
  public:
    explicit Reader(std::istream& in, char separator = ',');

    /// Next record, or nullopt at end of input. Blank lines are skipped.
    std::optional<Row> next();

    /// 1-based line number where the most recently returned record started.
    std::size_t line() const noexcept { return record_line_; }

  private:
    std::istream& in_;
    char sep_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
    bool first_ = true;
};

/// Position of each required column in the header; throws FormatError naming
/// the first missing column.
std::vector<std::size_t> locate_columns(const Row& header,
                                        const std::vector<std::string_view>& required,
                                        std::string_view source);

void write_field(std::ostream& out, std::string_view field, char separator = ',');
void write_row(std::ostream& out, const Row& row, char separator = ',');

}  // namespace legalrank::csv
