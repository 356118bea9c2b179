#pragma once

// Plain tables written as CSV and as aligned markdown.

#include "auxsel/criteria.hpp"

#include <string>
#include <vector>

namespace auxsel {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
};

/// Shortest decimal that round-trips (%.17g), so files are byte-stable.
std::string format_number(double v);
/// Fixed number of decimals for human-facing tables.
std::string format_fixed(double v, int decimals);

std::string to_csv(const Table& t);
std::string to_markdown(const Table& t);

/// Writes `text` to `path`, throwing InputError when the file cannot be opened.
void write_text_file(const std::string& path, const std::string& text);

/// One row per report: name, value, fit, penalty, then trace terms as
/// name=value pairs joined with ';'.
Table criterion_table(const std::vector<std::pair<std::string, CriterionReport>>& reports);

}  // namespace auxsel
