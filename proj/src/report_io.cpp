#include "auxsel/report_io.hpp"

#include "auxsel/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace auxsel {

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) throw InputError("table row width does not match header");
  rows.push_back(std::move(row));
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string to_csv(const Table& t) {
  std::ostringstream out;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_field(cells[i]);
    out << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out.str();
}

std::string to_markdown(const Table& t) {
  std::vector<std::size_t> width(t.header.size(), 3);
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    width[c] = std::max(width[c], t.header[c].size());
    for (const auto& r : t.rows) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  const auto line = [&](const std::vector<std::string>& cells) {
    out << '|';
    for (std::size_t c = 0; c < cells.size(); ++c)
      out << ' ' << cells[c] << std::string(width[c] - cells[c].size(), ' ') << " |";
    out << '\n';
  };
  line(t.header);
  out << '|';
  for (std::size_t c = 0; c < width.size(); ++c) out << std::string(width[c] + 2, '-') << '|';
  out << '\n';
  for (const auto& r : t.rows) line(r);
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path + "'");
}

Table criterion_table(const std::vector<std::pair<std::string, CriterionReport>>& reports) {
  Table t{{"candidate", "criterion", "value", "fit", "penalty", "traces"}, {}};
  for (const auto& [label, r] : reports) {
    std::string traces;
    for (const auto& [name, v] : r.traces)
      traces += (traces.empty() ? "" : ";") + name + "=" + format_number(v);
    t.add_row({label, r.name, format_number(r.value), format_number(r.fit_term),
               format_number(r.penalty), traces});
  }
  return t;
}

}  // namespace auxsel
