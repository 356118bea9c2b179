#include "auxsel/dataset.hpp"

#include "auxsel/errors.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace auxsel {

Dataset::Dataset(const std::vector<Record>& records) {
  if (records.empty()) return;
  const bool with_z = records.front().z.has_value();
  const bool with_a = records.front().a.has_value();
  m_ = with_a ? static_cast<std::size_t>(records.front().a->size()) : 0;
  if (with_a && m_ == 0) throw InputError("auxiliary vector of length zero");
  y_.reserve(records.size());
  aux_.reserve(records.size() * m_);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    if (r.z.has_value() != with_z || r.a.has_value() != with_a ||
        (with_a && static_cast<std::size_t>(r.a->size()) != m_))
      throw InputError("record " + std::to_string(i) +
                       " has a different presence pattern than record 0");
    y_.push_back(r.y);
    if (with_z) {
      if (*r.z != 0 && *r.z != 1)
        throw InputError("record " + std::to_string(i) + ": z must be 0 or 1");
      z_.push_back(*r.z);
    }
    if (with_a)
      for (std::size_t j = 0; j < m_; ++j) aux_.push_back((*r.a)(j));
  }
}

Dataset::Dataset(std::vector<double> y, std::vector<int> z, const Eigen::MatrixXd& aux)
    : y_(std::move(y)), z_(std::move(z)), m_(static_cast<std::size_t>(aux.cols())) {
  if (!z_.empty() && z_.size() != y_.size())
    throw InputError("z column length differs from y");
  if (m_ > 0 && static_cast<std::size_t>(aux.rows()) != y_.size())
    throw InputError("aux rows differ from y length");
  for (int zi : z_)
    if (zi != 0 && zi != 1) throw InputError("z must be 0 or 1");
  aux_.resize(y_.size() * m_);
  for (std::size_t i = 0; i < y_.size() && m_ > 0; ++i)
    for (std::size_t j = 0; j < m_; ++j)
      aux_[i * m_ + j] = aux(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

Record Dataset::record(std::size_t i) const {
  Record r;
  r.y = y_[i];
  if (has_z()) r.z = z_[i];
  if (m_ > 0) {
    Eigen::VectorXd a(static_cast<Eigen::Index>(m_));
    for (std::size_t j = 0; j < m_; ++j) a(static_cast<Eigen::Index>(j)) = aux_[i * m_ + j];
    r.a = std::move(a);
  }
  return r;
}

std::vector<Record> Dataset::records() const {
  std::vector<Record> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(record(i));
  return out;
}

Dataset Dataset::with_aux_columns(const std::vector<std::size_t>& columns) const {
  Dataset out;
  out.y_ = y_;
  out.z_ = z_;
  out.m_ = columns.size();
  out.aux_.resize(size() * out.m_);
  for (std::size_t c : columns)
    if (c >= m_) throw InputError("auxiliary column index out of range");
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < columns.size(); ++j)
      out.aux_[i * out.m_ + j] = aux_[i * m_ + columns[j]];
  return out;
}

Dataset Dataset::without_aux() const { return with_aux_columns({}); }

Dataset Dataset::without_z() const {
  Dataset out = *this;
  out.z_.clear();
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.m_ = m_;
  out.y_.reserve(indices.size());
  out.aux_.reserve(indices.size() * m_);
  for (std::size_t i : indices) {
    if (i >= size()) throw InputError("subset index out of range");
    out.y_.push_back(y_[i]);
    if (has_z()) out.z_.push_back(z_[i]);
    for (std::size_t j = 0; j < m_; ++j) out.aux_.push_back(aux_[i * m_ + j]);
  }
  return out;
}

Dataset Dataset::without_record(std::size_t i) const {
  std::vector<std::size_t> keep;
  keep.reserve(size());
  for (std::size_t k = 0; k < size(); ++k)
    if (k != i) keep.push_back(k);
  return subset(keep);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r' && c != ' ' && c != '\t') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (s.empty() || ec != std::errc{} || ptr != end)
    throw InputError("line " + std::to_string(line) + ": cannot parse number '" + s + "'");
  return v;
}

}  // namespace

Dataset parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw InputError("empty dataset file");

  int y_col = -1;
  int z_col = -1;
  std::vector<int> a_cols;
  std::vector<int> a_index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h == "y") {
      y_col = static_cast<int>(c);
    } else if (h == "z") {
      z_col = static_cast<int>(c);
    } else if (h.size() > 1 && h[0] == 'a') {
      int k = 0;
      auto [ptr, ec] = std::from_chars(h.data() + 1, h.data() + h.size(), k);
      if (ec != std::errc{} || ptr != h.data() + h.size() || k < 1)
        throw InputError("unknown column '" + h + "'");
      a_cols.push_back(static_cast<int>(c));
      a_index.push_back(k);
    } else {
      throw InputError("unknown column '" + h + "'");
    }
  }
  if (y_col < 0) throw InputError("missing required column 'y'");
  for (std::size_t j = 0; j < a_index.size(); ++j)
    if (a_index[j] != static_cast<int>(j) + 1)
      throw InputError("auxiliary columns must be a1..am in order");

  std::vector<double> y;
  std::vector<int> z;
  std::vector<double> aux;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size())
      throw InputError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(f.size()));
    y.push_back(parse_double(f[static_cast<std::size_t>(y_col)], line_no));
    if (z_col >= 0) {
      const double zv = parse_double(f[static_cast<std::size_t>(z_col)], line_no);
      if (zv != 0.0 && zv != 1.0)
        throw InputError("line " + std::to_string(line_no) + ": z must be 0 or 1");
      z.push_back(static_cast<int>(zv));
    }
    for (int c : a_cols) aux.push_back(parse_double(f[static_cast<std::size_t>(c)], line_no));
  }
  if (y.empty()) throw InputError("dataset has no rows");
  const auto m = static_cast<Eigen::Index>(a_cols.size());
  Eigen::MatrixXd a(static_cast<Eigen::Index>(y.size()), m);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < m; ++j) a(i, j) = aux[static_cast<std::size_t>(i * m + j)];
  return Dataset(std::move(y), std::move(z), a);
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset_csv(ss.str());
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write dataset file '" + path + "'");
  out << "y";
  if (data.has_z()) out << ",z";
  for (std::size_t j = 0; j < data.aux_dim(); ++j) out << ",a" << j + 1;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.y(i);
    if (data.has_z()) out << ',' << data.z(i);
    for (double v : data.a(i)) out << ',' << v;
    out << '\n';
  }
}

}  // namespace auxsel
