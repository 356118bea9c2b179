#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace auxsel {

/// One observation c_i = (y_i, z_i, a_i); z and a may be absent.
struct Record {
  double y = 0.0;
  std::optional<int> z;
  std::optional<Eigen::VectorXd> a;
};

/// Homogeneous collection of records, stored column-wise.
///
/// Every record shares the same presence pattern (z present or not, same
/// auxiliary dimension m). Aux values are kept row-major so that a record's
/// auxiliary vector is a contiguous span.
class Dataset {
 public:
  Dataset() = default;
  /// Builds from records; throws InputError on a heterogeneous pattern.
  explicit Dataset(const std::vector<Record>& records);
  /// Columnar construction. `aux` is n x m (m may be 0); `z` empty or size n.
  Dataset(std::vector<double> y, std::vector<int> z, const Eigen::MatrixXd& aux);

  std::size_t size() const { return y_.size(); }
  bool empty() const { return y_.empty(); }
  bool has_z() const { return !z_.empty(); }
  std::size_t aux_dim() const { return m_; }

  double y(std::size_t i) const { return y_[i]; }
  int z(std::size_t i) const { return z_[i]; }
  std::span<const double> a(std::size_t i) const {
    return {aux_.data() + i * m_, m_};
  }
  const std::vector<double>& y_values() const { return y_; }
  const std::vector<int>& z_values() const { return z_; }

  Record record(std::size_t i) const;
  std::vector<Record> records() const;

  /// Keeps only the listed auxiliary columns (0-based), in the given order.
  Dataset with_aux_columns(const std::vector<std::size_t>& columns) const;
  Dataset without_aux() const;
  Dataset without_z() const;
  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset without_record(std::size_t i) const;

 private:
  std::vector<double> y_;
  std::vector<int> z_;
  std::vector<double> aux_;
  std::size_t m_ = 0;
};

/// Reads the CSV format: header row with `y`, optional `z`, optional `a1..am`.
Dataset read_dataset_csv(const std::string& path);
Dataset parse_dataset_csv(const std::string& text);
void write_dataset_csv(const Dataset& data, const std::string& path);

}  // namespace auxsel
