#pragma once

// Wine experiment: Y is one standardized attribute, Z the class (1 or 2), and
// the remaining twelve attributes are the auxiliary candidates.

#include "auxsel/dataset.hpp"
#include "auxsel/em.hpp"
#include "auxsel/report_io.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace auxsel {

inline constexpr std::size_t kWineAttributes = 13;
inline constexpr std::size_t kWineCanonicalRows = 178;

struct WineRaw {
  std::vector<int> cls;
  Eigen::MatrixXd attributes;  // rows x 13

  std::size_t rows() const { return cls.size(); }
};

/// Parses comma-separated `class,V1..V13` rows without a header. Throws
/// InputError with the line number on malformed rows, a wrong column count or
/// an empty file; with `expected_rows` also checks the row count.
WineRaw parse_wine(const std::string& text, std::optional<std::size_t> expected_rows = {});
WineRaw load_wine(const std::string& path, std::optional<std::size_t> expected_rows = {});

inline EmOptions wine_em_defaults() {
  EmOptions em;
  em.max_iter = 20000;
  return em;
}

struct WineConfig {
  std::string csv_path;
  int class_one = 1;   // mapped to z = 1
  int class_zero = 2;  // mapped to z = 0
  std::size_t n_expected = 130;
  std::size_t n_train = 86;
  std::size_t n_test = 44;
  std::size_t n_splits = 100;
  std::uint64_t seed = 20240101;
  int workers = 1;
  /// Slow ridges in the 13-attribute fits need far more than the default
  /// iteration budget to reach a stationary point.
  EmOptions em = wine_em_defaults();
  /// Attributes used as Y (1-based). Empty means all 13.
  std::vector<std::size_t> y_columns;

  void check() const;
};

/// Rows of the two kept classes with every attribute standardized to mean 0
/// and sample variance 1 over those rows.
struct WineData {
  std::vector<int> z;
  Eigen::MatrixXd x;  // n x 13, standardized
};

/// Throws InputError when the kept row count differs from n_expected or an
/// attribute has zero variance.
WineData preprocess(const WineRaw& raw, const WineConfig& config);

/// Dataset (y, z, a1..a12) with y = V_ell (1-based) and the other attributes as
/// auxiliary columns in index order.
Dataset wine_dataset(const WineData& data, std::size_t ell);

/// Attribute index (1-based) of auxiliary column k (0-based) when Y = V_ell.
std::size_t aux_attribute(std::size_t ell, std::size_t k);

struct WineSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
/// Split s of the experiment; identical for every choice of Y.
WineSplit wine_split(std::size_t n, std::size_t n_train, std::uint64_t seed, std::size_t s);

struct WineSplitOutcome {
  bool excluded = false;
  std::string error;
  /// "y" or "V<j>".
  std::string selected;
  /// n_te (L(theta_y) - L(theta_best)) on the test rows.
  double gain = 0.0;
};

/// Fits on the training rows (z dropped), selects by minimum AIC_x among the
/// Y-only fit and the twelve single-auxiliary fits, and scores on the test
/// rows (aux dropped) with the per-fit label assignment that minimizes test
/// loss.
WineSplitOutcome fit_wine_split(const Dataset& data, std::size_t ell, const WineSplit& split,
                                const EmOptions& em);

/// -mean log p_x over `data` minimized over the two label assignments.
double test_loss_x(const PrimaryParams& theta, const Dataset& data);

struct WineRow {
  std::size_t ell = 0;
  std::size_t used = 0;
  std::size_t excluded = 0;
  double mean_gain = 0.0;
  double se = 0.0;
  std::map<std::string, std::size_t> selections;
};

std::vector<WineRow> run_wine(const WineConfig& config);
std::vector<WineRow> run_wine(const WineData& data, const WineConfig& config);

Table wine_table(const std::vector<WineRow>& rows);

}  // namespace auxsel
