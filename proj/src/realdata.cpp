#include "auxsel/realdata.hpp"

#include "auxsel/criteria.hpp"
#include "auxsel/errors.hpp"
#include "auxsel/gmm.hpp"
#include "auxsel/infomat.hpp"
#include "auxsel/parallel.hpp"
#include "auxsel/simlab.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace auxsel {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& field, std::size_t line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw InputError("wine line " + std::to_string(line) + ": bad number '" + field + "'");
  return v;
}

}  // namespace

WineRaw parse_wine(const std::string& text, std::optional<std::size_t> expected_rows) {
  std::istringstream in(text);
  std::string line;
  std::vector<int> cls;
  std::vector<double> values;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(trim(f));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != kWineAttributes + 1)
      throw InputError("wine line " + std::to_string(lineno) + ": expected " +
                       std::to_string(kWineAttributes + 1) + " columns, got " +
                       std::to_string(fields.size()));
    const double c = parse_double(fields[0], lineno);
    if (c != std::floor(c))
      throw InputError("wine line " + std::to_string(lineno) + ": class label is not an integer");
    cls.push_back(static_cast<int>(c));
    for (std::size_t j = 1; j < fields.size(); ++j) values.push_back(parse_double(fields[j], lineno));
  }
  if (cls.empty()) throw InputError("wine file has no data rows");
  if (expected_rows && cls.size() != *expected_rows)
    throw InputError("wine file has " + std::to_string(cls.size()) + " rows, expected " +
                     std::to_string(*expected_rows));
  WineRaw raw;
  raw.cls = std::move(cls);
  raw.attributes = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(raw.cls.size()),
      static_cast<Eigen::Index>(kWineAttributes));
  return raw;
}

WineRaw load_wine(const std::string& path, std::optional<std::size_t> expected_rows) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open wine file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_wine(buf.str(), expected_rows);
}

void WineConfig::check() const {
  if (n_train + n_test != n_expected) throw InputError("wine: n_train + n_test != n_expected");
  if (n_train < 10 || n_test < 1) throw InputError("wine: split sizes too small");
  if (n_splits < 1) throw InputError("wine: n_splits must be >= 1");
  if (class_one == class_zero) throw InputError("wine: the two kept classes must differ");
  if (workers < 1) throw InputError("workers must be >= 1");
  for (auto ell : y_columns)
    if (ell < 1 || ell > kWineAttributes) throw InputError("wine: Y column out of range");
  em.check();
}

WineData preprocess(const WineRaw& raw, const WineConfig& config) {
  std::vector<Eigen::Index> keep;
  WineData out;
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    if (raw.cls[i] == config.class_one || raw.cls[i] == config.class_zero) {
      keep.push_back(static_cast<Eigen::Index>(i));
      out.z.push_back(raw.cls[i] == config.class_one ? 1 : 0);
    }
  }
  if (keep.size() != config.n_expected)
    throw InputError("wine: " + std::to_string(keep.size()) + " rows in the kept classes, expected " +
                     std::to_string(config.n_expected));
  out.x = raw.attributes(keep, Eigen::all);
  const auto n = static_cast<double>(keep.size());
  for (Eigen::Index j = 0; j < out.x.cols(); ++j) {
    auto col = out.x.col(j);
    const double mean = col.mean();
    col.array() -= mean;
    const double var = col.squaredNorm() / (n - 1.0);
    if (!(var > 0.0)) throw InputError("wine: attribute V" + std::to_string(j + 1) + " is constant");
    col /= std::sqrt(var);
  }
  return out;
}

std::size_t aux_attribute(std::size_t ell, std::size_t k) { return k + 1 < ell ? k + 1 : k + 2; }

Dataset wine_dataset(const WineData& data, std::size_t ell) {
  if (ell < 1 || ell > kWineAttributes) throw InputError("wine: Y column out of range");
  const auto n = data.x.rows();
  std::vector<double> y(static_cast<std::size_t>(n));
  Eigen::MatrixXd aux(n, static_cast<Eigen::Index>(kWineAttributes - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = data.x(i, static_cast<Eigen::Index>(ell - 1));
    for (std::size_t k = 0; k + 1 < kWineAttributes; ++k)
      aux(i, static_cast<Eigen::Index>(k)) =
          data.x(i, static_cast<Eigen::Index>(aux_attribute(ell, k) - 1));
  }
  return Dataset(std::move(y), data.z, aux);
}

WineSplit wine_split(std::size_t n, std::size_t n_train, std::uint64_t seed, std::size_t s) {
  if (n_train > n) throw InputError("wine: training size exceeds sample size");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(replicate_seed(seed, n, s));
  // Fisher-Yates with an explicit draw so the split does not depend on the
  // standard library's shuffle.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  WineSplit split;
  split.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

double test_loss_x(const PrimaryParams& theta, const Dataset& data) {
  if (!data.has_z()) throw InputError("test loss needs z");
  return std::min(-loglik_x(data, theta), -loglik_x(data, theta.swapped()));
}

WineSplitOutcome fit_wine_split(const Dataset& data, std::size_t ell, const WineSplit& split,
                                const EmOptions& em) {
  WineSplitOutcome out;
  try {
    const Dataset train = data.subset(split.train).without_z();
    const Dataset test = data.subset(split.test).without_aux();
    const Dataset ytrain = train.without_aux();

    const PrimaryParams theta_y = fit_em_y(ytrain, em).params;
    std::vector<std::pair<std::string, CriterionReport>> reports;
    std::vector<PrimaryParams> fits;
    reports.emplace_back(std::string(kNoAuxiliary),
                         aic_xy(ytrain, theta_y, estimate_info_y(ytrain, theta_y)));
    fits.push_back(theta_y);
    for (std::size_t k = 0; k < train.aux_dim(); ++k) {
      const Dataset b = train.with_aux_columns({k});
      const FullParams beta = fit_em_b(b, em).params;
      reports.emplace_back("V" + std::to_string(aux_attribute(ell, k)),
                           aic_xb(b, beta, estimate_info(b, beta, beta.theta)));
      fits.push_back(beta.theta);
    }
    out.selected = select_auxiliary(reports);
    std::size_t best = 0;
    for (std::size_t c = 0; c < reports.size(); ++c)
      if (reports[c].first == out.selected) best = c;
    const double n_te = static_cast<double>(test.size());
    out.gain = n_te * (test_loss_x(theta_y, test) - test_loss_x(fits[best], test));
    if (!std::isfinite(out.gain)) throw NumericalError("non-finite test loss");
  } catch (const Error& e) {
    out.excluded = true;
    out.error = e.what();
  }
  return out;
}

std::vector<WineRow> run_wine(const WineData& data, const WineConfig& config) {
  config.check();
  std::vector<std::size_t> ells = config.y_columns;
  if (ells.empty())
    for (std::size_t l = 1; l <= kWineAttributes; ++l) ells.push_back(l);
  const std::size_t n = data.x.rows();
  std::vector<WineSplit> splits;
  for (std::size_t s = 0; s < config.n_splits; ++s)
    splits.push_back(wine_split(n, config.n_train, config.seed, s));
  std::vector<Dataset> sets;
  for (auto ell : ells) sets.push_back(wine_dataset(data, ell));

  const std::size_t tasks = ells.size() * config.n_splits;
  const auto outcomes = parallel_map<WineSplitOutcome>(tasks, config.workers, [&](std::size_t k) {
    const std::size_t e = k / config.n_splits;
    const std::size_t s = k % config.n_splits;
    EmOptions em = config.em;
    em.seed = replicate_seed(config.seed, ells[e], s);
    return fit_wine_split(sets[e], ells[e], splits[s], em);
  });

  std::vector<WineRow> rows;
  for (std::size_t e = 0; e < ells.size(); ++e) {
    WineRow row;
    row.ell = ells[e];
    std::vector<double> gains;
    std::string first_error;
    for (std::size_t s = 0; s < config.n_splits; ++s) {
      const auto& o = outcomes[e * config.n_splits + s];
      if (o.excluded) {
        ++row.excluded;
        if (first_error.empty()) first_error = o.error;
        continue;
      }
      gains.push_back(o.gain);
      ++row.selections[o.selected];
    }
    if (gains.empty())
      throw NumericalError("wine: every split failed for V" + std::to_string(row.ell) + " (" +
                           first_error + ")");
    row.used = gains.size();
    const MeanSe ms = mean_se(gains);
    row.mean_gain = ms.mean;
    row.se = ms.se;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<WineRow> run_wine(const WineConfig& config) {
  config.check();
  return run_wine(preprocess(load_wine(config.csv_path), config), config);
}

Table wine_table(const std::vector<WineRow>& rows) {
  Table t{{"Y", "used", "excluded", "mean_gain", "se", "selections"}, {}};
  for (const auto& r : rows) {
    std::string sel;
    for (const auto& [label, count] : r.selections)
      sel += (sel.empty() ? "" : ";") + label + "=" + std::to_string(count);
    t.add_row({"V" + std::to_string(r.ell), std::to_string(r.used), std::to_string(r.excluded),
               format_fixed(r.mean_gain, 2), format_fixed(r.se, 2), sel});
  }
  return t;
}

}  // namespace auxsel
