#include "auxsel/errors.hpp"
#include "auxsel/realdata.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace auxsel;

namespace {

const std::string kWinePath = AUXSEL_WINE_PATH;

WineConfig small_config() {
  WineConfig c;
  c.csv_path = kWinePath;
  c.n_splits = 2;
  c.y_columns = {1, 3};
  c.em.max_iter = 500;
  c.em.restarts = 3;
  return c;
}

}  // namespace

TEST_CASE("canonical file") {
  const WineRaw raw = load_wine(kWinePath, kWineCanonicalRows);
  CHECK(raw.rows() == 178);
  CHECK(raw.attributes.cols() == 13);
  CHECK(std::set<int>(raw.cls.begin(), raw.cls.end()) == std::set<int>{1, 2, 3});
  CHECK(std::count(raw.cls.begin(), raw.cls.end(), 1) == 59);
  CHECK(std::count(raw.cls.begin(), raw.cls.end(), 2) == 71);
  CHECK(raw.attributes(0, 0) == doctest::Approx(14.23));
  CHECK_THROWS_AS(load_wine(kWinePath, 177), InputError);
  CHECK_THROWS_AS(load_wine("/nonexistent/wine.data"), InputError);
}

TEST_CASE("malformed wine files") {
  const std::string good = "1,1,2,3,4,5,6,7,8,9,10,11,12,13\n";
  CHECK(parse_wine(good).rows() == 1);
  CHECK_THROWS_WITH_AS(parse_wine(good + "1,1,2,3,4,5,6,7,8,9,10,11,12\n"),
                       doctest::Contains("wine line 2"), InputError);
  CHECK_THROWS_WITH_AS(parse_wine(good + good + "2,1,2,3,x,5,6,7,8,9,10,11,12,13\n"),
                       "wine line 3: bad number 'x'", InputError);
  CHECK_THROWS_AS(parse_wine(""), InputError);
  CHECK_THROWS_AS(parse_wine("\n\n"), InputError);
  CHECK_THROWS_AS(parse_wine("1.5,1,2,3,4,5,6,7,8,9,10,11,12,13\n"), InputError);
}

TEST_CASE("preprocess keeps classes 1 and 2 and standardizes") {
  const WineConfig c = small_config();
  const WineData w = preprocess(load_wine(kWinePath), c);
  REQUIRE(w.x.rows() == 130);
  REQUIRE(w.z.size() == 130);
  CHECK(std::count(w.z.begin(), w.z.end(), 1) == 59);
  for (Eigen::Index j = 0; j < 13; ++j) {
    const double mean = w.x.col(j).mean();
    const double var = (w.x.col(j).array() - mean).square().sum() / 129.0;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(var - 1.0) < 1e-12);
  }
  WineConfig wrong = c;
  wrong.n_expected = 131;
  wrong.n_train = 87;
  CHECK_THROWS_AS(preprocess(load_wine(kWinePath), wrong), InputError);
}

TEST_CASE("auxiliary columns follow attribute order") {
  const WineData w = preprocess(load_wine(kWinePath), small_config());
  const Dataset d1 = wine_dataset(w, 1);
  CHECK(d1.aux_dim() == 12);
  for (std::size_t k = 0; k < 12; ++k) {
    CHECK(aux_attribute(1, k) == k + 2);
    CHECK(d1.a(5)[k] == w.x(5, static_cast<Eigen::Index>(k + 1)));
  }
  CHECK(d1.y(5) == w.x(5, 0));
  CHECK(aux_attribute(7, 5) == 6);
  CHECK(aux_attribute(7, 6) == 8);
  CHECK(wine_dataset(w, 13).a(0)[11] == w.x(0, 11));
  CHECK_THROWS_AS(wine_dataset(w, 14), InputError);
}

TEST_CASE("splits are partitions and reproducible") {
  for (std::size_t s = 0; s < 50; ++s) {
    const WineSplit sp = wine_split(130, 86, 20240101, s);
    CHECK(sp.train.size() == 86);
    CHECK(sp.test.size() == 44);
    std::vector<std::size_t> all = sp.train;
    all.insert(all.end(), sp.test.begin(), sp.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 130; ++i) CHECK(all[i] == i);
    const WineSplit again = wine_split(130, 86, 20240101, s);
    CHECK(again.train == sp.train);
  }
  CHECK(wine_split(130, 86, 20240101, 0).train != wine_split(130, 86, 20240101, 1).train);
}

TEST_CASE("test loss takes the better label assignment") {
  const Dataset d({-1.0, 1.0, 2.0}, {1, 0, 0}, Eigen::MatrixXd());
  const PrimaryParams t{0.4, -1.0, 1.5, 1.0};
  CHECK(test_loss_x(t, d) == doctest::Approx(test_loss_x(t.swapped(), d)).epsilon(1e-14));
  CHECK_THROWS_AS(test_loss_x(t, d.without_z()), InputError);
}

TEST_CASE("training never sees z") {
  const WineConfig c = small_config();
  const WineData w = preprocess(load_wine(kWinePath), c);
  const Dataset d = wine_dataset(w, 3);
  const WineSplit sp = wine_split(d.size(), c.n_train, c.seed, 0);

  std::vector<int> z = d.z_values();
  std::vector<int> train_z;
  for (std::size_t i : sp.train) train_z.push_back(z[i]);
  std::mt19937_64 rng(1);
  std::shuffle(train_z.begin(), train_z.end(), rng);
  for (std::size_t k = 0; k < sp.train.size(); ++k) z[sp.train[k]] = 1 - train_z[k];
  Eigen::MatrixXd aux(static_cast<Eigen::Index>(d.size()), 12);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < 12; ++j)
      aux(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d.a(i)[j];
  const Dataset shadow(d.y_values(), z, aux);

  EmOptions em = c.em;
  em.seed = 5;
  const WineSplitOutcome a = fit_wine_split(d, 3, sp, em);
  const WineSplitOutcome b = fit_wine_split(shadow, 3, sp, em);
  CHECK_FALSE(a.excluded);
  CHECK(a.selected == b.selected);
  CHECK(a.gain == b.gain);
}

TEST_CASE("run_wine is deterministic across runs and worker counts") {
  WineConfig c = small_config();
  const auto a = run_wine(c);
  c.workers = 3;
  const auto b = run_wine(c);
  REQUIRE(a.size() == 2);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].ell == b[k].ell);
    CHECK(a[k].mean_gain == b[k].mean_gain);
    CHECK(a[k].se == b[k].se);
    CHECK(a[k].selections == b[k].selections);
  }
  CHECK(to_csv(wine_table(a)) == to_csv(wine_table(b)));
}

TEST_CASE("config validation") {
  WineConfig c = small_config();
  c.n_test = 40;
  CHECK_THROWS_AS(c.check(), InputError);
  c = small_config();
  c.y_columns = {14};
  CHECK_THROWS_AS(c.check(), InputError);
  CHECK(WineConfig{}.em.max_iter == 20000);
}
