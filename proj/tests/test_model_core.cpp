#include "auxsel/dataset.hpp"
#include "auxsel/errors.hpp"
#include "auxsel/params.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace auxsel;

namespace {

FullParams scalar_full(PrimaryParams t, double mu1a, double mu2a, double saa, double sya) {
  FullParams p;
  p.theta = t;
  p.phi.mu1a = Eigen::VectorXd::Constant(1, mu1a);
  p.phi.mu2a = Eigen::VectorXd::Constant(1, mu2a);
  p.phi.sigma_aa = Eigen::MatrixXd::Constant(1, 1, saa);
  p.phi.sigma_ya = Eigen::VectorXd::Constant(1, sya);
  return p;
}

}  // namespace

TEST_CASE("flat layout dimensions") {
  CHECK(flat_dim(1) == 8);
  CHECK(aux_param_dim(1) == 4);
  CHECK(aux_param_dim(2) == 9);
  CHECK(flat_dim(3) == 4 + 6 + 6 + 3);
}

TEST_CASE("flatten follows the fixed layout") {
  Eigen::VectorXd expect(8);
  expect << 0.5, 0, 0, 1, 0, 0, 1, 0;
  CHECK(flatten(scalar_full({0.5, 0, 0, 1}, 0, 0, 1, 0)) == expect);

  expect << 0.6, -1.2, 1.2, 0.7, 1.8, -1.8, 0.49, 0;
  CHECK(flatten(scalar_full({0.6, -1.2, 1.2, 0.7}, 1.8, -1.8, 0.49, 0)) == expect);
}

TEST_CASE("vech walks the lower triangle row by row") {
  FullParams p;
  p.theta = {0.5, 0, 0, 10};
  p.phi.mu1a = Eigen::Vector2d(1, 2);
  p.phi.mu2a = Eigen::Vector2d(3, 4);
  p.phi.sigma_aa.resize(2, 2);
  p.phi.sigma_aa << 5, 6, 6, 7;
  p.phi.sigma_ya = Eigen::Vector2d(0.1, 0.2);
  const Eigen::VectorXd f = flatten(p);
  REQUIRE(f.size() == 13);
  CHECK(f(8) == 5);
  CHECK(f(9) == 6);
  CHECK(f(10) == 7);
  CHECK(f(11) == 0.1);
  CHECK(f(12) == 0.2);
}

TEST_CASE("flatten/unflatten round trip is exact on random draws") {
  std::mt19937_64 rng(42);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t m = 1 + static_cast<std::size_t>(k % 3);
    const FullParams p = oracle::random_full(rng, m);
    const Eigen::VectorXd f = flatten(p);
    REQUIRE(static_cast<std::size_t>(f.size()) == flat_dim(m));
    const FullParams q = unflatten(f, m);
    CHECK(flatten(q) == f);
    CHECK(q.covariance() == p.covariance());
  }
  const PrimaryParams t{0.3, -0.25, 1.0 / 3.0, 0.7};
  const PrimaryParams u = unflatten_primary(flatten(t));
  CHECK(u.pi1 == t.pi1);
  CHECK(u.mu1y == t.mu1y);
  CHECK(u.mu2y == t.mu2y);
  CHECK(u.sigy2 == t.sigy2);
}

TEST_CASE("unflatten rejects a length mismatch") {
  CHECK_THROWS_AS(unflatten(Eigen::VectorXd::Zero(7), 1), InputError);
}

TEST_CASE("validate examples") {
  CHECK_FALSE(validate(scalar_full({0.5, 0, 0, 1}, 0, 0, 1, 0)).has_value());

  const auto v = validate(scalar_full({0.5, 0, 0, 1}, 0, 0, 1, 2));
  REQUIRE(v.has_value());
  CHECK(*v == "joint covariance not positive definite");

  const auto w = validate(scalar_full({1.0, 0, 0, 1}, 0, 0, 1, 0));
  REQUIRE(w.has_value());
  CHECK(*w == "pi1 out of open interval (0,1)");

  CHECK(*validate(PrimaryParams{0.5, 0, 0, 1e-7}) == "sigy2 below variance floor");
  CHECK_FALSE(validate(PrimaryParams{0.5, 0, 0, 1e-7}, 1e-8).has_value());

  FullParams empty;
  CHECK(*validate(empty) == "auxiliary dimension must be at least 1");
  CHECK_THROWS_AS(require_valid(PrimaryParams{0.0, 0, 0, 1}), InputError);
}

TEST_CASE("covariance Cholesky reconstructs the matrix") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 200; ++k) {
    const FullParams p = oracle::random_full(rng, 1 + static_cast<std::size_t>(k % 4));
    REQUIRE_FALSE(validate(p).has_value());
    const Eigen::MatrixXd cov = p.covariance();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    REQUIRE(llt.info() == Eigen::Success);
    const Eigen::MatrixXd L = llt.matrixL();
    CHECK((L * L.transpose() - cov).norm() / cov.norm() <= 1e-12);
  }
}

TEST_CASE("swapped exchanges components") {
  const FullParams p = scalar_full({0.6, -1.2, 1.2, 0.7}, 1.8, -1.8, 0.49, 0.1);
  const FullParams s = p.swapped();
  CHECK(s.theta.pi1 == doctest::Approx(0.4));
  CHECK(s.theta.mu1y == 1.2);
  CHECK(s.phi.mu1a(0) == -1.8);
  CHECK(s.covariance() == p.covariance());
  CHECK(flatten(s.swapped()) == flatten(p));
}

TEST_CASE("from_moments inverts mean and covariance accessors") {
  std::mt19937_64 rng(3);
  const FullParams p = oracle::random_full(rng, 2);
  const FullParams q = FullParams::from_moments(p.theta.pi1, p.mean1(), p.mean2(), p.covariance());
  CHECK(flatten(q) == flatten(p));
}

TEST_CASE("dataset construction and views") {
  std::vector<Record> recs;
  for (int i = 0; i < 4; ++i) {
    Record r;
    r.y = i;
    r.z = i % 2;
    r.a = Eigen::Vector2d(10.0 * i, 100.0 * i);
    recs.push_back(r);
  }
  const Dataset d(recs);
  CHECK(d.size() == 4);
  CHECK(d.has_z());
  CHECK(d.aux_dim() == 2);
  CHECK(d.a(2)[1] == 200.0);

  const Dataset c = d.with_aux_columns({1});
  CHECK(c.aux_dim() == 1);
  CHECK(c.a(3)[0] == 300.0);
  CHECK(d.without_aux().aux_dim() == 0);
  CHECK_FALSE(d.without_z().has_z());

  const Dataset w = d.without_record(1);
  CHECK(w.size() == 3);
  CHECK(w.y(1) == 2.0);
  CHECK(w.z(1) == 0);
  CHECK_THROWS_AS(d.with_aux_columns({2}), InputError);

  recs[2].z.reset();
  CHECK_THROWS_AS(Dataset{recs}, InputError);
}

TEST_CASE("dataset CSV parsing") {
  const Dataset d = parse_dataset_csv("y,z,a1\n0.5,1,2\n-1,0,3e-1\n");
  CHECK(d.size() == 2);
  CHECK(d.z(0) == 1);
  CHECK(d.a(1)[0] == doctest::Approx(0.3));

  const Dataset y_only = parse_dataset_csv("y\n1\n2\n\n3\n");
  CHECK(y_only.size() == 3);
  CHECK_FALSE(y_only.has_z());

  CHECK_THROWS_WITH_AS(parse_dataset_csv(""), "empty dataset file", InputError);
  CHECK_THROWS_WITH_AS(parse_dataset_csv("z,a1\n1,2\n"), "missing required column 'y'", InputError);
  CHECK_THROWS_WITH_AS(parse_dataset_csv("y,z\n1,1\n2,x\n"),
                       "line 3: cannot parse number 'x'", InputError);
  CHECK_THROWS_WITH_AS(parse_dataset_csv("y,z\n1,1\n2,2\n"), "line 3: z must be 0 or 1",
                       InputError);
  CHECK_THROWS_WITH_AS(parse_dataset_csv("y,a1\n1\n"), "line 2: expected 2 fields, got 1",
                       InputError);
  CHECK_THROWS_AS(parse_dataset_csv("y,a2\n1,2\n"), InputError);
  CHECK_THROWS_AS(parse_dataset_csv("y,w\n1,2\n"), InputError);
  CHECK_THROWS_AS(parse_dataset_csv("y\n"), InputError);
}

TEST_CASE("dataset CSV write/read round trip") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(20, 2);
  std::vector<double> y;
  std::vector<int> z;
  for (int i = 0; i < 20; ++i) {
    y.push_back(g(rng));
    z.push_back(i % 3 == 0);
    a(i, 0) = g(rng);
    a(i, 1) = g(rng);
  }
  const Dataset d(y, z, a);
  const auto path = std::filesystem::temp_directory_path() / "auxsel_roundtrip.csv";
  write_dataset_csv(d, path.string());
  const Dataset r = read_dataset_csv(path.string());
  std::filesystem::remove(path);
  REQUIRE(r.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(r.y(i) == d.y(i));
    CHECK(r.z(i) == d.z(i));
    CHECK(r.a(i)[1] == d.a(i)[1]);
  }
  CHECK_THROWS_WITH_AS(read_dataset_csv("/nonexistent/x.csv"),
                       "cannot open dataset file '/nonexistent/x.csv'", InputError);
}
