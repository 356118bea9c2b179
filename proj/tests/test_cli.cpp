#include "auxsel/dataset.hpp"
#include "auxsel/loocv.hpp"
#include "auxsel/report_io.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace auxsel;

namespace {

const std::string kCli = AUXSEL_CLI_PATH;
const std::string kFixtures = AUXSEL_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("auxsel_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args) {
  const int status = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Value of `column` in the single data row of a CSV table.
std::string csv_cell(const std::string& text, const std::string& column) {
  std::istringstream in(text);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  std::istringstream hs(header), rs(row);
  std::string h, v;
  while (std::getline(hs, h, ',') && std::getline(rs, v, ','))
    if (h == column) return v;
  return {};
}

}  // namespace

TEST_CASE("select picks a1 on Case 1 and none on Case 2") {
  const fs::path o1 = scratch("sel1");
  REQUIRE(run("select --input " + kFixtures + "/case1_n200_seed7.csv --aux a1 --seed 7 --out " +
              o1.string()) == 0);
  CHECK(slurp(o1 / "selected.txt") == "a1\n");
  CHECK(fs::exists(o1 / "select.csv"));
  CHECK(fs::exists(o1 / "manifest.json"));

  const fs::path o2 = scratch("sel2");
  REQUIRE(run("select --input " + kFixtures + "/case2_n200_seed7.csv --aux a1 --seed 7 --out " +
              o2.string()) == 0);
  CHECK(slurp(o2 / "selected.txt") == "none\n");
  fs::remove_all(o1);
  fs::remove_all(o2);
}

TEST_CASE("loocv output equals the library result") {
  const std::string input = kFixtures + "/case1_n100_seed11.csv";
  const fs::path o = scratch("loocv");
  REQUIRE(run("loocv --input " + input + " --seed 20240101 --out " + o.string()) == 0);
  LoocvOptions opt;
  opt.em.seed = 20240101;
  const LoocvReport rep = loocv_with_gap(read_dataset_csv(input).without_z(), opt);
  const std::string table = slurp(o / "loocv.csv");
  CHECK(csv_cell(table, "cv_value") == format_number(rep.cv_value));
  CHECK(csv_cell(table, "gap") == format_number(*rep.gap));
  CHECK(csv_cell(table, "risk_xb") == format_number(rep.risk->value));
  fs::remove_all(o);
}

TEST_CASE("repeated runs write identical files") {
  const fs::path a = scratch("rep_a");
  const fs::path b = scratch("rep_b");
  const std::string args = "reproduce 3 --T 20 --n 100 --seed 5 --workers ";
  REQUIRE(run(args + "1 --out " + a.string()) == 0);
  REQUIRE(run(args + "3 --out " + b.string()) == 0);
  for (const char* f : {"table3.csv", "table3.md"}) CHECK(slurp(a / f) == slurp(b / f));

  const fs::path s1 = scratch("sim1.csv");
  const fs::path s2 = scratch("sim2.csv");
  REQUIRE(run("simulate --n 50 --case 2 --seed 9 --output " + s1.string()) == 0);
  REQUIRE(run("simulate --n 50 --case 2 --seed 9 --output " + s2.string()) == 0);
  CHECK(slurp(s1) == slurp(s2));
  CHECK(read_dataset_csv(s1.string()).size() == 50);
  for (const auto& p : {a, b, s1, s2}) fs::remove_all(p);
}

TEST_CASE("input problems exit with code 2") {
  const fs::path o = scratch("err");
  CHECK(run("select --input /nonexistent.csv --aux a1 --out " + o.string()) == 2);
  CHECK(run("select --input " + kFixtures + "/case1_n200_seed7.csv --aux a9 --out " + o.string()) == 2);
  CHECK(run("reproduce 9") == 2);
  CHECK(run("--no-such-flag") == 2);
  CHECK(run("reproduce 7 --data /nonexistent/wine.data --out " + o.string()) == 2);
  fs::remove_all(o);
}
