// auxsel command-line interface.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure.

#include "auxsel/criteria.hpp"
#include "auxsel/dataset.hpp"
#include "auxsel/em.hpp"
#include "auxsel/errors.hpp"
#include "auxsel/infomat.hpp"
#include "auxsel/loocv.hpp"
#include "auxsel/realdata.hpp"
#include "auxsel/report_io.hpp"
#include "auxsel/simlab.hpp"
#include "auxsel/version.hpp"

#include <CLI11.hpp>
#include <curl/curl.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace auxsel;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr const char* kWineUrl =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/wine/wine.data";

struct Common {
  std::uint64_t seed = 20240101;
  int workers = 1;
  std::string out = "auxsel-out";
};

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string data_dir() {
  if (const char* env = std::getenv("AUXSEL_DATA_DIR"); env && *env) return env;
  return AUXSEL_DEFAULT_DATA_DIR;
}

// Collects output files and writes the run manifest last.
class Run {
 public:
  Run(std::string command, const Common& common, json config)
      : command_(std::move(command)), common_(common), config_(std::move(config)),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(common_.out);
  }

  void write(const std::string& name, const std::string& text) {
    const fs::path p = fs::path(common_.out) / name;
    write_text_file(p.string(), text);
    files_.push_back(name);
  }

  void table(const std::string& stem, const Table& t) {
    write(stem + ".csv", to_csv(t));
    write(stem + ".md", to_markdown(t));
  }

  void finish() const {
    json m;
    m["command"] = command_;
    m["config"] = config_;
    m["seed"] = common_.seed;
    m["workers"] = common_.workers;
    m["version"] = kVersion;
    m["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json outs = json::array();
    for (const auto& f : files_) {
      const std::string bytes = read_file(fs::path(common_.out) / f);
      outs.push_back({{"file", f}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
    }
    m["outputs"] = outs;
    write_text_file((fs::path(common_.out) / "manifest.json").string(), m.dump(2) + "\n");
  }

 private:
  std::string command_;
  Common common_;
  json config_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> files_;
};

// "a1,a3" or "1,3" -> 0-based column indices.
std::vector<std::size_t> parse_aux_spec(const std::string& spec, std::size_t m) {
  std::vector<std::size_t> cols;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::string t = tok;
    if (!t.empty() && (t[0] == 'a' || t[0] == 'A')) t = t.substr(1);
    std::size_t k = 0;
    try {
      std::size_t used = 0;
      k = std::stoul(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw InputError("bad auxiliary column '" + tok + "' in '" + spec + "'");
    }
    if (k < 1 || k > m)
      throw InputError("auxiliary column '" + tok + "' out of range (data has " +
                       std::to_string(m) + ")");
    cols.push_back(k - 1);
  }
  if (cols.empty()) throw InputError("empty auxiliary column spec");
  return cols;
}

std::string display_label(const std::string& label) {
  return label == kNoAuxiliary ? "none" : label;
}

int cmd_select(const Common& common, const std::string& input, const std::vector<std::string>& aux,
               const std::string& criterion, bool dump) {
  const Dataset raw = read_dataset_csv(input);
  const Dataset data = raw.without_z();
  EmOptions em;
  em.seed = common.seed;
  Run run("select", common,
          {{"input", input}, {"aux", aux}, {"criterion", criterion}, {"dump_matrices", dump}});

  const bool latent = criterion != "tic";
  InfoOptions io;
  io.latent = latent;
  io.workers = common.workers;

  std::vector<std::pair<std::string, CriterionReport>> reports;
  std::vector<std::string> failures;
  const Dataset ydata = data.without_aux();
  const auto yfit = fit_em_y(ydata, em);
  try {
    const InfoMatrices m = estimate_info_y(ydata, yfit.params, io);
    if (dump) {
      for (const auto& [name, mat] : {std::pair{"I_y", &m.I_y}, {"J_y", &m.J_b}, {"I_zy", &m.I_zy}}) {
        const std::string f = std::string("y_") + name + ".csv";
        write_matrix_csv(*mat, (fs::path(common.out) / f).string());
      }
    }
    CriterionReport r = criterion == "aic"    ? aic_xy(ydata, yfit.params, m)
                        : criterion == "risk" ? risk_xb(ydata, yfit.params, m)
                                              : tic(ydata, yfit.params, m);
    reports.emplace_back(std::string(kNoAuxiliary), std::move(r));
  } catch (const IllConditionedError& e) {
    failures.push_back("y: " + std::string(e.what()));
  }

  for (const auto& spec : aux) {
    const Dataset b = data.with_aux_columns(parse_aux_spec(spec, data.aux_dim()));
    try {
      const FullParams beta = fit_em_b(b, em).params;
      const InfoMatrices m = estimate_info(b, beta, beta.theta, io);
      if (dump) {
        for (const auto& [name, mat] : {std::pair{"I_b", &m.I_b}, {"J_b", &m.J_b},
                                        {"K_by", &m.K_by}, {"I_y", &m.I_y}, {"I_zy", &m.I_zy}}) {
          std::string stem = spec;
          for (char& c : stem)
            if (c == ',') c = '_';
          write_matrix_csv(*mat, (fs::path(common.out) / (stem + "_" + name + ".csv")).string());
        }
      }
      reports.emplace_back(spec, criterion == "aic" ? aic_xb(b, beta, m) : risk_xb(b, beta, m));
    } catch (const IllConditionedError& e) {
      failures.push_back(spec + ": " + e.what());
    }
  }
  for (const auto& f : failures) std::cerr << "candidate skipped, " << f << "\n";
  if (reports.empty()) throw NumericalError("no candidate could be scored");

  const std::string selected = select_auxiliary(reports);
  Table t = criterion_table(reports);
  for (auto& row : t.rows) row[0] = display_label(row[0]);
  run.table("select", t);
  run.write("selected.txt", display_label(selected) + "\n");
  std::cout << to_markdown(t) << "selected: " << display_label(selected) << "\n";
  run.finish();
  return 0;
}

ExperimentConfig experiment_config(const Common& common, std::size_t T,
                                   const std::vector<std::size_t>& n_list) {
  ExperimentConfig c;
  c.seed = common.seed;
  c.workers = common.workers;
  c.T = T;
  c.n_list = n_list;
  return c;
}

int cmd_reproduce(const Common& common, int table, std::size_t T, std::vector<std::size_t> n_list,
                  bool full, const std::string& wine_path, std::size_t splits, bool density) {
  if (table < 2 || table > 7) throw InputError("table id must be one of 2..7");
  if (full) {
    T = 10000;
    if (n_list.empty()) n_list = {100, 200, 500, 1000, 2000, 5000};
  }
  if (n_list.empty()) {
    if (table == 2) n_list = {100, 1000};
    else if (table == 4) n_list = {100, 500};
    else n_list = {100};
  }
  json cfg{{"table", table}, {"T", T}, {"n", n_list}, {"full", full}, {"density_grid", density}};
  const std::string stem = "table" + std::to_string(table);

  if (table == 7) {
    WineConfig w;
    w.csv_path = wine_path.empty() ? (fs::path(data_dir()) / "wine.data").string() : wine_path;
    w.n_splits = splits;
    w.seed = common.seed;
    w.workers = common.workers;
    cfg = {{"table", 7}, {"wine", w.csv_path}, {"splits", splits}};
    Run run("reproduce", common, cfg);
    const Table t = wine_table(run_wine(w));
    run.table(stem, t);
    std::cout << to_markdown(t);
    run.finish();
    return 0;
  }

  Run run("reproduce", common, cfg);
  const ExperimentConfig config = experiment_config(common, T, n_list);
  if (table == 2) {
    const Table t = unbiasedness_table(run_unbiasedness(config));
    run.table(stem, t);
    std::cout << to_markdown(t);
    run.finish();
    return 0;
  }

  const int case_id = (table == 3 || table == 5) ? 1 : 2;
  const TrueModelSpec spec;
  const double ref = loss_x(spec.theta0(), spec, config.quadrature_nodes);
  std::vector<SelectionRow> sel;
  std::vector<RiskRow> risk;
  for (std::size_t n : n_list) {
    const auto grid = density ? run_replicates(config, n, {1, 2}) : run_replicates(config, n, {case_id});
    const auto outcomes = column(grid, density ? static_cast<std::size_t>(case_id - 1) : 0);
    sel.push_back(summarize_selection(outcomes, config.max_excluded_fraction));
    for (auto& r : summarize_risk(outcomes, ref, config.max_excluded_fraction)) risk.push_back(r);
    if (density) {
      std::vector<std::pair<ReplicateOutcome, ReplicateOutcome>> pairs;
      for (const auto& row : grid)
        if (!row[0].excluded && !row[1].excluded) pairs.emplace_back(row[0], row[1]);
      const std::size_t k = pick_typical(pairs);
      for (int c = 0; c < 2; ++c) {
        const ReplicateOutcome& o = c == 0 ? pairs[k].first : pairs[k].second;
        run.write("typical_n" + std::to_string(n) + "_case" + std::to_string(c + 1) + "_density.csv",
                  to_csv(density_grid(o.theta_x, o.theta_y, o.beta_b.theta, -4.0, 4.0, 201)));
      }
    }
  }
  const Table t = (table == 3 || table == 4) ? selection_table(sel) : risk_table(risk);
  run.table(stem, t);
  std::cout << to_markdown(t);
  run.finish();
  return 0;
}

int cmd_loocv(const Common& common, const std::string& input, const std::string& aux, bool no_latent,
              bool no_aux, bool cold) {
  Dataset data = read_dataset_csv(input).without_z();
  if (!aux.empty()) data = data.with_aux_columns(parse_aux_spec(aux, data.aux_dim()));
  LoocvOptions o;
  o.em.seed = common.seed;
  o.workers = common.workers;
  o.latent = !no_latent;
  o.use_aux = !no_aux;
  o.cold_start = cold;
  Run run("loocv", common,
          {{"input", input}, {"aux", aux}, {"latent", o.latent}, {"use_aux", o.use_aux},
           {"cold_start", cold}});
  const LoocvReport rep = loocv_with_gap(data, o);
  Table t{{"n", "cv_value", "two_n_cv", "risk_xb", "sum_f", "gap", "refit_failures"}, {}};
  const double n = static_cast<double>(data.size());
  t.add_row({std::to_string(data.size()), format_number(rep.cv_value),
             format_number(2.0 * n * rep.cv_value), format_number(rep.risk->value),
             format_number(*rep.sum_f), format_number(*rep.gap),
             std::to_string(rep.refit_failures)});
  Table folds{{"record", "g"}, {}};
  for (std::size_t i = 0; i < rep.per_fold_g.size(); ++i)
    folds.add_row({std::to_string(i), format_number(rep.per_fold_g[i])});
  run.table("loocv", t);
  run.write("loocv_folds.csv", to_csv(folds));
  std::cout << to_markdown(t);
  run.finish();
  return 0;
}

std::size_t curl_sink(char* ptr, std::size_t size, std::size_t nmemb, void* user) {
  static_cast<std::string*>(user)->append(ptr, size * nmemb);
  return size * nmemb;
}

int cmd_fetch_wine(const std::string& url, std::string dest) {
  if (dest.empty()) dest = (fs::path(data_dir()) / "wine.data").string();
  std::string body;
  CURL* h = curl_easy_init();
  if (!h) throw std::runtime_error("curl initialization failed");
  curl_easy_setopt(h, CURLOPT_URL, url.c_str());
  curl_easy_setopt(h, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(h, CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(h, CURLOPT_TIMEOUT, 60L);
  curl_easy_setopt(h, CURLOPT_WRITEFUNCTION, curl_sink);
  curl_easy_setopt(h, CURLOPT_WRITEDATA, &body);
  const CURLcode rc = curl_easy_perform(h);
  curl_easy_cleanup(h);
  if (rc != CURLE_OK)
    throw InputError(std::string("download failed: ") + curl_easy_strerror(rc));
  parse_wine(body, kWineCanonicalRows);
  if (const auto parent = fs::path(dest).parent_path(); !parent.empty())
    fs::create_directories(parent);
  write_text_file(dest, body);
  std::cout << "wrote " << dest << " (" << kWineCanonicalRows << " rows)\n";
  return 0;
}

int cmd_simulate(const Common& common, std::size_t n, int case_id, const std::string& output) {
  TrueModelSpec spec;
  spec.case_id = case_id;
  const Dataset d = case_view(generate(spec, n, common.seed), case_id);
  if (const auto parent = fs::path(output).parent_path(); !parent.empty())
    fs::create_directories(parent);
  write_dataset_csv(d, output);
  std::cout << "wrote " << output << " (n=" << n << ", case " << case_id << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Auxiliary-variable selection for latent-variable mixture models"};
  app.require_subcommand(1);
  Common common;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Master seed");
    sub->add_option("--workers", common.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", common.out, "Output directory");
  };

  std::string input, criterion = "aic", aux_one;
  std::vector<std::string> aux;
  bool dump = false;
  auto* select = app.add_subcommand("select", "Score candidate auxiliary sets on a dataset");
  add_common(select);
  select->add_option("--input", input, "CSV with y, optional z, a1..am")->required();
  select->add_option("--aux", aux, "Candidate auxiliary set, e.g. a1 or a1,a2 (repeatable)");
  select->add_option("--criterion", criterion, "aic, risk or tic")
      ->check(CLI::IsMember({"aic", "risk", "tic"}));
  select->add_flag("--dump-matrices", dump, "Write the information matrices as CSV");

  int table = 0;
  std::size_t T = 2000, splits = 100;
  std::vector<std::size_t> n_list;
  bool full = false, density = false;
  std::string wine_path;
  auto* reproduce = app.add_subcommand("reproduce", "Run a simulation or Wine experiment table");
  add_common(reproduce);
  reproduce->add_option("table", table, "Table id (2-7)")->required()->check(CLI::Range(2, 7));
  reproduce->add_option("--T", T, "Replicates")->check(CLI::Range(2, 100000000));
  reproduce->add_option("--n", n_list, "Sample size (repeatable)");
  reproduce->add_flag("--full", full, "T = 10000 and the full list of sample sizes");
  reproduce->add_option("--data", wine_path, "Wine data file (table 7)");
  reproduce->add_option("--splits", splits, "Train/test splits (table 7)")->check(CLI::PositiveNumber);
  reproduce->add_flag("--density-grid", density, "Write density curves of the typical replicate");

  bool no_latent = false, no_aux = false, cold = false;
  auto* loocv = app.add_subcommand("loocv", "Leave-one-out risk and its gap to risk_xb");
  add_common(loocv);
  loocv->add_option("--input", input, "CSV with y, optional z, a1..am")->required();
  loocv->add_option("--aux", aux_one, "Auxiliary columns to use (default all)");
  loocv->add_flag("--no-latent", no_latent, "Treat X = Y (drop the latent term)");
  loocv->add_flag("--no-aux", no_aux, "Fit from Y alone");
  loocv->add_flag("--cold-start", cold, "Refit every fold with all restarts");

  std::string url = kWineUrl, dest;
  auto* fetch = app.add_subcommand("fetch-wine", "Download the Wine data file");
  fetch->add_option("--url", url, "Source URL");
  fetch->add_option("--dest", dest, "Destination (default $AUXSEL_DATA_DIR/wine.data)");

  std::size_t sim_n = 200;
  int sim_case = 1;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Write a simulated dataset (y, z, a1)");
  add_common(simulate);
  simulate->add_option("--n", sim_n, "Sample size")->check(CLI::PositiveNumber);
  simulate->add_option("--case", sim_case, "1 or 2")->check(CLI::IsMember({1, 2}));
  simulate->add_option("--output", sim_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*select) return cmd_select(common, input, aux, criterion, dump);
    if (*reproduce) return cmd_reproduce(common, table, T, n_list, full, wine_path, splits, density);
    if (*loocv) return cmd_loocv(common, input, aux_one, no_latent, no_aux, cold);
    if (*fetch) return cmd_fetch_wine(url, dest);
    if (*simulate) return cmd_simulate(common, sim_n, sim_case, sim_out);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
