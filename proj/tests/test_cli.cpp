#include <doctest.h>
#include <json.hpp>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

// End-to-end contract tests for the poisson-transform binary.  Every run is
// seeded, so outputs are frozen byte-for-byte where the contract says so.

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path& scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "ptrans_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// `env` is a KEY=VALUE prefix; by default the seed variable is scrubbed so the
// outer environment cannot leak into determinism checks.
CliResult run_cli(const std::string& args, const std::string& env = "") {
  const fs::path out = scratch() / "run_stdout.txt";
  const fs::path err = scratch() / "run_stderr.txt";
  std::string cmd = "env -u POISSON_TRANSFORM_SEED ";
  if (!env.empty()) cmd += env + " ";
  cmd += std::string(CLI_BINARY_PATH) + " " + args;
  cmd += " > " + out.string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::vector<std::string> sorted_keys(const json& object) {
  std::vector<std::string> keys;
  for (auto it = object.begin(); it != object.end(); ++it) keys.push_back(it.key());
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size()))
    ++count;
  return count;
}

}  // namespace

TEST_CASE("simulate writes a deterministic csv series") {
  const CliResult a = run_cli("simulate --n 20 --seed 42");
  const CliResult b = run_cli("simulate --n 20 --seed 42");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  const auto lines = split_lines(a.out);
  REQUIRE(lines.size() == 22);  // header plus y0 plus 20 observations
  CHECK(lines[0] == "t,y");
  CHECK(lines[1] == "0,0");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv(lines[i]);
    REQUIRE(fields.size() == 2);
    CHECK(std::stoul(fields[0]) == i - 1);
    const double y = std::stod(fields[1]);
    CHECK(y >= -1.0);
    CHECK(y <= 1.0);
  }

  const CliResult other = run_cli("simulate --n 20 --seed 43");
  CHECK(other.out != a.out);
}

TEST_CASE("the environment seed applies only when no flag is given") {
  const CliResult flag = run_cli("simulate --n 15 --seed 777");
  const CliResult env = run_cli("simulate --n 15", "POISSON_TRANSFORM_SEED=777");
  CHECK(env.out == flag.out);

  const CliResult overridden =
      run_cli("simulate --n 15 --seed 888", "POISSON_TRANSFORM_SEED=777");
  const CliResult plain = run_cli("simulate --n 15 --seed 888");
  CHECK(overridden.out == plain.out);
  CHECK(overridden.out != flag.out);

  const CliResult bad = run_cli("simulate --n 15", "POISSON_TRANSFORM_SEED=pony");
  CHECK(bad.code == 2);
}

TEST_CASE("fit emits the documented json keys per method") {
  const fs::path series = scratch() / "series.csv";
  REQUIRE(run_cli("simulate --n 60 --seed 7 --theta1 0.4 --theta2 3 --out " +
                  series.string())
              .code == 0);

  const std::map<std::string, std::vector<std::string>> expected_keys{
      {"ml",
       {"converged", "covariance", "method", "nu_summary", "objective", "seed",
        "theta_hat"}},
      {"poisson",
       {"converged", "covariance", "method", "nu_summary", "objective", "seed",
        "theta_hat"}},
      {"sga",
       {"converged", "k", "method", "nu_summary", "objective", "seed", "theta_hat"}},
      {"ncd-iid",
       {"converged", "k", "method", "nu_summary", "objective", "seed", "theta_hat"}},
      {"ncd-param",
       {"converged", "k", "method", "nu_summary", "objective", "seed", "theta_hat"}},
      {"ncd-semi",
       {"converged", "k", "lambda", "method", "nu_summary", "objective", "seed",
        "theta_hat"}},
      {"ncd-ignore",
       {"converged", "k", "method", "nu_summary", "objective", "seed", "theta_hat"}},
  };
  const std::map<std::string, std::string> expected_kind{
      {"ml", "none"},          {"poisson", "scalar"},  {"sga", "scalar"},
      {"ncd-iid", "scalar"},   {"ncd-param", "per_ancestor"},
      {"ncd-semi", "kernel"},  {"ncd-ignore", "scalar"},
  };

  for (const auto& [method, keys] : expected_keys) {
    CAPTURE(method);
    std::string extra;
    if (method == "ncd-semi") extra = " --lambda 0.1";
    if (method == "sga") extra = " --k 10";
    const CliResult r =
        run_cli("fit " + series.string() + " --method " + method + " --seed 7" + extra);
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    CHECK(sorted_keys(doc) == keys);
    CHECK(doc["method"] == method);
    CHECK(doc["seed"] == 7);
    CHECK(doc["converged"].is_boolean());
    CHECK(doc["objective"].is_number());
    REQUIRE(doc["theta_hat"].is_array());
    CHECK(doc["theta_hat"].size() == 2);
    CHECK(doc["nu_summary"]["kind"] == expected_kind.at(method));
  }
}

TEST_CASE("fit recovers the generator and repeats byte for byte") {
  const fs::path series = scratch() / "recover.csv";
  REQUIRE(run_cli("simulate --n 400 --seed 11 --theta1 0.5 --theta2 2 --out " +
                  series.string())
              .code == 0);
  const CliResult a = run_cli("fit " + series.string() + " --method ml");
  const CliResult b = run_cli("fit " + series.string() + " --method ml");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  const json doc = json::parse(a.out);
  REQUIRE(doc["converged"] == true);
  CHECK(std::abs(doc["theta_hat"][0].get<double>() - 0.5) < 0.3);
  CHECK(std::abs(doc["theta_hat"][1].get<double>() - 2.0) < 0.8);
  REQUIRE(doc["covariance"].size() == 2);
  CHECK(doc["covariance"][0][0].get<double>() > 0.0);

  const CliResult csv =
      run_cli("fit " + series.string() + " --method ml --format csv");
  const auto lines = split_lines(csv.out);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "method,theta1_hat,theta2_hat,objective,converged,seed");
  CHECK(split_csv(lines[1])[0] == "ml");
}

TEST_CASE("fit fails with exit code 2 on unusable input") {
  const fs::path bad = scratch() / "bad.csv";
  std::ofstream(bad) << "t,y\n0,0\n2,oops\n";
  const CliResult malformed = run_cli("fit " + bad.string());
  CHECK(malformed.code == 2);
  CHECK(malformed.err.find("bad.csv line 3") != std::string::npos);

  const fs::path wrong_header = scratch() / "header.csv";
  std::ofstream(wrong_header) << "time,value\n0,0\n1,0.5\n";
  CHECK(run_cli("fit " + wrong_header.string()).code == 2);

  const CliResult missing = run_cli("fit " + (scratch() / "nope.csv").string());
  CHECK(missing.code == 2);
  CHECK(missing.err.find("nope.csv") != std::string::npos);

  const CliResult unknown = run_cli("fit --n 20 --method banana");
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("banana") != std::string::npos);

  CHECK(run_cli("fit --method ml").code == 2);  // no input and no --n
}

TEST_CASE("check filters suites and honors the corruption hook") {
  const CliResult one = run_cli("check --only theorem1");
  REQUIRE(one.code == 0);
  CHECK(one.out.find("theorem1") != std::string::npos);
  CHECK(one.out.find("1 of 1 checks passed") != std::string::npos);

  const CliResult corrupted = run_cli("check --only gradients --corrupt-gradient");
  CHECK(corrupted.code == 1);
  CHECK(corrupted.out.find("FAIL") != std::string::npos);
  CHECK(corrupted.out.find("0 of 1 checks passed") != std::string::npos);

  const CliResult clean = run_cli("check --only gradients");
  CHECK(clean.code == 0);

  CHECK(run_cli("check --only nope").code == 2);
}

TEST_CASE("benchmark rows, summary, and svg agree with each other") {
  const fs::path rows_path = scratch() / "rows.csv";
  const fs::path svg_path = scratch() / "chart.svg";
  const CliResult r = run_cli(
      "benchmark --n 60 --k 5 --reps 3 --method ml,ncd-param --seed 5 --out " +
      rows_path.string() + " --svg " + svg_path.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("rows:") != std::string::npos);
  CHECK(r.out.find("summary:") != std::string::npos);
  CHECK(r.out.find("svg:") != std::string::npos);

  const auto rows = split_lines(slurp(rows_path));
  REQUIRE(rows.size() == 7);  // header plus 2 methods x 3 reps
  CHECK(rows[0] ==
        "method,n,k,rep,theta1_true,theta2_true,theta1_hat,theta2_hat,err1,err2,ms");

  // Re-aggregate the rows and demand the summary file equals the recount.
  struct Cell {
    int count = 0;
    int failures = 0;
    double sum1 = 0, sum2 = 0, sq1 = 0, sq2 = 0;
  };
  std::map<std::string, Cell> cells;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = split_csv(rows[i]);
    REQUIRE(f.size() == 11);
    Cell& cell = cells[f[0] + "," + f[1] + "," + f[2]];
    if (f[6].empty()) {
      ++cell.failures;
      continue;
    }
    ++cell.count;
    const double e1 = std::stod(f[8]), e2 = std::stod(f[9]);
    cell.sum1 += e1;
    cell.sum2 += e2;
    cell.sq1 += e1 * e1;
    cell.sq2 += e2 * e2;
    CHECK(std::abs(std::stod(f[6]) - std::stod(f[4]) - e1) < 1e-12);
    CHECK(std::abs(std::stod(f[7]) - std::stod(f[5]) - e2) < 1e-12);
  }

  const fs::path summary_path = scratch() / "rows_summary.csv";
  const auto summary = split_lines(slurp(summary_path));
  REQUIRE(summary.size() == cells.size() + 1);
  CHECK(summary[0] == "method,n,k,count,failures,bias1,bias2,rmse1,rmse2");
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto f = split_csv(summary[i]);
    REQUIRE(f.size() == 9);
    REQUIRE(cells.count(f[0] + "," + f[1] + "," + f[2]) == 1);
    const Cell& cell = cells.at(f[0] + "," + f[1] + "," + f[2]);
    CHECK(std::stoi(f[3]) == cell.count);
    CHECK(std::stoi(f[4]) == cell.failures);
    const double inv = 1.0 / cell.count;
    CHECK(std::stod(f[5]) == doctest::Approx(cell.sum1 * inv).epsilon(1e-9));
    CHECK(std::stod(f[6]) == doctest::Approx(cell.sum2 * inv).epsilon(1e-9));
    CHECK(std::stod(f[7]) == doctest::Approx(std::sqrt(cell.sq1 * inv)).epsilon(1e-9));
    CHECK(std::stod(f[8]) == doctest::Approx(std::sqrt(cell.sq2 * inv)).epsilon(1e-9));
  }

  const std::string svg = slurp(svg_path);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("xmlns=") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  // one polyline per method per panel; two panels (theta1, theta2) per k value
  CHECK(count_occurrences(svg, "<polyline") == 4);

  // determinism of the whole pipeline, ignoring the wall-clock column
  const fs::path rows2 = scratch() / "rows_again.csv";
  REQUIRE(run_cli("benchmark --n 60 --k 5 --reps 3 --method ml,ncd-param --seed 5 "
                  "--out " +
                  rows2.string())
              .code == 0);
  const auto strip_ms = [](const std::string& text) {
    std::string kept;
    for (const auto& line : split_lines(text))
      kept += line.substr(0, line.rfind(',')) + "\n";
    return kept;
  };
  CHECK(strip_ms(slurp(rows2)) == strip_ms(slurp(rows_path)));
}

TEST_CASE("a config file fills defaults but explicit flags win") {
  const fs::path cfg = scratch() / "cfg.ini";
  std::ofstream(cfg) << "[simulate]\nn=5\ntheta1=0.3\n";

  const CliResult from_config = run_cli("--config " + cfg.string() + " simulate");
  const CliResult from_flags = run_cli("simulate --n 5 --theta1 0.3");
  REQUIRE(from_config.code == 0);
  CHECK(from_config.out == from_flags.out);
  CHECK(split_lines(from_config.out).size() == 7);

  const CliResult overridden =
      run_cli("--config " + cfg.string() + " simulate --n 3");
  CHECK(split_lines(overridden.out).size() == 5);
}
