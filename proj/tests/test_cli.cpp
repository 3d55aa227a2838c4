#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "madi/npd.hpp"
#include "madi/population.hpp"

namespace fs = std::filesystem;
using madi::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("madi_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

/// Value of the `column` field in the first data row of a CSV.
std::string csv_field(const fs::path& p, const std::string& column, std::size_t row = 1) {
  std::istringstream in(slurp(p));
  std::string header, line;
  std::getline(in, header);
  for (std::size_t r = 0; r < row; ++r) std::getline(in, line);
  std::vector<std::string> names, values;
  std::stringstream hs(header), ls(line);
  std::string f;
  while (std::getline(hs, f, ',')) names.push_back(f);
  while (std::getline(ls, f, ',')) values.push_back(f);
  values.resize(names.size());
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == column) return values[i];
  return "";
}

}  // namespace

TEST_CASE("gen-pop") {
  const fs::path dir = scratch("genpop");
  const auto r = call({"gen-pop", "--seed", "1", "--n", "100", "--p", "12", "--out", (dir / "pop.csv").string()});
  REQUIRE(r.code == 0);
  CHECK(line_count(dir / "pop.csv") == 101);
  call({"gen-pop", "--seed", "1", "--n", "100", "--p", "12", "--out", (dir / "pop2.csv").string()});
  CHECK(slurp(dir / "pop.csv") == slurp(dir / "pop2.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "pop.manifest.json"));
  CHECK(manifest["outputs"].size() == 1);
  CHECK(manifest["master_seed"] == 1);
  CHECK(call({"gen-pop", "--p", "1", "--out", (dir / "bad.csv").string()}).code == madi::cli::kExitUsage);
  CHECK(call({"gen-pop", "--bogus"}).code == madi::cli::kExitUsage);
  CHECK(call({}).code == madi::cli::kExitUsage);
}

TEST_CASE("gen-npd") {
  const fs::path dir = scratch("gennpd");
  REQUIRE(call({"gen-pop", "--seed", "2", "--n", "1000", "--out-dir", dir.string(), "--out", "pop.csv"}).code == 0);
  const std::string pop = (dir / "pop.csv").string();
  const madi::Population population = madi::load_csv(pop);

  SUBCASE("k1 top cutoff") {
    const auto r = call({"gen-npd", "--pop", pop, "--scenario", "k1", "--fraction", "0.9", "--out-prefix",
                         (dir / "k1").string()});
    REQUIRE(r.code == 0);
    const madi::Partition part = madi::load_partition(dir / "k1_partition.csv", population);
    CHECK(part.n_a() == 900);
    double min_a = 1e300, max_b = -1e300;
    for (std::size_t i : part.a_units()) min_a = std::min(min_a, population.y(i));
    for (std::size_t i : part.b_units()) max_b = std::max(max_b, population.y(i));
    CHECK(min_a >= max_b);
    CHECK_FALSE(fs::exists(dir / "k1_theta.csv"));
  }
  SUBCASE("sim1 summary") {
    const auto r = call({"gen-npd", "--pop", pop, "--scenario", "sim1", "--fraction", "0.7", "--seed", "4",
                         "--out-prefix", (dir / "s1").string()});
    REQUIRE(r.code == 0);
    const double mean_a = std::stod(csv_field(dir / "s1_summary.csv", "mean_y_a"));
    const double mean_b = std::stod(csv_field(dir / "s1_summary.csv", "mean_y_b"));
    CHECK(mean_a > mean_b);
    CHECK(r.out.find("mean_y_a=") != std::string::npos);
  }
  SUBCASE("k5 forced zeros") {
    REQUIRE(call({"gen-npd", "--pop", pop, "--scenario", "k5", "--fraction", "0.7", "--out-prefix",
                  (dir / "k5").string()})
                .code == 0);
    std::istringstream in(slurp(dir / "k5_theta.csv"));
    std::string line;
    std::getline(in, line);
    std::size_t zeros = 0;
    while (std::getline(in, line)) zeros += line.substr(line.find(',') + 1) == "0";
    CHECK(zeros == 50);
  }
  SUBCASE("unknown scenario") {
    const auto r = call({"gen-npd", "--pop", pop, "--scenario", "k12"});
    CHECK(r.code != 0);
  }
}

TEST_CASE("estimate") {
  const fs::path dir = scratch("estimate");
  SUBCASE("perfect model gives a degenerate interval at t_y") {
    std::string csv = "id,y,x1,x2\n";
    for (int i = 1; i <= 40; ++i) csv += std::to_string(i) + ",7," + std::to_string(i) + "," + std::to_string(i % 2) + "\n";
    write_file(dir / "pop.csv", csv);
    std::string part = "id,delta\n";
    for (int i = 1; i <= 40; ++i) part += std::to_string(i) + (i <= 25 ? ",1\n" : ",0\n");
    write_file(dir / "part.csv", part);
    const auto r = call({"estimate", "--pop", (dir / "pop.csv").string(), "--partition", (dir / "part.csv").string(),
                         "--draw", "5", "--strategy", "srs_b_madi_rf", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("ci: [280, 280]") != std::string::npos);
    CHECK(csv_field(dir / "estimate.csv", "point") == "280");
    CHECK(fs::exists(dir / "sample.csv"));
  }
  SUBCASE("GREG with too few units reports singular-model") {
    REQUIRE(call({"gen-pop", "--n", "200", "--out", (dir / "syn.csv").string()}).code == 0);
    const auto r = call({"estimate", "--pop", (dir / "syn.csv").string(), "--draw", "5", "--strategy", "srs_u_greg",
                         "--out-dir", dir.string()});
    CHECK(r.code == madi::cli::kExitSingularModel);
    CHECK(r.err.find("singular") != std::string::npos);
    CHECK(r.err.find("13 regressors") != std::string::npos);
    CHECK(csv_field(dir / "estimate.csv", "status") == "singular-model");
  }
  SUBCASE("DI on a census of a single B unit") {
    write_file(dir / "pop3.csv", "id,y,x1,x2\n1,5,1,0\n2,8,2,1\n3,2,3,0\n");
    write_file(dir / "part3.csv", "id,delta\n1,1\n2,0\n3,1\n");
    const auto r = call({"estimate", "--pop", (dir / "pop3.csv").string(), "--partition",
                         (dir / "part3.csv").string(), "--draw", "1", "--strategy", "srs_b_di_ht", "--out-dir",
                         dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("point: 15\n") != std::string::npos);
    CHECK(r.out.find("variance_estimate: 0\n") != std::string::npos);
  }
  SUBCASE("explicit sample file") {
    write_file(dir / "pop3.csv", "id,y,x1,x2\n1,5,1,0\n2,8,2,1\n3,2,3,0\n");
    write_file(dir / "s.csv", "id\n1\n3\n");
    const auto r = call({"estimate", "--pop", (dir / "pop3.csv").string(), "--sample", (dir / "s.csv").string(),
                         "--strategy", "srs_u_ht", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("point: 10.5\n") != std::string::npos);
  }
  SUBCASE("usage errors") {
    write_file(dir / "pop3.csv", "id,y,x1,x2\n1,5,1,0\n2,8,2,1\n3,2,3,0\n");
    CHECK(call({"estimate", "--pop", (dir / "pop3.csv").string(), "--strategy", "srs_u_ht"}).code ==
          madi::cli::kExitUsage);
    CHECK(call({"estimate", "--pop", (dir / "pop3.csv").string(), "--draw", "2", "--strategy", "srs_b_di_ht"}).code ==
          madi::cli::kExitUsage);
  }
}

TEST_CASE("simulate") {
  const fs::path dir = scratch("simulate");
  SUBCASE("enumeration config on an N = 8 fixture") {
    write_file(dir / "pop.csv",
               "id,y,x1,x2\n1,3,1,0\n2,10,4,1\n3,1,0.5,0\n4,7,3,1\n5,25,9,1\n6,4,2,0\n7,12,5,0\n8,8,3.5,1\n");
    write_file(dir / "part.csv", "id,delta\n1,1\n2,0\n3,0\n4,1\n5,0\n6,1\n7,0\n8,0\n");
    write_file(dir / "enum.cfg",
               "population = " + (dir / "pop.csv").string() + "\npartition = " + (dir / "part.csv").string() +
                   "\nstrategies = srs_u_ht,srs_b_di_ht,srs_b_madi_ols,srs_b_madi_rf\ngrid = 2,3\nenumerate = true\n"
                   "forest_min_leaf = 1\nforest_trees = 5\n");
    const auto r = call({"simulate", "--config", (dir / "enum.cfg").string(), "--out-dir", (dir / "out").string()});
    REQUIRE(r.code == 0);
    std::istringstream in(slurp(dir / "out" / "report.csv"));
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      const std::string bias = line.substr(0, line.find(',', line.find(',', line.find(',', line.find(',') + 1) + 1) + 1));
      (void)bias;
    }
    CHECK(rows == 8);
    for (std::size_t row = 1; row <= 8; ++row) CHECK(std::fabs(std::stod(csv_field(dir / "out" / "report.csv", "bias", row))) < 1e-9 * 70);
    const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
    CHECK(manifest["inputs"].size() == 3);
    for (const auto& input : manifest["inputs"])
      CHECK(input["sha256"] == madi::cli::sha256_hex(slurp(input["path"].get<std::string>())));
    std::vector<std::string> outputs = manifest["outputs"];
    for (const char* name : {"report.csv", "bias_vs_n.csv", "rmse_vs_n.csv", "coverage_vs_n.csv"})
      CHECK(std::find(outputs.begin(), outputs.end(), (dir / "out" / name).string()) != outputs.end());
  }
  SUBCASE("HT coverage at n = 25") {
    const auto r = call({"simulate", "--strategies", "srs_u_ht", "--grid", "25", "--replicates", "1000",
                         "--out-dir", (dir / "ht").string()});
    REQUIRE(r.code == 0);
    const double cov = std::stod(csv_field(dir / "ht" / "report.csv", "coverage"));
    CHECK(cov >= 0.93);
    CHECK(cov <= 0.97);
  }
  SUBCASE("scatter file for a propensity scenario") {
    const auto r = call({"simulate", "--set", "synthetic_n=500", "--scenario", "k7", "--strategies",
                         "srs_b_di_ht", "--grid", "10", "--replicates", "5", "--dump-replicates", "--out-dir",
                         (dir / "k7").string()});
    REQUIRE(r.code == 0);
    CHECK(line_count(dir / "k7" / "y_theta.csv") == 501);
    CHECK(line_count(dir / "k7" / "replicates.csv") == 6);
  }
  SUBCASE("malformed config key") {
    write_file(dir / "bad.cfg", "strategies = srs_u_ht\ngrdi = 25\n");
    const auto r = call({"simulate", "--config", (dir / "bad.cfg").string(), "--out-dir", (dir / "bad").string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("grdi") != std::string::npos);
    CHECK(r.err.find("line 2") != std::string::npos);
  }
  SUBCASE("same seed, different thread counts, identical report") {
    const std::vector<std::string> base{"simulate", "--set", "synthetic_n=2000", "--scenario", "sim1",
                                        "--strategies", "srs_u_ht,srs_b_madi_rf", "--grid", "30",
                                        "--replicates", "50", "--set", "forest_trees=10", "--seed", "7"};
    auto a = base, b = base;
    a.insert(a.end(), {"--threads", "1", "--out-dir", (dir / "t1").string()});
    b.insert(b.end(), {"--threads", "4", "--out-dir", (dir / "t4").string()});
    REQUIRE(call(a).code == 0);
    REQUIRE(call(b).code == 0);
    CHECK(slurp(dir / "t1" / "report.csv") == slurp(dir / "t4" / "report.csv"));
  }
}

TEST_CASE("sample-size") {
  const fs::path dir = scratch("samplesize");
  SUBCASE("worked example population gives 286 for HT") {
    std::ostringstream csv;
    csv << "id,y,x1,x2\n";
    const double dev = 2.0 * std::sqrt(999.0 / 1000.0);
    for (int i = 1; i <= 1000; ++i)
      csv << i << ',' << madi::format_real(10 + (i % 2 ? dev : -dev)) << ',' << i << ',' << (i % 3) << '\n';
    write_file(dir / "pop.csv", csv.str());
    const auto r = call({"sample-size", "--pop", (dir / "pop.csv").string(), "--cv", "0.01", "--strategies",
                         "srs_u_ht", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(csv_field(dir / "sample_size.csv", "required_n") == "286");
  }
  SUBCASE("perfect model needs the floor") {
    std::ostringstream csv, part;
    csv << "id,y,x1,x2\n";
    part << "id,delta\n";
    for (int i = 1; i <= 100; ++i) {
      csv << i << ',' << 5 + 3 * i + 2 * (i % 4) << ',' << i << ',' << (i % 4) << '\n';
      part << i << ',' << (i % 3 == 0 ? 0 : 1) << '\n';
    }
    write_file(dir / "lin.csv", csv.str());
    write_file(dir / "lin_part.csv", part.str());
    const auto r = call({"sample-size", "--pop", (dir / "lin.csv").string(), "--partition",
                         (dir / "lin_part.csv").string(), "--strategies", "srs_b_madi_ols", "--out-dir",
                         dir.string()});
    REQUIRE(r.code == 0);
    CHECK(csv_field(dir / "sample_size.csv", "required_n") == "2");
  }
  SUBCASE("scenario sweep") {
    REQUIRE(call({"gen-pop", "--n", "800", "--out", (dir / "syn.csv").string()}).code == 0);
    const auto r = call({"sample-size", "--pop", (dir / "syn.csv").string(), "--scenarios", "k1,k3", "--levels",
                         "2,8", "--strategies", "srs_u_ht,srs_b_madi_ols", "--cv-denominator", "y", "--out-dir",
                         dir.string()});
    REQUIRE(r.code == 0);
    CHECK(line_count(dir / "sample_size.csv") == 1 + 1 + 4);
  }
  SUBCASE("default levels sweep 1..9") {
    REQUIRE(call({"gen-pop", "--n", "800", "--out", (dir / "syn9.csv").string()}).code == 0);
    const auto r = call({"sample-size", "--pop", (dir / "syn9.csv").string(), "--scenarios", "k1", "--strategies",
                         "srs_b_madi_ols", "--out", (dir / "levels9.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(line_count(dir / "levels9.csv") == 1 + 9);
  }
  SUBCASE("zero CV is a usage error") {
    write_file(dir / "p.csv", "id,y,x1,x2\n1,5,1,0\n2,8,2,1\n3,2,3,0\n");
    CHECK(call({"sample-size", "--pop", (dir / "p.csv").string(), "--cv", "0"}).code == madi::cli::kExitUsage);
    CHECK(call({"sample-size", "--pop", (dir / "p.csv").string(), "--cv-denominator", "t"}).code ==
          madi::cli::kExitUsage);
  }
}
