#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nivtest/cli.hpp"
#include "nivtest/montecarlo.hpp"

using namespace nivtest;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int status = cli::run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

class TempCsv {
 public:
  explicit TempCsv(const std::string& content) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("nivtest_cli_" + std::to_string(++counter) + ".csv");
    std::ofstream f(path_);
    f << content;
  }
  ~TempCsv() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  std::string str() const { return path_.string(); }

 private:
  fs::path path_;
};

std::string sample_csv(int n, std::uint64_t seed) {
  const auto s = montecarlo::gen_exogeneity(n, 0.1, seed);
  std::ostringstream out;
  out << "y,z,w\n";
  char buf[96];
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", s.y(i), s.z(i),
                  s.w(i));
    out << buf;
  }
  return out.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exogeneity test emits a full JSON record") {
  TempCsv csv(sample_csv(120, 7));
  const auto r = run({"test", "exogeneity", "--input", csv.str(), "--y", "y",
                      "--z", "z", "--w", "w", "--k", "4", "--tau", "pow2",
                      "--M", "40", "--alpha", "0.05"});
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.contains("statistic"));
  CHECK(j["path"] == "mixture");
  CHECK(j.contains("critical_value"));
  CHECK(j.contains("p_value"));
  CHECK(j.contains("reject"));
  CHECK(j["diagnostics"]["M"] == 40);
  CHECK(j["diagnostics"]["m"] == 40);  // m defaults to M
  CHECK(j["diagnostics"]["k"] == 4);
  CHECK(j["diagnostics"]["tau"] == "pow2");

  // round trip: parse -> dump -> parse -> dump is stable
  const std::string dumped = j.dump(2);
  CHECK(nlohmann::json::parse(dumped).dump(2) == dumped);
}

TEST_CASE("simple test accepts exactly-null data") {
  TempCsv csv("y,z,w\n0.1,0.1,0.3\n0.4,0.4,0.6\n0.7,0.7,0.2\n0.2,0.2,0.9\n"
              "0.5,0.5,0.5\n0.9,0.9,0.1\n");
  const auto r = run({"test", "simple", "--input", csv.str(), "--null-poly",
                      "0,1", "--m", "3", "--M", "3"});
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["statistic"] == 0.0);
  CHECK(j["reject"] == false);
}

TEST_CASE("simple test requires exactly one null specification") {
  TempCsv csv(sample_csv(30, 9));
  CHECK(run({"test", "simple", "--input", csv.str()}).status == 2);
  CHECK(run({"test", "simple", "--input", csv.str(), "--null-poly", "0,1",
             "--null-series", "1"})
            .status == 2);
  // a Legendre series null works
  const auto r = run({"test", "simple", "--input", csv.str(), "--null-series",
                      "0.5,0.1", "--m", "4", "--M", "4"});
  CHECK(r.status == 0);
}

TEST_CASE("input error reporting") {
  TempCsv bad("y,z,w\n0.1,0.2\n");
  const auto r1 = run({"test", "exogeneity", "--input", bad.str()});
  CHECK(r1.status == 2);
  CHECK(r1.err.find("row 1") != std::string::npos);

  TempCsv nonnum("y,z,w\n0.1,abc,0.2\n");
  const auto r2 = run({"test", "exogeneity", "--input", nonnum.str()});
  CHECK(r2.status == 2);
  CHECK(r2.err.find("non-numeric") != std::string::npos);

  TempCsv missing("a,b,c\n1,2,3\n");
  const auto r3 = run({"test", "exogeneity", "--input", missing.str()});
  CHECK(r3.status == 2);
  CHECK(r3.err.find("no column named") != std::string::npos);

  const auto r4 = run({"test", "exogeneity", "--input", "/nonexistent.csv"});
  CHECK(r4.status == 2);
}

TEST_CASE("domain violations and the empirical-CDF transform") {
  TempCsv wide("y,z,w\n1,2.5,0.1\n2,-1.0,0.4\n3,0.7,0.9\n4,1.3,0.5\n"
               "5,0.2,0.6\n6,0.9,0.2\n7,0.4,0.8\n8,1.1,0.3\n");
  const auto r1 = run({"test", "exogeneity", "--input", wide.str(), "--k", "2",
                       "--m", "3", "--M", "3"});
  CHECK(r1.status == 2);
  const auto r2 = run({"test", "exogeneity", "--input", wide.str(), "--k", "2",
                       "--m", "3", "--M", "3", "--transform"});
  CHECK(r2.status == 0);
}

TEST_CASE("ecdf_transform maps into (0,1) with midranks for ties") {
  const auto t = cli::ecdf_transform({5.0, -1.0, 5.0, 2.0});
  CHECK(t[1] == doctest::Approx(1.0 / 5.0));
  CHECK(t[3] == doctest::Approx(2.0 / 5.0));
  CHECK(t[0] == doctest::Approx(3.5 / 5.0));
  CHECK(t[2] == doctest::Approx(3.5 / 5.0));
}

TEST_CASE("quantile subcommand") {
  const auto r1 = run({"quantile", "--lambdas", "1", "--alpha", "0.05"});
  REQUIRE(r1.status == 0);
  CHECK(std::abs(std::stod(r1.out) - 3.8414588206941254) <= 1e-3);

  const auto r2 = run({"quantile", "--lambdas", "2", "--alpha", "0.05"});
  REQUIRE(r2.status == 0);
  CHECK(std::abs(std::stod(r2.out) - 2.0 * 3.8414588206941254) <= 2e-3);

  const auto r3 = run({"quantile", "--lambdas", "0"});
  CHECK(r3.status == 2);
  CHECK(r3.err.find("DegenerateMixture") != std::string::npos);

  const auto r4 = run({"quantile", "--lambdas", "1,junk"});
  CHECK(r4.status == 2);
}

TEST_CASE("mc subcommand is deterministic and filters rows") {
  const std::vector<std::string> args = {"mc",     "table2", "--n",
                                         "250",    "--reps", "2",
                                         "--seed", "7",      "--variant",
                                         "kappa=0.25"};
  const auto r1 = run(args);
  const auto r2 = run(args);
  REQUIRE(r1.status == 0);
  CHECK(r1.out == r2.out);  // byte identical

  std::istringstream lines(r1.out);
  std::string header, row1, row2, extra;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  CHECK(!std::getline(lines, extra));
  CHECK(header ==
        "experiment\tvariant\tn\tstatistic_id\treps\trejections\trej_prob\t"
        "mc_se");
  CHECK(row1.find("kappa=0.25") != std::string::npos);
  CHECK(row1.find("S1e") != std::string::npos);
  CHECK(row2.find("S2e") != std::string::npos);

  const auto bad = run({"mc", "table7"});
  CHECK(bad.status == 2);
  CHECK(bad.err.find("UnknownTable") != std::string::npos);
}

TEST_CASE("mc json format carries bookkeeping fields") {
  const auto r = run({"mc", "table2", "--n", "250", "--reps", "2", "--seed",
                      "3", "--stat", "S2e", "--variant", "kappa=0.15",
                      "--format", "json"});
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 1);
  CHECK(j[0]["statistic_id"] == "S2e");
  CHECK(j[0]["reps"] == 2);
  CHECK(j[0].contains("clamp_fraction"));
  CHECK(j[0].contains("errors"));
}

TEST_CASE("tsv output keeps full precision") {
  TempCsv csv(sample_csv(90, 11));
  const auto r = run({"test", "exogeneity", "--input", csv.str(), "--k", "3",
                      "--m", "5", "--M", "5", "--format", "tsv"});
  REQUIRE(r.status == 0);
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  // statistic column carries >= 15 significant digits
  const std::string stat = row.substr(0, row.find('\t'));
  int digits = 0;
  for (char c : stat)
    if (c >= '0' && c <= '9') ++digits;
  CHECK(digits >= 15);
}

TEST_CASE("help and parse errors") {
  std::ostringstream out, err;
  CHECK(cli::run_cli({"--help"}, out, err) == 0);
  CHECK(out.str().find("test") != std::string::npos);
  CHECK(run({"bogus"}).status == 2);
  CHECK(run({}).status == 2);
}

}  // TEST_SUITE
