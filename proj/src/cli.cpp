#include "nivtest/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace nivtest::cli {

namespace {

using basis::BasisFamily;
using basis::WeightKind;
using estimators::Sample;
using teststats::Path;
using teststats::TestConfig;
using teststats::TestResult;

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

WeightKind parse_tau(const std::string& s) {
  if (s == "id" || s == "identity") return WeightKind::identity();
  if (s.rfind("pow", 0) == 0) {
    const std::string rest = s.substr(3);
    char* end = nullptr;
    const double q = std::strtod(rest.c_str(), &end);
    if (end && *end == '\0' && q > 0.0) return WeightKind::power_decay(q);
  }
  throw Error(ErrorCode::OutOfRange,
              "unknown weight sequence '" + s + "' (expected id or pow<q>)");
}

BasisFamily parse_family(const std::string& s) {
  if (s == "cosine") return BasisFamily::Cosine;
  if (s == "legendre") return BasisFamily::LegendreShifted;
  throw Error(ErrorCode::OutOfRange, "unknown basis family '" + s + "'");
}

Path parse_path(const std::string& s) {
  if (s == "auto") return Path::Auto;
  if (s == "normal") return Path::Normal;
  if (s == "mixture") return Path::Mixture;
  throw Error(ErrorCode::OutOfRange, "unknown path '" + s + "'");
}

std::vector<double> parse_number_list(const std::string& s, const char* what) {
  std::vector<double> values;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end == item.c_str() || *end != '\0') {
      throw Error(ErrorCode::OutOfRange,
                  std::string(what) + ": cannot parse '" + item + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) {
    throw Error(ErrorCode::OutOfRange, std::string(what) + ": empty list");
  }
  return values;
}

nlohmann::json diagnostics_json(const teststats::Diagnostics& d) {
  nlohmann::json j;
  j["mu_hat"] = d.mu_hat;
  j["varsigma_hat"] = d.varsigma_hat;
  j["mu_hat_simple"] = d.mu_hat_simple;
  j["varsigma_hat_simple"] = d.varsigma_hat_simple;
  j["eigenvalues"] = d.eigenvalues;
  j["m"] = d.m;
  j["k"] = d.k;
  j["M"] = d.M;
  j["tau"] = d.tau_kind.name();
  j["warnings"] = d.warnings;
  return j;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MissingColumn, "cannot open input file " + path);
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::NonNumericCell, path + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  for (const auto& name : table.header) table.columns[name] = {};

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= table.header.size()) {
        throw Error(ErrorCode::NonNumericCell,
                    path + ": row " + std::to_string(row) +
                        " has more cells than the header");
      }
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end == cell.c_str() || *end != '\0') {
        throw Error(ErrorCode::NonNumericCell,
                    path + ": row " + std::to_string(row) + ", column '" +
                        table.header[col] + "': non-numeric cell '" + cell +
                        "'");
      }
      table.columns[table.header[col]].push_back(v);
      ++col;
    }
    if (col != table.header.size()) {
      throw Error(ErrorCode::NonNumericCell,
                  path + ": row " + std::to_string(row) + " has " +
                      std::to_string(col) + " cells, expected " +
                      std::to_string(table.header.size()));
    }
  }
  table.rows = row;
  return table;
}

std::vector<double> ecdf_transform(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = midrank;
    i = j + 1;
  }
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    out[t] = ranks[t] / static_cast<double>(n + 1);
  }
  return out;
}

std::string to_json(const TestResult& result) {
  nlohmann::json j;
  j["statistic"] = result.n_s;
  j["path"] = teststats::path_name(result.path_used);
  j["critical_value"] = result.critical_value;
  j["p_value"] = result.p_value;
  j["reject"] = result.reject;
  j["diagnostics"] = diagnostics_json(result.diagnostics);
  return j.dump(2) + "\n";
}

std::string to_tsv(const TestResult& result) {
  std::ostringstream out;
  out << "statistic\tpath\tcritical_value\tp_value\treject\tmu_hat\t"
         "varsigma_hat\tm\tk\tM\ttau\n";
  out << fmt_full(result.n_s) << '\t' << teststats::path_name(result.path_used)
      << '\t' << fmt_full(result.critical_value) << '\t'
      << fmt_full(result.p_value) << '\t' << (result.reject ? "true" : "false")
      << '\t' << fmt_full(result.diagnostics.mu_hat) << '\t'
      << fmt_full(result.diagnostics.varsigma_hat) << '\t'
      << result.diagnostics.m << '\t' << result.diagnostics.k << '\t'
      << result.diagnostics.M << '\t' << result.diagnostics.tau_kind.name()
      << '\n';
  return out.str();
}

std::string to_json(const montecarlo::RejectionTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    nlohmann::json j;
    j["experiment"] = r.experiment;
    j["variant"] = r.variant;
    j["n"] = r.n;
    j["statistic_id"] = r.statistic_id;
    j["reps"] = r.reps;
    j["rejections"] = r.rejections;
    j["rej_prob"] = r.rej_prob;
    j["mc_se"] = r.mc_se;
    j["errors"] = r.errors;
    j["clamp_fraction"] = r.clamp_fraction;
    rows.push_back(std::move(j));
  }
  return rows.dump(2) + "\n";
}

std::string to_tsv(const montecarlo::RejectionTable& table) {
  std::ostringstream out;
  out << "experiment\tvariant\tn\tstatistic_id\treps\trejections\trej_prob\t"
         "mc_se\n";
  for (const auto& r : table.rows) {
    out << r.experiment << '\t' << r.variant << '\t' << r.n << '\t'
        << r.statistic_id << '\t' << r.reps << '\t' << r.rejections << '\t'
        << fmt_full(r.rej_prob) << '\t' << fmt_full(r.mc_se) << '\n';
  }
  return out.str();
}

namespace {

struct TestCliState {
  std::string input;
  std::string y_col = "y";
  std::string z_col = "z";
  std::string w_col = "w";
  int m = 0;
  int k = 4;
  int big_m = 0;
  std::string tau = "pow2";
  double alpha = 0.05;
  std::string path = "auto";
  std::string f_family = "cosine";
  std::string e_family = "legendre";
  bool transform = false;
  std::string format = "json";
  std::string null_poly;
  std::string null_series;
  int degree = 1;
  bool restricted = false;
};

Sample load_sample(const TestCliState& st) {
  const CsvTable csv = read_csv(st.input);
  for (const std::string* col : {&st.y_col, &st.z_col, &st.w_col}) {
    if (!csv.columns.count(*col)) {
      throw Error(ErrorCode::MissingColumn,
                  st.input + ": no column named '" + *col + "'");
    }
  }
  std::vector<double> y = csv.columns.at(st.y_col);
  std::vector<double> z = csv.columns.at(st.z_col);
  std::vector<double> w = csv.columns.at(st.w_col);
  if (st.transform) {
    z = ecdf_transform(z);
    w = ecdf_transform(w);
  } else {
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (z[i] < 0.0 || z[i] > 1.0 || w[i] < 0.0 || w[i] > 1.0) {
        throw Error(ErrorCode::DomainViolation,
                    st.input + ": row " + std::to_string(i + 1) +
                        ": z or w outside [0,1]; rerun with --transform");
      }
    }
  }
  Sample s;
  s.y = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
  s.z = Eigen::Map<const Eigen::VectorXd>(z.data(), z.size());
  s.w = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
  s.validate();
  return s;
}

TestConfig build_config(const TestCliState& st, Eigen::Index n) {
  TestConfig cfg;
  cfg.tau_kind = parse_tau(st.tau);
  cfg.alpha = st.alpha;
  cfg.path = parse_path(st.path);
  cfg.f_family = parse_family(st.f_family);
  cfg.e_family = parse_family(st.e_family);
  cfg.k = st.k;
  cfg.M = st.big_m > 0 ? st.big_m : 100;
  if (st.m > 0) {
    cfg.m = st.m;
  } else if (cfg.tau_kind.is_identity()) {
    cfg.m = static_cast<int>(std::ceil(1.2 * std::cbrt(static_cast<double>(n))));
  } else {
    cfg.m = cfg.M;
  }
  return cfg;
}

void add_common_test_options(CLI::App* cmd, TestCliState& st) {
  cmd->add_option("--input", st.input, "CSV file with a header row")
      ->required();
  cmd->add_option("--y", st.y_col, "outcome column name");
  cmd->add_option("--z", st.z_col, "regressor column name");
  cmd->add_option("--w", st.w_col, "instrument column name");
  cmd->add_option("--m", st.m, "number of instrument-side basis terms");
  cmd->add_option("--M", st.big_m, "mixture truncation (default 100)");
  cmd->add_option("--tau", st.tau, "weight sequence: id, pow1, pow2, pow<q>");
  cmd->add_option("--alpha", st.alpha, "nominal level in (0,1)");
  cmd->add_option("--path", st.path, "auto, normal or mixture");
  cmd->add_option("--f-family", st.f_family, "instrument basis family");
  cmd->add_option("--format", st.format, "json or tsv")
      ->check(CLI::IsMember({"json", "tsv"}));
  cmd->add_flag("--transform", st.transform,
                "empirical-CDF rescale of z and w into (0,1)");
}

int emit_result(const TestResult& result, const std::string& format,
                std::ostream& out) {
  out << (format == "tsv" ? to_tsv(result) : to_json(result));
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Series-based specification tests for nonparametric "
               "instrumental regression"};
  app.require_subcommand(1);

  // ---- test ----
  CLI::App* test_cmd =
      app.add_subcommand("test", "run a test on CSV data");
  test_cmd->require_subcommand(1);
  TestCliState st;

  CLI::App* simple = test_cmd->add_subcommand(
      "simple", "H0: the structural function equals a known function");
  add_common_test_options(simple, st);
  simple->add_option("--null-poly", st.null_poly,
                     "phi0 as polynomial coefficients c0,c1,...");
  simple->add_option("--null-series", st.null_series,
                     "phi0 as shifted-Legendre coefficients b1,b2,...");

  CLI::App* parametric = test_cmd->add_subcommand(
      "parametric", "H0: the structural function is a polynomial");
  add_common_test_options(parametric, st);
  parametric->add_option("--degree", st.degree, "polynomial degree (>= 1)");

  CLI::App* exogeneity =
      test_cmd->add_subcommand("exogeneity", "H0: the regressor is exogenous");
  add_common_test_options(exogeneity, st);
  exogeneity->add_option("--k", st.k, "series terms of the regression fit");
  exogeneity->add_option("--e-family", st.e_family, "regressor basis family");

  CLI::App* nonparametric = test_cmd->add_subcommand(
      "nonparametric", "H0: a smooth structural function exists");
  add_common_test_options(nonparametric, st);
  nonparametric->add_option("--k", st.k, "series terms of the IV fit");
  nonparametric->add_option("--e-family", st.e_family,
                            "regressor basis family");
  nonparametric->add_flag("--restricted", st.restricted,
                          "treat z as the designated regressor sub-vector");

  // ---- mc ----
  CLI::App* mc_cmd =
      app.add_subcommand("mc", "rerun a published Monte Carlo table");
  std::string table_id;
  int mc_n = 0;
  int mc_reps = 500;
  std::uint64_t mc_seed = 42;
  int mc_threads = 0;
  std::string mc_variant;
  std::string mc_stat;
  std::string mc_format = "tsv";
  mc_cmd->add_option("table", table_id, "table1, table2, table3 or table4")
      ->required();
  mc_cmd->add_option("--n", mc_n, "restrict to one sample size");
  mc_cmd->add_option("--reps", mc_reps, "Monte Carlo replications");
  mc_cmd->add_option("--seed", mc_seed, "base seed");
  mc_cmd->add_option("--threads", mc_threads,
                     "worker cap (default: NIVTEST_THREADS or all cores)");
  mc_cmd->add_option("--variant", mc_variant, "substring filter on variants");
  mc_cmd->add_option("--stat", mc_stat, "exact filter on statistic ids");
  mc_cmd->add_option("--format", mc_format, "tsv or json")
      ->check(CLI::IsMember({"json", "tsv"}));

  // ---- quantile ----
  CLI::App* quantile_cmd = app.add_subcommand(
      "quantile", "quantile of a weighted chi-square mixture");
  std::string lambdas_arg;
  double q_alpha = 0.05;
  quantile_cmd->add_option("--lambdas", lambdas_arg, "comma list of weights")
      ->required();
  quantile_cmd->add_option("--alpha", q_alpha, "upper tail probability");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("nivtest");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "nivtest: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*test_cmd) {
      const Sample sample = load_sample(st);
      const TestConfig cfg = build_config(st, sample.n());
      TestResult result;
      if (*simple) {
        const bool has_poly = !st.null_poly.empty();
        const bool has_series = !st.null_series.empty();
        if (has_poly == has_series) {
          throw Error(ErrorCode::OutOfRange,
                      "test simple needs exactly one of --null-poly or "
                      "--null-series");
        }
        std::function<double(double)> phi0;
        if (has_poly) {
          const std::vector<double> coef =
              parse_number_list(st.null_poly, "--null-poly");
          phi0 = [coef](double z) {
            double acc = 0.0;
            double zp = 1.0;
            for (double c : coef) {
              acc += c * zp;
              zp *= z;
            }
            return acc;
          };
        } else {
          const std::vector<double> coef =
              parse_number_list(st.null_series, "--null-series");
          const BasisFamily fam = parse_family(st.e_family);
          phi0 = [coef, fam](double z) {
            double acc = 0.0;
            for (std::size_t j = 0; j < coef.size(); ++j) {
              acc += coef[j] * basis::eval_basis(fam, static_cast<int>(j) + 1, z);
            }
            return acc;
          };
        }
        result = teststats::test_simple(sample, phi0, cfg);
      } else if (*parametric) {
        result = teststats::test_parametric(sample, st.degree, cfg);
      } else if (*exogeneity) {
        result = teststats::test_exogeneity(sample, cfg);
      } else {
        result = teststats::test_nonparametric(sample, cfg, st.restricted);
      }
      return emit_result(result, st.format, out);
    }

    if (*mc_cmd) {
      const std::vector<int> sizes = mc_n > 0
                                         ? std::vector<int>{mc_n}
                                         : montecarlo::table_sample_sizes(table_id);
      montecarlo::RejectionTable table;
      for (int n : sizes) {
        for (auto& [spec, stats] : montecarlo::table_rows(table_id, n)) {
          if (!mc_variant.empty() &&
              spec.variant_label().find(mc_variant) == std::string::npos) {
            continue;
          }
          std::vector<montecarlo::StatConfig> selected;
          for (const auto& sc : stats) {
            if (mc_stat.empty() || sc.id == mc_stat) selected.push_back(sc);
          }
          if (selected.empty()) continue;
          montecarlo::RejectionTable part = montecarlo::run_experiment(
              spec, selected, mc_reps, mc_seed, mc_threads);
          for (auto& row : part.rows) table.rows.push_back(std::move(row));
        }
      }
      out << (mc_format == "tsv" ? to_tsv(table) : to_json(table));
      return 0;
    }

    if (*quantile_cmd) {
      const std::vector<double> lambdas =
          parse_number_list(lambdas_arg, "--lambdas");
      Eigen::VectorXd lam =
          Eigen::Map<const Eigen::VectorXd>(lambdas.data(), lambdas.size());
      nulldist::MixtureWeights weights(lam);
      out << fmt_full(nulldist::mixture_quantile(weights, q_alpha)) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "nivtest: error [" << error_code_name(e.code()) << "]: " << e.what()
        << "\n";
    return is_input_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    err << "nivtest: error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace nivtest::cli
