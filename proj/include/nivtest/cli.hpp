#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nivtest/montecarlo.hpp"
#include "nivtest/teststats.hpp"

namespace nivtest::cli {

/// Parsed CSV: column name -> values, preserving row order.
struct CsvTable {
  std::vector<std::string> header;
  std::map<std::string, std::vector<double>> columns;
  std::size_t rows = 0;
};

/// Reads a comma-separated file with a header row; every cell must parse as
/// a decimal number.
CsvTable read_csv(const std::string& path);

/// Empirical-CDF rescaling rank/(n+1) with midranks for ties; maps arbitrary
/// real data into (0,1).
std::vector<double> ecdf_transform(const std::vector<double>& values);

std::string to_json(const teststats::TestResult& result);
std::string to_tsv(const teststats::TestResult& result);
std::string to_json(const montecarlo::RejectionTable& table);
std::string to_tsv(const montecarlo::RejectionTable& table);

/// Dispatches a full command line (without the program name). Returns the
/// process exit status: 0 on a clean run, 2 on input errors, 3 on numerical
/// failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace nivtest::cli
