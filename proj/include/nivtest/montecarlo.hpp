#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nivtest/estimators.hpp"
#include "nivtest/teststats.hpp"

namespace nivtest::montecarlo {

using estimators::Sample;
using teststats::TestConfig;
using teststats::TestResult;

enum class Experiment {
  ParametricTable1,
  ExogeneityTable2,
  NpTable3,
  NpTable4,
};

const char* experiment_name(Experiment e) noexcept;

/// Truncated sine series used as structural functions.
///   ExogPhi1: coefficients (-1)^{j+1} j^{-1}
///   NpPhi1:   coefficients (-1)^{j+1} j^{-2}
///   NpPhi2:   coefficients ((-1)^{j+1} + 1)/4 * j^{-2}
enum class SineSeries { ExogPhi1, NpPhi1, NpPhi2 };

double phi_sine(SineSeries series, double z, int trunc = 100);

/// Roughness alternative rho_j, normalized so that its integral over [0,1]
/// equals 0.5.
double rho_alt(int j, double z);

/// One experiment configuration: which data-generating process, at which
/// sample size, with which variant parameters.
struct DgpSpec {
  Experiment experiment = Experiment::ParametricTable1;
  int n = 0;
  int trunc = 100;  // truncation of the sine series

  // negative means the experiment's published default
  double c_u = -1.0;
  double xi = -1.0;

  // parametric experiment: models 1 (linear), 2 (quadratic), 3 (cubic)
  int null_model = 1;
  int truth_model = 1;
  double theta3 = 0.0;

  // exogeneity experiment
  double kappa = 0.0;

  // nonparametric experiments: rho_index 0 means the null holds
  int rho_index = 0;

  std::string variant_label() const;
};

struct ClampStats {
  long clamped = 0;
  long total = 0;

  double fraction() const noexcept {
    return total > 0 ? static_cast<double>(clamped) / static_cast<double>(total)
                     : 0.0;
  }
};

Sample gen_parametric(int n, int truth_model, double theta3, std::uint64_t seed,
                      ClampStats* stats = nullptr, double c_u = 0.2,
                      double xi = 0.8);
Sample gen_exogeneity(int n, double kappa, std::uint64_t seed,
                      ClampStats* stats = nullptr, double c_u = 1.0,
                      double xi = 0.7);
/// variant: SineSeries::NpPhi1 draws the design of the third experiment,
/// NpPhi2 the design of the fourth; rho_index 0 generates under the null.
Sample gen_np(int n, SineSeries variant, int rho_index, std::uint64_t seed,
              ClampStats* stats = nullptr, double c_u = -1.0,
              double xi = 0.8);

Sample generate(const DgpSpec& spec, std::uint64_t seed,
                ClampStats* stats = nullptr);

/// One test statistic to run on each replication.
struct StatConfig {
  std::string id;
  TestConfig cfg;
};

struct RejectionRow {
  std::string experiment;
  std::string variant;
  int n = 0;
  std::string statistic_id;
  long reps = 0;  // successful replications
  long rejections = 0;
  double rej_prob = 0.0;
  double mc_se = 0.0;
  long errors = 0;
  double clamp_fraction = 0.0;
};

struct RejectionTable {
  std::vector<RejectionRow> rows;
};

/// Runs `reps` replications of the experiment, applying every configured
/// statistic to each generated sample. Replication r draws from the stream
/// mix_seed(base_seed, r), so results are identical for any worker count.
/// A replication that throws counts as neither reject nor accept; more than
/// 1% errored replications fail the run, as does implausibly frequent
/// clamping of generated regressors.
RejectionTable run_experiment(const DgpSpec& spec,
                              const std::vector<StatConfig>& stats, int reps,
                              std::uint64_t base_seed, int threads = 0);

/// The experiment grid of one published table (all variants at one sample
/// size), ready to feed to run_experiment row by row.
std::vector<std::pair<DgpSpec, std::vector<StatConfig>>> table_rows(
    const std::string& table_id, int n);

/// Sample sizes a table reports on.
std::vector<int> table_sample_sizes(const std::string& table_id);

/// Worker count: explicit `threads` if positive, otherwise NIVTEST_THREADS,
/// otherwise hardware concurrency.
int resolve_threads(int threads);

}  // namespace nivtest::montecarlo
