#include "nivtest/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "nivtest/rng.hpp"

namespace nivtest::montecarlo {

namespace {

double clamp01(double v, ClampStats* stats) {
  if (stats) ++stats->total;
  if (v < 0.0) {
    if (stats) ++stats->clamped;
    return 0.0;
  }
  if (v > 1.0) {
    if (stats) ++stats->clamped;
    return 1.0;
  }
  return v;
}

double poly_model(int model, double theta3, double z) {
  switch (model) {
    case 1: return z;
    case 2: return z - z * z;
    case 3: return z - z * z + theta3 * z * z * z;
    default:
      throw Error(ErrorCode::OutOfRange, "unknown polynomial model id");
  }
}

void check_n(int n, const char* who) {
  if (n < 1) {
    throw Error(ErrorCode::OutOfRange, std::string(who) + ": n must be >= 1");
  }
}

}  // namespace

const char* experiment_name(Experiment e) noexcept {
  switch (e) {
    case Experiment::ParametricTable1: return "parametric";
    case Experiment::ExogeneityTable2: return "exogeneity";
    case Experiment::NpTable3: return "nonparametric1";
    case Experiment::NpTable4: return "nonparametric2";
  }
  return "?";
}

double phi_sine(SineSeries series, double z, int trunc) {
  if (!(z >= 0.0 && z <= 1.0)) {
    throw Error(ErrorCode::OutOfDomain, "phi_sine: z outside [0,1]");
  }
  if (trunc < 1) {
    throw Error(ErrorCode::OutOfRange, "phi_sine: truncation must be >= 1");
  }
  double acc = 0.0;
  for (int j = 1; j <= trunc; ++j) {
    double coeff;
    const double sign = (j % 2 == 1) ? 1.0 : -1.0;  // (-1)^{j+1}
    switch (series) {
      case SineSeries::ExogPhi1: coeff = sign / j; break;
      case SineSeries::NpPhi1: coeff = sign / (static_cast<double>(j) * j); break;
      case SineSeries::NpPhi2:
        coeff = (sign + 1.0) / 4.0 / (static_cast<double>(j) * j);
        break;
      default: coeff = 0.0;
    }
    acc += coeff * std::sin(j * M_PI * z);
  }
  return acc;
}

double rho_alt(int j, double z) {
  if (j < 1) {
    throw Error(ErrorCode::OutOfRange, "rho_alt: index must be >= 1");
  }
  if (!(z >= 0.0 && z <= 1.0)) {
    throw Error(ErrorCode::OutOfDomain, "rho_alt: z outside [0,1]");
  }
  // integral of the exponential part minus one over [0,1] is (e^j - 1)/j - 1
  const double c = 0.5 / ((std::expm1(static_cast<double>(j)) / j) - 1.0);
  const double e = z <= 0.5 ? std::expm1(2.0 * j * z)
                            : std::expm1(2.0 * j * (1.0 - z));
  return c * e;
}

std::string DgpSpec::variant_label() const {
  switch (experiment) {
    case Experiment::ParametricTable1: {
      auto model_name = [](int m, double t3) -> std::string {
        switch (m) {
          case 1: return "linear";
          case 2: return "quadratic";
          default: return "cubic(theta3=" + std::to_string(t3).substr(0, 4) + ")";
        }
      };
      return "null=" + model_name(null_model, 0.0) +
             " truth=" + model_name(truth_model, theta3);
    }
    case Experiment::ExogeneityTable2: {
      std::string k = std::to_string(kappa);
      k.erase(k.find_last_not_of('0') + 1);
      if (!k.empty() && k.back() == '.') k.pop_back();
      return "kappa=" + k;
    }
    case Experiment::NpTable3:
    case Experiment::NpTable4:
      return rho_index == 0 ? "null" : "rho=" + std::to_string(rho_index);
  }
  return "?";
}

Sample gen_parametric(int n, int truth_model, double theta3, std::uint64_t seed,
                      ClampStats* stats, double c_u, double xi) {
  check_n(n, "gen_parametric");
  CounterRng rng(seed);
  Sample s;
  s.y.resize(n);
  s.z.resize(n);
  s.w.resize(n);
  const double kappa = 0.3;
  // N(0.5, 0.1) read as mean and variance; the published rejection
  // probabilities are only reproduced under this reading
  const double eps_sd = std::sqrt(0.1);
  for (int i = 0; i < n; ++i) {
    const double w = rng.next_uniform();
    const double eps = 0.5 + eps_sd * rng.next_normal();
    const double nu = rng.next_normal();
    const double z = clamp01(std::pow(xi * w + (1.0 - xi) * eps, 2.0), stats);
    // the error shares eps with the regressor but is centered so that
    // E[U|W] = 0 holds exactly
    const double u = kappa * (eps - 0.5) + std::sqrt(1.0 - kappa * kappa) * nu;
    s.w(i) = w;
    s.z(i) = z;
    s.y(i) = poly_model(truth_model, theta3, z) + c_u * u;
  }
  return s;
}

Sample gen_exogeneity(int n, double kappa, std::uint64_t seed,
                      ClampStats* stats, double c_u, double xi) {
  check_n(n, "gen_exogeneity");
  if (!(kappa >= 0.0 && kappa < 1.0)) {
    throw Error(ErrorCode::OutOfRange, "gen_exogeneity: kappa outside [0,1)");
  }
  CounterRng rng(seed);
  Sample s;
  s.y.resize(n);
  s.z.resize(n);
  s.w.resize(n);
  for (int i = 0; i < n; ++i) {
    const double w = rng.next_uniform();
    const double eps = rng.next_uniform() - 0.5;
    const double nu = rng.next_uniform() - 0.5;
    const double z = clamp01(xi * w + std::sqrt(1.0 - xi * xi) * eps, stats);
    const double u = kappa * eps + std::sqrt(1.0 - kappa * kappa) * nu;
    s.w(i) = w;
    s.z(i) = z;
    s.y(i) = phi_sine(SineSeries::ExogPhi1, z) + c_u * u;
  }
  return s;
}

Sample gen_np(int n, SineSeries variant, int rho_index, std::uint64_t seed,
              ClampStats* stats, double c_u, double xi) {
  check_n(n, "gen_np");
  if (variant == SineSeries::ExogPhi1) {
    throw Error(ErrorCode::OutOfRange, "gen_np: variant must be NpPhi1/NpPhi2");
  }
  CounterRng rng(seed);
  Sample s;
  s.y.resize(n);
  s.z.resize(n);
  s.w.resize(n);
  const double kappa = 0.3;
  const bool second = variant == SineSeries::NpPhi2;
  // variance reading of N(0.5, 0.05) / N(0.5, 0.1), as in gen_parametric
  const double eps_sd = std::sqrt(second ? 0.05 : 0.1);
  const double eps_scale = second ? 0.3 : 1.0 - xi;
  if (c_u < 0.0) c_u = second ? 0.8 : 0.2;
  for (int i = 0; i < n; ++i) {
    const double w = rng.next_uniform();
    const double eps = 0.5 + eps_sd * rng.next_normal();
    const double nu = rng.next_normal();
    const double z = clamp01(std::pow(xi * w + eps_scale * eps, 2.0), stats);
    const double u = kappa * (eps - 0.5) + std::sqrt(1.0 - kappa * kappa) * nu;
    s.w(i) = w;
    s.z(i) = z;
    double y = phi_sine(variant, z) + c_u * u;
    if (rho_index > 0) y += rho_alt(rho_index, z);
    s.y(i) = y;
  }
  return s;
}

Sample generate(const DgpSpec& spec, std::uint64_t seed, ClampStats* stats) {
  const double c_u = spec.c_u;
  const double xi = spec.xi;
  switch (spec.experiment) {
    case Experiment::ParametricTable1:
      return gen_parametric(spec.n, spec.truth_model, spec.theta3, seed, stats,
                            c_u < 0.0 ? 0.2 : c_u, xi < 0.0 ? 0.8 : xi);
    case Experiment::ExogeneityTable2:
      return gen_exogeneity(spec.n, spec.kappa, seed, stats,
                            c_u < 0.0 ? 1.0 : c_u, xi < 0.0 ? 0.7 : xi);
    case Experiment::NpTable3:
      return gen_np(spec.n, SineSeries::NpPhi1, spec.rho_index, seed, stats,
                    c_u, xi < 0.0 ? 0.8 : xi);
    case Experiment::NpTable4:
      return gen_np(spec.n, SineSeries::NpPhi2, spec.rho_index, seed, stats,
                    c_u, xi < 0.0 ? 0.8 : xi);
  }
  throw Error(ErrorCode::OutOfRange, "generate: unknown experiment");
}

int resolve_threads(int threads) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (threads > 0) return threads;
  if (const char* env = std::getenv("NIVTEST_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) return std::min(cap, hw);
  }
  return hw;
}

RejectionTable run_experiment(const DgpSpec& spec,
                              const std::vector<StatConfig>& stats, int reps,
                              std::uint64_t base_seed, int threads) {
  if (reps < 1) {
    throw Error(ErrorCode::OutOfRange, "run_experiment: reps must be >= 1");
  }
  if (stats.empty()) {
    throw Error(ErrorCode::ZeroLength, "run_experiment: no statistics given");
  }
  const int n_stats = static_cast<int>(stats.size());
  const int n_workers = std::max(1, std::min(resolve_threads(threads), reps));

  struct WorkerTally {
    std::vector<long> rejections;
    std::vector<long> errors;
    ClampStats clamps;
  };
  std::vector<WorkerTally> tallies(n_workers);
  for (auto& t : tallies) {
    t.rejections.assign(n_stats, 0);
    t.errors.assign(n_stats, 0);
  }

  auto worker = [&](int widx, int rep_begin, int rep_end) {
    WorkerTally& tally = tallies[widx];
    for (int r = rep_begin; r < rep_end; ++r) {
      Sample sample;
      try {
        sample = generate(spec, mix_seed(base_seed, static_cast<std::uint64_t>(r)),
                          &tally.clamps);
      } catch (const std::exception&) {
        for (int si = 0; si < n_stats; ++si) ++tally.errors[si];
        continue;
      }
      for (int si = 0; si < n_stats; ++si) {
        try {
          TestResult result;
          switch (spec.experiment) {
            case Experiment::ParametricTable1:
              result = teststats::test_parametric(
                  sample, spec.null_model == 1 ? 1 : 2, stats[si].cfg);
              break;
            case Experiment::ExogeneityTable2:
              result = teststats::test_exogeneity(sample, stats[si].cfg);
              break;
            case Experiment::NpTable3:
            case Experiment::NpTable4:
              result = teststats::test_nonparametric(sample, stats[si].cfg);
              break;
          }
          if (result.reject) ++tally.rejections[si];
        } catch (const std::exception&) {
          ++tally.errors[si];
        }
      }
    }
  };

  if (n_workers == 1) {
    worker(0, 0, reps);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    const int chunk = (reps + n_workers - 1) / n_workers;
    for (int widx = 0; widx < n_workers; ++widx) {
      const int lo = widx * chunk;
      const int hi = std::min(reps, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(worker, widx, lo, hi);
    }
    for (auto& t : pool) t.join();
  }

  ClampStats clamps;
  for (const auto& t : tallies) {
    clamps.clamped += t.clamps.clamped;
    clamps.total += t.clamps.total;
  }
  // Clamping of the quadratic designs signals a numerical anomaly; the
  // linear exogeneity design spills past [0,1] by construction, so only an
  // implausibly large fraction is treated as failure there.
  const double clamp_limit =
      spec.experiment == Experiment::ExogeneityTable2 ? 0.25 : 0.05;
  if (clamps.fraction() > clamp_limit) {
    throw Error(ErrorCode::DomainViolation,
                "run_experiment: " + std::to_string(clamps.fraction() * 100.0) +
                    "% of generated regressors required clamping");
  }

  RejectionTable table;
  for (int si = 0; si < n_stats; ++si) {
    long rejections = 0;
    long errors = 0;
    for (const auto& t : tallies) {
      rejections += t.rejections[si];
      errors += t.errors[si];
    }
    if (static_cast<double>(errors) > 0.01 * reps) {
      throw Error(ErrorCode::NoConvergence,
                  "run_experiment: statistic " + stats[si].id + " errored in " +
                      std::to_string(errors) + " of " + std::to_string(reps) +
                      " replications");
    }
    RejectionRow row;
    row.experiment = experiment_name(spec.experiment);
    row.variant = spec.variant_label();
    row.n = spec.n;
    row.statistic_id = stats[si].id;
    row.reps = reps - errors;
    row.rejections = rejections;
    row.rej_prob = row.reps > 0
                       ? static_cast<double>(rejections) /
                             static_cast<double>(row.reps)
                       : 0.0;
    row.mc_se = row.reps > 0
                    ? std::sqrt(row.rej_prob * (1.0 - row.rej_prob) /
                                static_cast<double>(row.reps))
                    : 0.0;
    row.errors = errors;
    row.clamp_fraction = clamps.fraction();
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

using basis::WeightKind;
using teststats::Path;

TestConfig parametric_cfg(int decay) {
  TestConfig cfg;
  cfg.tau_kind = WeightKind::power_decay(decay);
  cfg.m = decay == 1 ? 200 : 100;
  cfg.M = decay == 1 ? 150 : 100;
  cfg.path = Path::Mixture;
  return cfg;
}

TestConfig exogeneity_cfg(int decay) {
  TestConfig cfg;
  cfg.tau_kind = WeightKind::power_decay(decay);
  cfg.m = decay == 1 ? 50 : 40;
  cfg.M = cfg.m;
  cfg.k = 4;
  cfg.path = Path::Mixture;
  return cfg;
}

TestConfig np_cfg(bool smoothed, int n) {
  TestConfig cfg;
  cfg.k = 4;
  if (smoothed) {
    cfg.tau_kind = WeightKind::power_decay(2);
    cfg.m = 100;
    cfg.M = 100;
    cfg.path = Path::Mixture;
  } else {
    cfg.tau_kind = WeightKind::identity();
    cfg.m = static_cast<int>(std::ceil(1.2 * std::cbrt(static_cast<double>(n))));
    cfg.M = cfg.m;
    cfg.path = Path::Normal;
  }
  return cfg;
}

}  // namespace

std::vector<int> table_sample_sizes(const std::string& table_id) {
  if (table_id == "table1" || table_id == "table2") return {250, 500};
  if (table_id == "table3" || table_id == "table4") return {500, 1000};
  throw Error(ErrorCode::UnknownTable, "unknown table id: " + table_id);
}

std::vector<std::pair<DgpSpec, std::vector<StatConfig>>> table_rows(
    const std::string& table_id, int n) {
  std::vector<std::pair<DgpSpec, std::vector<StatConfig>>> rows;
  if (table_id == "table1") {
    const std::vector<StatConfig> stats = {{"S1p", parametric_cfg(1)},
                                           {"S2p", parametric_cfg(2)}};
    struct ModelRow {
      int null_model, truth_model;
      double theta3;
    };
    const ModelRow variants[] = {
        {1, 1, 0.0}, {2, 2, 0.0}, {1, 2, 0.0}, {1, 3, 1.5}, {2, 3, 3.0}};
    for (const auto& v : variants) {
      DgpSpec spec;
      spec.experiment = Experiment::ParametricTable1;
      spec.n = n;
      spec.null_model = v.null_model;
      spec.truth_model = v.truth_model;
      spec.theta3 = v.theta3;
      rows.emplace_back(spec, stats);
    }
    return rows;
  }
  if (table_id == "table2") {
    const std::vector<StatConfig> stats = {{"S1e", exogeneity_cfg(1)},
                                           {"S2e", exogeneity_cfg(2)}};
    for (double kappa : {0.0, 0.15, 0.2, 0.25}) {
      DgpSpec spec;
      spec.experiment = Experiment::ExogeneityTable2;
      spec.n = n;
      spec.kappa = kappa;
      rows.emplace_back(spec, stats);
    }
    return rows;
  }
  if (table_id == "table3" || table_id == "table4") {
    const bool third = table_id == "table3";
    const std::vector<StatConfig> stats = {{"S0np", np_cfg(false, n)},
                                           {"S2np", np_cfg(true, n)}};
    const std::vector<int> rho_rows =
        third ? std::vector<int>{0, 1, 2, 4} : std::vector<int>{0, 3, 4, 5};
    for (int rho : rho_rows) {
      DgpSpec spec;
      spec.experiment = third ? Experiment::NpTable3 : Experiment::NpTable4;
      spec.n = n;
      spec.rho_index = rho;
      rows.emplace_back(spec, stats);
    }
    return rows;
  }
  throw Error(ErrorCode::UnknownTable, "unknown table id: " + table_id);
}

}  // namespace nivtest::montecarlo
