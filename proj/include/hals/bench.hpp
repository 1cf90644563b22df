#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hals/bounds.hpp"
#include "hals/channel.hpp"
#include "hals/estimators.hpp"
#include "hals/types.hpp"

namespace hals {

/// Solver settings for a sweep. With auto_hyper set, tau and lambda come
/// from the closed-form defaults using the per-trial true ||c_d|| as the
/// hint (recorded in the output so plots stay honest); explicit values
/// override individual fields.
struct HalsOptionOverrides {
  bool auto_hyper = true;
  std::optional<double> tau;
  std::optional<double> lambda;
  std::optional<double> admm_rho;
  std::optional<double> tol_abs;
  std::optional<double> tol_rel;
  std::optional<int> max_iter;
};

struct BenchConfig {
  ChannelConfig channel;
  std::vector<double> snr_db_list;
  int trials = 100;
  std::vector<Method> methods;
  HalsOptionOverrides hals;
  double genie_mu = 0.0;  ///< 0 means: reuse the per-trial lambda
  bool compute_crb = false;
  std::string trace_path;  ///< empty for synthetic channels
  int diffuse_width_for_trace = 200;
  std::uint64_t master_seed = 1;
  std::string output_path;
  /// When false, the runtime_ms column is written as 0 so repeated runs
  /// produce byte-identical CSV files.
  bool record_runtime = true;

  void validate() const;
};

/// One CSV row. Component NMSE fields are -1 when the reference component
/// has zero (or unknown) energy.
struct TrialRecord {
  double snr_db = 0.0;
  std::string method;
  int trial_index = 0;
  std::uint64_t seed = 0;
  double nmse_total = 0.0;
  double nmse_sparse = 0.0;
  double nmse_diffuse = 0.0;
  int support_size = 0;
  double duality_gap = 0.0;
  double kkt_max_residual = 0.0;
  bool converged = true;
  double runtime_ms = 0.0;
  double tau = 0.0;
  double lambda = 0.0;
};

struct BenchSummary {
  int solves = 0;              ///< hals/anm solves attempted
  int converged_solves = 0;
  int energy_bound_violations = 0;
  int failed_trials = 0;       ///< trials that threw
};

struct BenchResult {
  std::vector<TrialRecord> records;
  BenchSummary summary;
};

/// Run the sweep: per-trial seeds derived from (master_seed, snr index,
/// trial), all selected methods on the same observation, optional
/// per-trial CRBs averaged into one ncrb_sparse / ncrb_diffuse row per SNR.
/// Trials fan out over HALS_THREADS workers; output order is independent
/// of the schedule. Writes output_path when set.
BenchResult run_bench(const BenchConfig& cfg);

/// NCRB curves only (ignores cfg.methods). Synthetic configs only.
BenchResult crb_sweep(const BenchConfig& cfg);

std::string csv_header();
std::string to_csv_row(const TrialRecord& rec);
TrialRecord parse_csv_row(const std::string& line);
void write_csv(const std::vector<TrialRecord>& records,
               const std::string& path);

BenchConfig load_bench_config(const std::string& path);
BenchConfig bench_config_from_json_text(const std::string& text);

/// Everything needed to replay one estimation problem from disk.
struct SimBundle {
  HsdChannelTruth truth;
  Pilots pilots;
  Observation obs;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

/// Sample a channel / pilots / noise triple exactly as one bench trial
/// (snr index 0, trial 0) would.
SimBundle make_bundle(const ChannelConfig& cfg, double snr_db,
                      std::uint64_t master_seed);

void write_bundle(const SimBundle& bundle, const std::string& path);
SimBundle read_bundle(const std::string& path);

/// Per-trial constrained bounds normalized by the realized component
/// energies, using the generator's gain covariances.
CrbReport trial_crb(const HsdChannelTruth& truth, const Pilots& pilots,
                    double sigma);

/// Worker count: HALS_THREADS when set and positive, else the hardware
/// concurrency.
int bench_thread_count();

}  // namespace hals
