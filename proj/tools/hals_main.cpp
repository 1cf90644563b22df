#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hals/bench.hpp"
#include "hals/rng.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

json cvec_to_json(const hals::CVec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    arr.push_back(json::array({v[i].real(), v[i].imag()}));
  }
  return arr;
}

void emit(const json& doc, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw hals::IoError("cannot open " + out_path);
  out << doc.dump(2) << '\n';
}

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  std::optional<double> tau, lambda, mu;
  std::optional<std::uint64_t> seed;
  std::string method = "hals";
};

int cmd_simulate(const CommonFlags& flags) {
  hals::BenchConfig cfg = hals::load_bench_config(flags.config_path);
  const double snr_db = cfg.snr_db_list.front();
  const std::uint64_t seed = flags.seed.value_or(cfg.master_seed);
  hals::SimBundle bundle = hals::make_bundle(cfg.channel, snr_db, seed);
  const std::string out =
      !flags.out_path.empty() ? flags.out_path
      : !cfg.output_path.empty() ? cfg.output_path
                                 : std::string("bundle.json");
  hals::write_bundle(bundle, out);
  std::cerr << "wrote " << out << " (N=" << bundle.truth.config.N
            << ", snr_db=" << snr_db << ", seed=" << seed << ")\n";
  return kExitOk;
}

/// Build an observation either from a bundle file or from a trace config
/// {"trace": path, "N":..., "snr_db":..., "diffuse_width_for_trace":...}.
struct EstimationProblem {
  hals::Observation obs;
  hals::CMat D;
  std::optional<hals::HsdChannelTruth> truth;
  double snr_db = 0.0;
};

EstimationProblem load_problem(const std::string& path,
                               std::optional<std::uint64_t> seed_override) {
  std::ifstream probe(path);
  if (!probe) throw hals::IoError("cannot open " + path);
  json j;
  try {
    probe >> j;
  } catch (const json::parse_error& e) {
    throw hals::ParseError(std::string(path) + ": " + e.what());
  }
  EstimationProblem problem;
  if (j.value("kind", std::string{}) == "hals_bundle") {
    hals::SimBundle bundle = hals::read_bundle(path);
    problem.obs = bundle.obs;
    problem.D = bundle.truth.D;
    problem.truth = bundle.truth;
    problem.snr_db = bundle.snr_db;
    return problem;
  }
  if (!j.contains("trace")) {
    throw hals::ParseError(path + ": expected a bundle or a trace config");
  }
  const int n = j.value("N", 50);
  const int width = j.value("diffuse_width_for_trace", 200);
  const double snr_db = j.value("snr_db", 10.0);
  const std::uint64_t seed = seed_override.value_or(j.value("seed", 1));
  const hals::CVec h = hals::load_trace(j["trace"].get<std::string>(), n);
  const double sigma = hals::sigma_for_snr(h, snr_db);
  const hals::Pilots pilots = hals::qpsk_pilots(n, hals::derive_seed(seed, 2));
  problem.obs = hals::observe(h, pilots, sigma, hals::derive_seed(seed, 3));
  problem.D = hals::diffuse_basis(n, width);
  problem.snr_db = snr_db;
  // keep the loaded response around so NMSE can be reported
  hals::HsdChannelTruth truth;
  truth.h = h;
  problem.truth = truth;
  return problem;
}

int cmd_estimate(const CommonFlags& flags) {
  EstimationProblem problem = load_problem(flags.config_path, flags.seed);
  const hals::Method method = hals::method_from_name(flags.method);
  const auto n = problem.obs.r.size();

  hals::HalsOptions opts;
  if (flags.tau && flags.lambda) {
    opts.tau = *flags.tau;
    opts.lambda = *flags.lambda;
  } else if (problem.truth && problem.truth->paths.size() +
                                      problem.truth->diffuse.c_d.size() >
                                  0) {
    const double hint = std::max(problem.truth->diffuse.c_d.norm(), 1e-9);
    const hals::Hyperparams hp = hals::default_hyperparams(
        problem.obs.sigma, static_cast<int>(n),
        static_cast<int>(problem.D.cols()), hint);
    opts.tau = flags.tau.value_or(hp.tau);
    opts.lambda = flags.lambda.value_or(hp.lambda);
  } else {
    throw std::invalid_argument(
        "estimate: provide --tau and --lambda (no truth to derive defaults)");
  }
  const double mu = flags.mu.value_or(opts.lambda);

  hals::ChannelEstimate est;
  switch (method) {
    case hals::Method::hals:
      est = hals::pipeline_hals(problem.obs, problem.D, opts);
      break;
    case hals::Method::anm:
      est = hals::pipeline_anm(problem.obs, opts);
      break;
    case hals::Method::ls:
      est = hals::least_squares(problem.obs);
      break;
    case hals::Method::genie:
      if (!problem.truth || problem.truth->G.cols() == 0) {
        throw std::invalid_argument("estimate: genie needs a bundle with truth");
      }
      est = hals::genie(problem.obs, problem.truth->G, problem.D, mu);
      break;
  }

  json doc;
  doc["method"] = hals::method_name(method);
  doc["snr_db"] = problem.snr_db;
  doc["sigma"] = problem.obs.sigma;
  doc["tau"] = opts.tau;
  doc["lambda"] = opts.lambda;
  if (method == hals::Method::genie) doc["mu"] = mu;
  doc["runtime_ms"] = est.runtime_ms;
  doc["converged"] = est.diag.converged;
  doc["iterations"] = est.diag.iterations;
  doc["duality_gap"] = est.diag.duality_gap;
  doc["kkt_max_residual"] = est.diag.kkt_max_residual;
  if (est.support) {
    doc["support_freqs"] = est.support->freqs;
    doc["support_peaks"] = est.support->peak_values;
  }
  if (problem.truth && problem.truth->h.size() == n) {
    doc["nmse_total"] = hals::nmse(problem.truth->h, est.h_hat);
    if (problem.truth->h_s.size() == n &&
        problem.truth->h_s.squaredNorm() > 0) {
      doc["nmse_sparse"] = (problem.truth->h_s - est.h_s_hat).squaredNorm() /
                           problem.truth->h_s.squaredNorm();
    }
    if (problem.truth->h_d.size() == n &&
        problem.truth->h_d.squaredNorm() > 0) {
      doc["nmse_diffuse"] = (problem.truth->h_d - est.h_d_hat).squaredNorm() /
                            problem.truth->h_d.squaredNorm();
    }
  }
  doc["h_hat"] = cvec_to_json(est.h_hat);
  emit(doc, flags.out_path);
  return kExitOk;
}

int cmd_bench(const CommonFlags& flags) {
  hals::BenchConfig cfg = hals::load_bench_config(flags.config_path);
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.tau) {
    cfg.hals.tau = *flags.tau;
    cfg.hals.auto_hyper = false;
  }
  if (flags.lambda) cfg.hals.lambda = *flags.lambda;
  if (flags.mu) cfg.genie_mu = *flags.mu;
  if (!flags.out_path.empty()) cfg.output_path = flags.out_path;
  if (cfg.output_path.empty()) cfg.output_path = "bench.csv";

  const hals::BenchResult result = hals::run_bench(cfg);
  std::cerr << "wrote " << cfg.output_path << ": " << result.records.size()
            << " rows, " << result.summary.converged_solves << "/"
            << result.summary.solves << " solves converged, "
            << result.summary.failed_trials << " failed trials\n";

  const int total = static_cast<int>(cfg.snr_db_list.size()) * cfg.trials;
  const int failures = result.summary.failed_trials +
                       (result.summary.solves - result.summary.converged_solves);
  if (failures * 10 > total) return kExitNumerical;
  return kExitOk;
}

int cmd_crb(const CommonFlags& flags) {
  hals::BenchConfig cfg = hals::load_bench_config(flags.config_path);
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (!flags.out_path.empty()) cfg.output_path = flags.out_path;
  if (cfg.output_path.empty()) cfg.output_path = "crb.csv";
  const hals::BenchResult result = hals::crb_sweep(cfg);
  std::cerr << "wrote " << cfg.output_path << ": " << result.records.size()
            << " rows\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid atomic / least-squares channel estimation toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  double tau_val = 0, lambda_val = 0, mu_val = 0;
  std::uint64_t seed_val = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", flags.config_path, "JSON config file");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out_path, "output file");
    sub->add_option("--tau", tau_val, "atomic penalty")->each([&](const std::string&) {
      flags.tau = tau_val;
    });
    sub->add_option("--lambda", lambda_val, "ridge penalty")->each([&](const std::string&) {
      flags.lambda = lambda_val;
    });
    sub->add_option("--mu", mu_val, "genie ridge penalty")->each([&](const std::string&) {
      flags.mu = mu_val;
    });
    sub->add_option("--seed", seed_val, "master seed")->each([&](const std::string&) {
      flags.seed = seed_val;
    });
    sub->add_option("--method", flags.method, "hals|anm|ls|genie");
  };

  auto* sim = app.add_subcommand("simulate", "write a reproducible channel + observation bundle");
  add_common(sim, true);
  auto* est = app.add_subcommand("estimate", "run one estimator on a bundle or trace");
  add_common(est, true);
  auto* bench = app.add_subcommand("bench", "Monte Carlo NMSE-vs-SNR sweep to CSV");
  add_common(bench, true);
  auto* crb = app.add_subcommand("crb", "normalized CRB curves to CSV");
  add_common(crb, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(flags);
    if (est->parsed()) return cmd_estimate(flags);
    if (bench->parsed()) return cmd_bench(flags);
    if (crb->parsed()) return cmd_crb(flags);
    std::cerr << "no subcommand\n";
    return kExitUsage;
  } catch (const hals::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const hals::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitIo;
  } catch (const hals::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
