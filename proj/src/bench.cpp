#include "hals/bench.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "hals/rng.hpp"

namespace hals {

namespace {

using nlohmann::json;

constexpr double kUndefined = -1.0;  // sentinel for unavailable NMSE fields

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json complex_to_json(const cx& v) { return json::array({v.real(), v.imag()}); }

json cvec_to_json(const CVec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(complex_to_json(v[i]));
  return arr;
}

CVec cvec_from_json(const json& arr) {
  CVec v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] =
        cx(arr[i][0].get<double>(), arr[i][1].get<double>());
  }
  return v;
}

/// Static-schedule parallel for: task i runs on worker i % workers, so the
/// set of results is independent of timing.
void parallel_for(int tasks, const std::function<void(int)>& body) {
  const int workers = std::min(bench_thread_count(), std::max(tasks, 1));
  if (workers <= 1) {
    for (int i = 0; i < tasks; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= tasks) return;
        body(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

double component_nmse(const CVec& truth, const CVec& est) {
  const double energy = truth.squaredNorm();
  if (energy == 0.0) return kUndefined;
  return (truth - est).squaredNorm() / energy;
}

struct TrialOutput {
  std::vector<TrialRecord> records;
  double ncrb_sparse = kUndefined;
  double ncrb_diffuse = kUndefined;
  int solves = 0;
  int converged_solves = 0;
  int energy_violations = 0;
  bool failed = false;
};

ChannelConfig channel_for_trace(const BenchConfig& cfg, Eigen::Index n) {
  ChannelConfig ch = cfg.channel;
  ch.N = static_cast<int>(n);
  ch.L = cfg.diffuse_width_for_trace;
  return ch;
}

}  // namespace

int bench_thread_count() {
  if (const char* env = std::getenv("HALS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void BenchConfig::validate() const {
  channel.validate();
  if (trials < 1) throw std::invalid_argument("BenchConfig: trials must be >= 1");
  if (snr_db_list.empty()) {
    throw std::invalid_argument("BenchConfig: snr_db_list must be nonempty");
  }
  if (methods.empty()) {
    throw std::invalid_argument("BenchConfig: methods must be nonempty");
  }
  if (!trace_path.empty()) {
    if (compute_crb) {
      throw std::invalid_argument(
          "BenchConfig: CRBs need generative covariances; unsupported for traces");
    }
    for (Method m : methods) {
      if (m == Method::genie) {
        throw std::invalid_argument(
            "BenchConfig: genie needs the true support; unsupported for traces");
      }
    }
    if (hals.auto_hyper && (!hals.tau || !hals.lambda)) {
      throw std::invalid_argument(
          "BenchConfig: trace runs need explicit tau and lambda");
    }
  }
}

CrbReport trial_crb(const HsdChannelTruth& truth, const Pilots& pilots,
                    double sigma) {
  CrbInputs in;
  in.G = truth.G;
  in.D = truth.D;
  in.K_s = sparse_gain_cov(truth);
  in.K_d = diffuse_gain_cov(truth.config);
  in.sigma = sigma;
  in.pilots = pilots;
  in.rho2 = truth.h_d.squaredNorm();
  in.h_d = truth.h_d;
  return crb_report(in, truth.h_s.squaredNorm(), truth.h_d.squaredNorm());
}

namespace {

TrialOutput run_trial(const BenchConfig& cfg, const CVec* trace_h,
                      int snr_index, int trial) {
  TrialOutput out;
  const double snr_db = cfg.snr_db_list[static_cast<std::size_t>(snr_index)];
  const std::uint64_t trial_seed =
      derive_seed(cfg.master_seed, static_cast<std::uint64_t>(snr_index),
                  static_cast<std::uint64_t>(trial));

  const bool synthetic = trace_h == nullptr;
  HsdChannelTruth truth;
  CVec h_star;
  if (synthetic) {
    ChannelConfig ch = cfg.channel;
    ch.seed = derive_seed(trial_seed, 1);
    truth = sample_hsd(ch);
    h_star = truth.h;
  } else {
    h_star = *trace_h;
  }
  const int n = static_cast<int>(h_star.size());
  const CMat D = synthetic ? truth.D
                           : diffuse_basis(n, cfg.diffuse_width_for_trace);

  const double sigma = sigma_for_snr(h_star, snr_db);
  const Pilots pilots = qpsk_pilots(n, derive_seed(trial_seed, 2));
  const Observation obs = observe(h_star, pilots, sigma, derive_seed(trial_seed, 3));

  HalsOptions opts;
  if (cfg.hals.auto_hyper) {
    // Oracle-assisted defaults: hint = true ||c_d||, floored for
    // zero-diffuse configs (huge lambda then freezes c_d at zero).
    const double hint =
        synthetic ? std::max(truth.diffuse.c_d.norm(), 1e-9) : 1.0;
    const Hyperparams hp =
        default_hyperparams(sigma, n, static_cast<int>(D.cols()), hint);
    opts.tau = hp.tau;
    opts.lambda = hp.lambda;
  }
  if (cfg.hals.tau) opts.tau = *cfg.hals.tau;
  if (cfg.hals.lambda) opts.lambda = *cfg.hals.lambda;
  if (cfg.hals.admm_rho) opts.admm_rho = *cfg.hals.admm_rho;
  if (cfg.hals.tol_abs) opts.tol_abs = *cfg.hals.tol_abs;
  if (cfg.hals.tol_rel) opts.tol_rel = *cfg.hals.tol_rel;
  if (cfg.hals.max_iter) opts.max_iter = *cfg.hals.max_iter;
  const double mu = cfg.genie_mu > 0 ? cfg.genie_mu : opts.lambda;

  for (Method method : cfg.methods) {
    ChannelEstimate est;
    switch (method) {
      case Method::hals: est = pipeline_hals(obs, D, opts); break;
      case Method::anm: est = pipeline_anm(obs, opts); break;
      case Method::ls: est = least_squares(obs); break;
      case Method::genie: est = genie(obs, truth.G, D, mu); break;
    }
    TrialRecord rec;
    rec.snr_db = snr_db;
    rec.method = method_name(method);
    rec.trial_index = trial;
    rec.seed = trial_seed;
    rec.nmse_total = nmse(h_star, est.h_hat);
    rec.nmse_sparse =
        synthetic ? component_nmse(truth.h_s, est.h_s_hat) : kUndefined;
    rec.nmse_diffuse =
        synthetic ? component_nmse(truth.h_d, est.h_d_hat) : kUndefined;
    rec.support_size =
        est.support ? static_cast<int>(est.support->freqs.size()) : 0;
    rec.duality_gap = est.diag.duality_gap;
    rec.kkt_max_residual = est.diag.kkt_max_residual;
    rec.converged = est.diag.converged;
    rec.runtime_ms = cfg.record_runtime ? est.runtime_ms : 0.0;
    if (method == Method::hals || method == Method::anm) {
      rec.tau = est.diag.tau;
      rec.lambda = est.diag.lambda;
      ++out.solves;
      if (est.diag.converged) ++out.converged_solves;
      if (est.diag.converged && !est.diag.energy_bound_ok) ++out.energy_violations;
    } else if (method == Method::genie) {
      rec.lambda = mu;  // the lambda column carries mu for genie rows
    }
    out.records.push_back(std::move(rec));
  }

  if (cfg.compute_crb && synthetic) {
    const CrbReport crb = trial_crb(truth, pilots, sigma);
    if (crb.ncrb_sparse) out.ncrb_sparse = *crb.ncrb_sparse;
    if (crb.ncrb_diffuse) out.ncrb_diffuse = *crb.ncrb_diffuse;
  }
  return out;
}

BenchResult run_sweep(const BenchConfig& cfg, bool methods_enabled) {
  cfg.channel.validate();
  if (cfg.trials < 1) throw std::invalid_argument("run_sweep: trials must be >= 1");
  if (cfg.snr_db_list.empty()) {
    throw std::invalid_argument("run_sweep: snr_db_list must be nonempty");
  }
  CVec trace_h;
  const bool trace_mode = !cfg.trace_path.empty();
  if (trace_mode) {
    trace_h = load_trace(cfg.trace_path, cfg.channel.N);
  }

  const int n_snr = static_cast<int>(cfg.snr_db_list.size());
  const int tasks = n_snr * cfg.trials;
  std::vector<TrialOutput> outputs(static_cast<std::size_t>(tasks));

  BenchConfig task_cfg = cfg;
  if (!methods_enabled) task_cfg.methods.clear();

  parallel_for(tasks, [&](int i) {
    const int snr_index = i / cfg.trials;
    const int trial = i % cfg.trials;
    auto& slot = outputs[static_cast<std::size_t>(i)];
    try {
      slot = run_trial(task_cfg, trace_mode ? &trace_h : nullptr, snr_index,
                       trial);
    } catch (const std::exception&) {
      slot.failed = true;
    }
  });

  BenchResult result;
  for (int snr_index = 0; snr_index < n_snr; ++snr_index) {
    double sum_ns = 0.0, sum_nd = 0.0;
    int count_ns = 0, count_nd = 0;
    for (int trial = 0; trial < cfg.trials; ++trial) {
      auto& slot = outputs[static_cast<std::size_t>(snr_index * cfg.trials + trial)];
      if (slot.failed) {
        ++result.summary.failed_trials;
        continue;
      }
      result.summary.solves += slot.solves;
      result.summary.converged_solves += slot.converged_solves;
      result.summary.energy_bound_violations += slot.energy_violations;
      for (auto& rec : slot.records) result.records.push_back(std::move(rec));
      if (slot.ncrb_sparse != kUndefined) {
        sum_ns += slot.ncrb_sparse;
        ++count_ns;
      }
      if (slot.ncrb_diffuse != kUndefined) {
        sum_nd += slot.ncrb_diffuse;
        ++count_nd;
      }
    }
    if (cfg.compute_crb && (count_ns > 0 || count_nd > 0)) {
      auto make_crb_row = [&](const char* name, double value, double into_sparse,
                              double into_diffuse) {
        TrialRecord rec;
        rec.snr_db = cfg.snr_db_list[static_cast<std::size_t>(snr_index)];
        rec.method = name;
        rec.trial_index = cfg.trials;  // one past the trial range
        rec.seed = cfg.master_seed;
        rec.nmse_total = value;
        rec.nmse_sparse = into_sparse;
        rec.nmse_diffuse = into_diffuse;
        rec.converged = true;
        return rec;
      };
      if (count_ns > 0) {
        const double avg = sum_ns / count_ns;
        result.records.push_back(make_crb_row("ncrb_sparse", avg, avg, kUndefined));
      }
      if (count_nd > 0) {
        const double avg = sum_nd / count_nd;
        result.records.push_back(make_crb_row("ncrb_diffuse", avg, kUndefined, avg));
      }
    }
  }

  if (!cfg.output_path.empty()) {
    write_csv(result.records, cfg.output_path);
  }
  return result;
}

}  // namespace

BenchResult run_bench(const BenchConfig& cfg) {
  cfg.validate();
  return run_sweep(cfg, true);
}

BenchResult crb_sweep(const BenchConfig& cfg) {
  if (!cfg.trace_path.empty()) {
    throw std::invalid_argument(
        "crb_sweep: CRBs need generative covariances; unsupported for traces");
  }
  BenchConfig crb_cfg = cfg;
  crb_cfg.compute_crb = true;
  return run_sweep(crb_cfg, false);
}

std::string csv_header() {
  return "snr_db,method,trial_index,seed,nmse_total,nmse_sparse,nmse_diffuse,"
         "support_size,duality_gap,kkt_max_residual,converged,runtime_ms,tau,"
         "lambda";
}

std::string to_csv_row(const TrialRecord& rec) {
  std::ostringstream out;
  out << fmt_double(rec.snr_db) << ',' << rec.method << ',' << rec.trial_index
      << ',' << rec.seed << ',' << fmt_double(rec.nmse_total) << ','
      << fmt_double(rec.nmse_sparse) << ',' << fmt_double(rec.nmse_diffuse)
      << ',' << rec.support_size << ',' << fmt_double(rec.duality_gap) << ','
      << fmt_double(rec.kkt_max_residual) << ',' << (rec.converged ? 1 : 0)
      << ',' << fmt_double(rec.runtime_ms) << ',' << fmt_double(rec.tau) << ','
      << fmt_double(rec.lambda);
  return out.str();
}

TrialRecord parse_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string tok;
  std::istringstream ss(line);
  while (std::getline(ss, tok, ',')) fields.push_back(tok);
  if (fields.size() != 14) {
    throw ParseError("csv row has " + std::to_string(fields.size()) +
                     " fields, expected 14");
  }
  TrialRecord rec;
  rec.snr_db = std::stod(fields[0]);
  rec.method = fields[1];
  rec.trial_index = std::stoi(fields[2]);
  rec.seed = std::stoull(fields[3]);
  rec.nmse_total = std::stod(fields[4]);
  rec.nmse_sparse = std::stod(fields[5]);
  rec.nmse_diffuse = std::stod(fields[6]);
  rec.support_size = std::stoi(fields[7]);
  rec.duality_gap = std::stod(fields[8]);
  rec.kkt_max_residual = std::stod(fields[9]);
  rec.converged = std::stoi(fields[10]) != 0;
  rec.runtime_ms = std::stod(fields[11]);
  rec.tau = std::stod(fields[12]);
  rec.lambda = std::stod(fields[13]);
  return rec;
}

void write_csv(const std::vector<TrialRecord>& records,
               const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_csv: cannot open " + path);
  out << csv_header() << '\n';
  for (const auto& rec : records) out << to_csv_row(rec) << '\n';
  if (!out) throw IoError("write_csv: write failed for " + path);
}

namespace {

ChannelConfig channel_config_from_json(const json& j) {
  ChannelConfig cfg;
  cfg.N = j.value("N", cfg.N);
  cfg.L = j.value("L", cfg.L);
  cfg.m = j.value("m", cfg.m);
  cfg.omega = j.value("omega", cfg.omega);
  cfg.beta = j.value("beta", cfg.beta);
  cfg.delta_t = j.value("delta_t", cfg.delta_t);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.enforce_separation = j.value("enforce_separation", cfg.enforce_separation);
  return cfg;
}

json channel_config_to_json(const ChannelConfig& cfg) {
  return json{{"N", cfg.N},
              {"L", cfg.L},
              {"m", cfg.m},
              {"omega", cfg.omega},
              {"beta", cfg.beta},
              {"delta_t", cfg.delta_t},
              {"seed", cfg.seed},
              {"enforce_separation", cfg.enforce_separation}};
}

}  // namespace

BenchConfig bench_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  BenchConfig cfg;
  if (j.contains("channel")) cfg.channel = channel_config_from_json(j["channel"]);
  cfg.snr_db_list = j.value("snr_db_list", std::vector<double>{10.0});
  cfg.trials = j.value("trials", cfg.trials);
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& name : j["methods"]) {
      cfg.methods.push_back(method_from_name(name.get<std::string>()));
    }
  } else {
    cfg.methods = {Method::hals, Method::anm, Method::ls};
  }
  if (j.contains("hals")) {
    const json& h = j["hals"];
    cfg.hals.auto_hyper = h.value("auto", true);
    if (h.contains("tau")) cfg.hals.tau = h["tau"].get<double>();
    if (h.contains("lambda")) cfg.hals.lambda = h["lambda"].get<double>();
    if (h.contains("admm_rho")) cfg.hals.admm_rho = h["admm_rho"].get<double>();
    if (h.contains("tol_abs")) cfg.hals.tol_abs = h["tol_abs"].get<double>();
    if (h.contains("tol_rel")) cfg.hals.tol_rel = h["tol_rel"].get<double>();
    if (h.contains("max_iter")) cfg.hals.max_iter = h["max_iter"].get<int>();
  }
  cfg.genie_mu = j.value("genie_mu", cfg.genie_mu);
  cfg.compute_crb = j.value("compute_crb", cfg.compute_crb);
  cfg.trace_path = j.value("trace", cfg.trace_path);
  cfg.diffuse_width_for_trace =
      j.value("diffuse_width_for_trace", cfg.diffuse_width_for_trace);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  cfg.output_path = j.value("output_path", cfg.output_path);
  cfg.record_runtime = j.value("record_runtime", cfg.record_runtime);
  return cfg;
}

BenchConfig load_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return bench_config_from_json_text(buf.str());
}

SimBundle make_bundle(const ChannelConfig& cfg, double snr_db,
                      std::uint64_t master_seed) {
  const std::uint64_t trial_seed = derive_seed(master_seed, 0, 0);
  ChannelConfig ch = cfg;
  ch.seed = derive_seed(trial_seed, 1);
  SimBundle bundle;
  bundle.truth = sample_hsd(ch);
  bundle.snr_db = snr_db;
  bundle.seed = master_seed;
  const double sigma = sigma_for_snr(bundle.truth.h, snr_db);
  bundle.pilots = qpsk_pilots(ch.N, derive_seed(trial_seed, 2));
  bundle.obs = observe(bundle.truth.h, bundle.pilots, sigma,
                       derive_seed(trial_seed, 3));
  return bundle;
}

void write_bundle(const SimBundle& bundle, const std::string& path) {
  json j;
  j["kind"] = "hals_bundle";
  j["snr_db"] = bundle.snr_db;
  j["seed"] = bundle.seed;
  j["sigma"] = bundle.obs.sigma;
  j["channel"] = channel_config_to_json(bundle.truth.config);
  json paths = json::array();
  for (const auto& p : bundle.truth.paths) {
    paths.push_back(json{{"tau", p.tau},
                         {"alpha", complex_to_json(p.alpha)},
                         {"f", p.f}});
  }
  j["paths"] = paths;
  j["gamma"] = cvec_to_json(bundle.truth.diffuse.gamma);
  j["c_d"] = cvec_to_json(bundle.truth.diffuse.c_d);
  j["pilots"] = cvec_to_json(bundle.pilots.s);
  j["y"] = cvec_to_json(bundle.obs.y);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_bundle: cannot open " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write_bundle: write failed for " + path);
}

SimBundle read_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_bundle: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("bundle: ") + e.what());
  }
  if (j.value("kind", std::string{}) != "hals_bundle") {
    throw ParseError("bundle: missing kind marker");
  }
  SimBundle bundle;
  bundle.snr_db = j.at("snr_db").get<double>();
  bundle.seed = j.at("seed").get<std::uint64_t>();
  const ChannelConfig cfg = channel_config_from_json(j.at("channel"));

  HsdChannelTruth& truth = bundle.truth;
  truth.config = cfg;
  for (const auto& pj : j.at("paths")) {
    SparsePath p;
    p.tau = pj.at("tau").get<double>();
    p.alpha = cx(pj.at("alpha")[0].get<double>(), pj.at("alpha")[1].get<double>());
    p.f = pj.at("f").get<double>();
    truth.paths.push_back(p);
  }
  truth.diffuse.gamma = cvec_from_json(j.at("gamma"));
  truth.diffuse.c_d = cvec_from_json(j.at("c_d"));
  truth.D = diffuse_basis(cfg.N, cfg.L);
  std::vector<double> freqs;
  for (const auto& p : truth.paths) freqs.push_back(p.f);
  truth.G = support_matrix(freqs, cfg.N);
  truth.h_s = sparse_freq_response(truth.paths, cfg.N);
  truth.h_d = truth.D * truth.diffuse.c_d;
  truth.h = truth.h_s + truth.h_d;

  bundle.pilots.s = cvec_from_json(j.at("pilots"));
  bundle.obs.pilots = bundle.pilots;
  bundle.obs.sigma = j.at("sigma").get<double>();
  bundle.obs.y = cvec_from_json(j.at("y"));
  bundle.obs.r = bundle.obs.y.cwiseQuotient(bundle.pilots.s);
  return bundle;
}

}  // namespace hals
