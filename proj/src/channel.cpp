#include "hals/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hals/rng.hpp"

namespace hals {

void ChannelConfig::validate() const {
  if (N < 1) throw std::invalid_argument("ChannelConfig: N must be >= 1");
  if (L < 1) throw std::invalid_argument("ChannelConfig: L must be >= 1");
  if (m < 0 || m > L) throw std::invalid_argument("ChannelConfig: need 0 <= m <= L");
  if (omega < 0) throw std::invalid_argument("ChannelConfig: omega must be >= 0");
  if (beta < 0) throw std::invalid_argument("ChannelConfig: beta must be >= 0");
  if (!(delta_t > 0)) throw std::invalid_argument("ChannelConfig: delta_t must be > 0");
}

CVec atom(double f, int n) {
  if (!(f >= 0.0 && f <= 1.0)) {
    throw std::invalid_argument("atom: frequency must lie in [0, 1]");
  }
  CVec a(n);
  for (int k = 0; k < n; ++k) {
    const double phase = kTwoPi * f * k;
    a[k] = cx(std::cos(phase), std::sin(phase));
  }
  return a;
}

CMat diffuse_basis(int n, int l) {
  if (n < 1 || l < 1) {
    throw std::invalid_argument("diffuse_basis: dimensions must be >= 1");
  }
  CMat d(n, l);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int col = 0; col < l; ++col) {
    d.col(col) = scale * atom(static_cast<double>(col) / l, n);
  }
  return d;
}

CVec sparse_freq_response(const std::vector<SparsePath>& paths, int n) {
  CVec h = CVec::Zero(n);
  for (const auto& p : paths) {
    h += p.alpha * atom(p.f, n);
  }
  return h;
}

CMat support_matrix(const std::vector<double>& freqs, int n) {
  CMat g(n, static_cast<Eigen::Index>(freqs.size()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    g.col(static_cast<Eigen::Index>(i)) = scale * atom(freqs[i], n);
  }
  return g;
}

HsdChannelTruth sample_hsd(const ChannelConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double ts = cfg.symbol_time();

  HsdChannelTruth truth;
  truth.config = cfg;
  truth.paths.resize(cfg.m);

  // Delays first, then path gains, then tap gains: the draw order is part
  // of the determinism contract.
  std::vector<double> taus(cfg.m);
  for (int i = 0; i < cfg.m; ++i) {
    for (;;) {
      const double tau = rng.uniform(0.0, ts);
      if (cfg.enforce_separation) {
        const double f = (ts - tau) / ts;
        const double min_sep = 1.0 / cfg.N;
        bool clash = false;
        for (int k = 0; k < i; ++k) {
          const double fk = (ts - taus[k]) / ts;
          const double d = std::abs(f - fk);
          if (std::min(d, 1.0 - d) < min_sep) {
            clash = true;
            break;
          }
        }
        if (clash) continue;
      }
      taus[i] = tau;
      break;
    }
  }
  for (int i = 0; i < cfg.m; ++i) {
    auto& p = truth.paths[i];
    p.tau = taus[i];
    p.f = (ts - p.tau) / ts;
    p.alpha = rng.cnormal(std::exp(-cfg.omega * p.tau / cfg.delta_t));
  }

  truth.diffuse.gamma.resize(cfg.L);
  for (int r = 0; r < cfg.L; ++r) {
    truth.diffuse.gamma[r] = rng.cnormal(cfg.beta * std::exp(-cfg.omega * r));
  }
  // c_d = sqrt(N) [gamma_0, gamma_{L-1}, ..., gamma_1]
  const double root_n = std::sqrt(static_cast<double>(cfg.N));
  truth.diffuse.c_d.resize(cfg.L);
  truth.diffuse.c_d[0] = root_n * truth.diffuse.gamma[0];
  for (int k = 1; k < cfg.L; ++k) {
    truth.diffuse.c_d[k] = root_n * truth.diffuse.gamma[cfg.L - k];
  }

  truth.D = diffuse_basis(cfg.N, cfg.L);
  std::vector<double> freqs(cfg.m);
  for (int i = 0; i < cfg.m; ++i) freqs[i] = truth.paths[i].f;
  truth.G = support_matrix(freqs, cfg.N);

  truth.h_s = sparse_freq_response(truth.paths, cfg.N);
  truth.h_d = truth.D * truth.diffuse.c_d;
  truth.h = truth.h_s + truth.h_d;
  return truth;
}

CVec load_trace(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("load_trace: cannot open " + path);
  }
  std::string line;
  long line_no = 0;
  std::vector<std::pair<long, cx>> rows;
  bool header_checked = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header_checked) {
      header_checked = true;
      if (line.find("index") != std::string::npos) continue;  // header row
    }
    std::istringstream ss(line);
    std::string tok;
    double vals[3];
    for (int k = 0; k < 3; ++k) {
      if (!std::getline(ss, tok, ',')) {
        throw ParseError(path, line_no, "expected 3 comma-separated fields");
      }
      try {
        std::size_t used = 0;
        vals[k] = std::stod(tok, &used);
        while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError(path, line_no, "non-numeric field '" + tok + "'");
      }
    }
    if (!std::isfinite(vals[1]) || !std::isfinite(vals[2])) {
      throw ParseError(path, line_no, "non-finite sample");
    }
    rows.emplace_back(static_cast<long>(vals[0]), cx(vals[1], vals[2]));
  }
  if (static_cast<long>(rows.size()) < n) {
    throw std::length_error("load_trace: " + path + " has " +
                            std::to_string(rows.size()) + " samples, need " +
                            std::to_string(n));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  CVec h(n);
  for (int k = 0; k < n; ++k) h[k] = rows[static_cast<std::size_t>(k)].second;
  return h;
}

CMat sparse_gain_cov(const HsdChannelTruth& truth) {
  const auto m = static_cast<Eigen::Index>(truth.paths.size());
  CMat k = CMat::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& p = truth.paths[static_cast<std::size_t>(i)];
    k(i, i) = std::exp(-truth.config.omega * p.tau / truth.config.delta_t);
  }
  return k;
}

CMat diffuse_gain_cov(const ChannelConfig& cfg) {
  CMat k = CMat::Zero(cfg.L, cfg.L);
  k(0, 0) = cfg.beta;
  for (int idx = 1; idx < cfg.L; ++idx) {
    k(idx, idx) = cfg.beta * std::exp(-cfg.omega * (cfg.L - idx));
  }
  return k;
}

}  // namespace hals
