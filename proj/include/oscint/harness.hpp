#pragma once

// Run orchestration shared by the command-line driver and the test suite:
// configuration parsing and validation, single-run trajectories with
// optional reference errors, convergence sweeps over (c, m) grids with
// order fits, and the quadrature demonstration tables. All CSV output is
// deterministic: fixed column order, %.17g values, LF line ends.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"

#include "oscint/core.hpp"
#include "oscint/fit.hpp"
#include "oscint/integrator.hpp"
#include "oscint/problems.hpp"
#include "oscint/quadrature.hpp"
#include "oscint/reference.hpp"

namespace oscint {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

[[nodiscard]] inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Worker pool width: OSCINT_THREADS when set (strictly parsed), otherwise
/// the hardware concurrency clamped to a small default.
[[nodiscard]] inline int worker_count() {
  const char* env = std::getenv("OSCINT_THREADS");
  if (env == nullptr || *env == '\0') {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
  }
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 256)
    throw std::invalid_argument("OSCINT_THREADS must be an integer in 1..256");
  return static_cast<int>(v);
}

// ============================================================
// Configuration
// ============================================================

struct RunConfig {
  nlohmann::json problem;      // problem description, forwarded to build_problem
  SchemeParams scheme;         // level, gram degree, node count, gamma, c, m
  double t_final = 1.0;        // integration horizon
  double error_floor = 3e-11;  // absolute part of the resolution floor
  bool with_reference = false; // attach reference errors to solve output
};

[[nodiscard]] inline RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  if (!j.contains("problem")) throw std::invalid_argument("config: missing \"problem\"");
  RunConfig cfg;
  cfg.problem = j.at("problem");
  if (!cfg.problem.is_object())
    throw std::invalid_argument("config: \"problem\" must be an object");
  if (!j.contains("t_final")) throw std::invalid_argument("config: missing \"t_final\"");
  cfg.t_final = j.at("t_final").get<double>();
  if (!std::isfinite(cfg.t_final) || cfg.t_final <= 0.0)
    throw std::invalid_argument("config: t_final must be positive");

  const nlohmann::json s = j.value("scheme", nlohmann::json::object());
  if (!s.is_object()) throw std::invalid_argument("config: \"scheme\" must be an object");
  cfg.scheme.order = s.value("level", 1);
  cfg.scheme.gram_degree = s.contains("gram_degree")
                               ? s.at("gram_degree").get<int>()
                               : SchemeParams::default_gram_degree(cfg.scheme.order);
  cfg.scheme.gauss_nodes = s.value("gauss_nodes", 8);
  cfg.scheme.gamma = s.value("gamma", 0.5);
  cfg.scheme.c = s.value("c", 10.0);
  cfg.scheme.periods_per_step = s.value("periods_per_step", 1);
  cfg.scheme.validate();

  cfg.error_floor = j.value("error_floor", 3e-11);
  if (!std::isfinite(cfg.error_floor) || cfg.error_floor < 0.0)
    throw std::invalid_argument("config: error_floor must be >= 0");
  cfg.with_reference = j.value("with_reference", false);
  return cfg;
}

[[nodiscard]] inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  return nlohmann::json{
      {"problem", cfg.problem},
      {"scheme",
       {{"level", cfg.scheme.order},
        {"gram_degree", cfg.scheme.gram_degree},
        {"gauss_nodes", cfg.scheme.gauss_nodes},
        {"gamma", cfg.scheme.gamma},
        {"c", cfg.scheme.c},
        {"periods_per_step", cfg.scheme.periods_per_step}}},
      {"t_final", cfg.t_final},
      {"error_floor", cfg.error_floor},
      {"with_reference", cfg.with_reference}};
}

[[nodiscard]] inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot read " + path);
  return parse_run_config(nlohmann::json::parse(in));
}

// ============================================================
// Reference sizing
// ============================================================

/// Cap on the embedded-integrator resolution so a full run-doubling ladder
/// stays within a fixed evaluation budget for the span at hand.
[[nodiscard]] inline long pick_npp_cap(double periods) {
  const double budget = 2.0e8;  // nonlinearity evaluations, ladder included
  const double cap = budget / (std::max(periods, 1.0) * 18.0);
  long npp = 64;
  while (2 * npp <= 8192 && static_cast<double>(2 * npp) <= cap) npp *= 2;
  return npp;
}

// ============================================================
// Single run
// ============================================================

struct SolveRow {
  double t = 0.0;
  double norm_phi = 0.0;
  double norm_w = 0.0;
  bool has_err = false;
  double err = 0.0;
};

struct SolveDiagRow {
  long step = 0;
  double t = 0.0;
  long f_evals = 0;
  int max_depth = 0;
};

struct SolveResult {
  std::vector<SolveRow> rows;      // one per completed step plus the start
  std::vector<SolveDiagRow> diag;  // one per completed step
  bool blown_up = false;
  long steps_requested = 0;
  long steps_completed = 0;
  long total_f_evals = 0;
  nlohmann::json summary;
};

[[nodiscard]] inline int exit_code_for(const SolveResult& r) {
  return r.blown_up ? kExitNumerical : kExitOk;
}

template <class JP>
[[nodiscard]] SolveResult run_solve_typed(const Problem<JP>& prob, const RunConfig& cfg) {
  using NL = typename Problem<JP>::NL;
  SchemeParams p = cfg.scheme;
  p.validate();
  const double tau = p.tau();
  const long n = static_cast<long>(std::floor(cfg.t_final / tau + 1e-9));
  if (n < 1)
    throw std::invalid_argument("solve: step tau = " + std::to_string(tau) +
                                " exceeds t_final");

  SchemeEngine<JP, NL> engine(p, prob.basis, prob.f);
  State<JP> w = initial_twist<JP>(prob.phi0, prob.phi0_prime, prob.basis, p.c);
  const double blow_limit = 1e6 * std::max(1.0, norm(w));

  std::vector<State<JP>> ref;
  nlohmann::json ref_info;
  if (cfg.with_reference) {
    std::vector<double> phases(static_cast<std::size_t>(n));
    for (long k = 1; k <= n; ++k)
      phases[static_cast<std::size_t>(k - 1)] =
          static_cast<double>(k) * p.periods_per_step;
    NL f = prob.f;
    auto rr = reference_run<JP, NL>(w, 0.0, prob.basis, p.c, f, phases, 1e-12, 64,
                                    pick_npp_cap(phases.back()));
    ref = std::move(rr.samples);
    ref_info = {{"converged", rr.converged},
                {"err_est", rr.err_est},
                {"nodes_per_period", rr.nodes_per_period}};
  }

  SolveResult out;
  out.steps_requested = n;
  out.rows.reserve(static_cast<std::size_t>(n) + 1);
  out.diag.reserve(static_cast<std::size_t>(n));
  out.rows.push_back({0.0, norm(untwist_phi<JP>(w)), norm(w), cfg.with_reference, 0.0});

  int max_depth = 0;
  for (long k = 1; k <= n; ++k) {
    w = engine.step(w, static_cast<double>(k - 1) * tau);
    const StepDiagnostics d = engine.last_diagnostics();
    out.total_f_evals += d.f_evals;
    max_depth = std::max(max_depth, d.max_depth);

    SolveRow r;
    r.t = static_cast<double>(k) * tau;
    r.norm_w = norm(w);
    r.norm_phi = norm(untwist_phi<JP>(w));
    if (cfg.with_reference) {
      r.has_err = true;
      r.err = norm(w - ref[static_cast<std::size_t>(k - 1)]);
    }
    out.rows.push_back(r);
    out.diag.push_back({k, r.t, d.f_evals, d.max_depth});
    out.steps_completed = k;
    if (!std::isfinite(r.norm_w) || r.norm_w > blow_limit) {
      out.blown_up = true;
      break;
    }
  }

  out.summary = {{"status", out.blown_up ? "blow_up" : "ok"},
                 {"problem", prob.name},
                 {"steps_requested", out.steps_requested},
                 {"steps_completed", out.steps_completed},
                 {"tau", tau},
                 {"t_reached", static_cast<double>(out.steps_completed) * tau},
                 {"norm_phi_final", out.rows.back().norm_phi},
                 {"norm_w_final", out.rows.back().norm_w},
                 {"f_evals", out.total_f_evals},
                 {"max_depth", max_depth},
                 {"reference", ref_info},
                 {"config", run_config_to_json(cfg)}};
  return out;
}

[[nodiscard]] inline SolveResult run_solve(const RunConfig& cfg) {
  ProblemVariant prob = build_problem(cfg.problem, cfg.scheme.c);
  return std::visit([&](const auto& p) { return run_solve_typed(p, cfg); }, prob);
}

inline void write_trajectory_csv(std::ostream& os, const SolveResult& res) {
  const bool with_err = !res.rows.empty() && res.rows.front().has_err;
  os << "t,norm_phi,norm_w" << (with_err ? ",err_vs_ref" : "") << "\n";
  for (const SolveRow& r : res.rows) {
    os << fmt_g17(r.t) << ',' << fmt_g17(r.norm_phi) << ',' << fmt_g17(r.norm_w);
    if (with_err) os << ',' << fmt_g17(r.err);
    os << "\n";
  }
}

inline void write_diagnostics_csv(std::ostream& os, const SolveResult& res) {
  os << "step,t,f_evals,max_depth\n";
  for (const SolveDiagRow& d : res.diag)
    os << d.step << ',' << fmt_g17(d.t) << ',' << d.f_evals << ',' << d.max_depth
       << "\n";
}

// ============================================================
// Convergence sweep
// ============================================================

struct ConvergeOptions {
  enum class Reference { automatic, embedded, scheme_l3 };
  Reference reference = Reference::automatic;
  double ref_tol = 1e-12;
  // automatic switches from the embedded integrator to the level-3 scheme
  // march once the span holds more fast periods than this
  double self_ref_periods = 1e5;
};

struct ConvergeCell {
  double c = 0.0;
  int l = 0;
  int m = 0;
  int N = 0;
  double tau = 0.0;
  long steps = 0;
  double t_end = 0.0;  // common comparison time, 0 for excluded cells
  bool ran = false;
  bool kept = false;
  double error = 0.0;      // valid when ran
  double threshold = 0.0;  // resolution floor backing the keep decision
  std::string note;        // comma-free status detail
};

struct ConvergeFit {
  double c = 0.0;
  int l = 0;
  OrderFit fit;
  double error_constant = 0.0;  // geometric mean of err / tau^l over kept cells
};

struct ReferenceInfo {
  double c = 0.0;
  std::string kind;  // "embedded_rk" or "scheme_l3"
  bool converged = false;
  double err_est = 0.0;
  long nodes_per_period = 0;
};

struct ConvergenceReport {
  std::vector<ConvergeCell> cells;  // ordered by (c, m), l and N fixed
  std::vector<ConvergeFit> fits;    // one per c
  std::vector<ReferenceInfo> references;
  double uniformity_ratio = 0.0;  // max/min error constant across c
  int uniformity_fits = 0;        // fits entering the ratio, 0 when < 2
};

namespace detail {

template <class JP>
void converge_for_c(const Problem<JP>& prob, const RunConfig& cfg,
                    const std::vector<int>& m_list, const ConvergeOptions& opt,
                    int workers, ConvergenceReport& rep) {
  using NL = typename Problem<JP>::NL;
  const SchemeParams base = cfg.scheme;
  const double T = base.period();

  struct Job {
    std::size_t cell = 0;
    long steps = 0;
    double phase = 0.0;       // endpoint in fast periods
    std::size_t ref_idx = 0;  // filled once phases are deduplicated
  };

  // Errors are compared at a common endpoint whenever possible: the largest
  // multiple of lcm(m) periods inside the horizon. Mixed endpoints flatten
  // the fitted slope, since a larger step that falls short of t_final has
  // accumulated less error than its step size alone predicts.
  long common_lcm = 1;
  bool have_common = false;
  for (int m : m_list) {
    if (m * T > cfg.t_final * (1.0 + 1e-12)) continue;
    const long g = std::gcd(common_lcm, static_cast<long>(m));
    common_lcm = common_lcm / g * m;
    have_common = true;
    if (common_lcm > 1000000) {
      have_common = false;
      break;
    }
  }
  long common_periods = 0;
  if (have_common) {
    const long blocks =
        static_cast<long>(std::floor(cfg.t_final / (common_lcm * T) + 1e-9));
    common_periods = blocks * common_lcm;
    if (common_periods < 1) have_common = false;
  }

  // A cell whose error cannot clear the keep threshold even with a very
  // generous error constant contributes nothing to the fit, so its march is
  // skipped outright. The reference term can only raise the final threshold
  // above this preliminary one, which keeps the skip conservative.
  const double threshold_pre =
      10.0 * (std::pow(base.gamma, 2.0 * base.gauss_nodes) + cfg.error_floor);

  const std::size_t first_cell = rep.cells.size();
  std::vector<Job> jobs;
  for (int m : m_list) {
    ConvergeCell cell;
    cell.c = base.c;
    cell.l = base.order;
    cell.m = m;
    cell.N = base.gauss_nodes;
    cell.tau = m * T;
    const long ragged = static_cast<long>(std::floor(cfg.t_final / cell.tau + 1e-9));
    cell.steps = have_common ? common_periods / m : ragged;
    if (cell.steps < 1) {
      cell.steps = 0;
      cell.note = "excluded: step exceeds t_final";
    } else if (1000.0 * std::pow(cell.tau, cell.l) < threshold_pre) {
      cell.t_end = static_cast<double>(cell.steps) * cell.tau;
      cell.threshold = threshold_pre;
      cell.note = "excluded: predicted below resolution floor";
    } else {
      cell.t_end = static_cast<double>(cell.steps) * cell.tau;
      Job job;
      job.cell = rep.cells.size();
      job.steps = cell.steps;
      job.phase = static_cast<double>(cell.steps) * m;
      jobs.push_back(job);
    }
    rep.cells.push_back(std::move(cell));
  }

  std::vector<double> phases;
  for (const Job& j : jobs) phases.push_back(j.phase);
  std::sort(phases.begin(), phases.end());
  phases.erase(std::unique(phases.begin(), phases.end()), phases.end());
  for (Job& j : jobs)
    j.ref_idx = static_cast<std::size_t>(
        std::lower_bound(phases.begin(), phases.end(), j.phase) - phases.begin());

  ReferenceInfo info;
  info.c = base.c;
  info.kind = "not_built";
  info.converged = true;
  double ref_err_est = 0.0;
  std::vector<State<JP>> refs;
  bool ref_ok = !phases.empty();
  bool cache_hit = false;
  std::string cache_key;
  struct CachedRef {
    std::vector<State<JP>> refs;
    double err_est = 0.0;
    long nodes_per_period = 0;
    bool converged = false;
    bool usable = false;
    std::string kind;
  };
  // Reference trajectories are memoized across calls: repeated sweeps over
  // the same problem, c, horizon, and reference flavor (typical when several
  // levels share one grid) reuse the march instead of repeating it.
  static std::map<std::string, CachedRef> ref_cache;
  static std::mutex ref_cache_mu;
  if (ref_ok) {
    const double span = phases.back();
    const bool use_scheme =
        opt.reference == ConvergeOptions::Reference::scheme_l3 ||
        (opt.reference == ConvergeOptions::Reference::automatic &&
         span > opt.self_ref_periods);
    cache_key = cfg.problem.dump();
    cache_key += '|';
    cache_key += fmt_g17(base.c);
    cache_key += use_scheme ? "|scheme|" : "|rk|";
    cache_key += fmt_g17(use_scheme ? double(std::max(base.gauss_nodes, 16))
                                    : opt.ref_tol);
    for (double ph : phases) {
      cache_key += '|';
      cache_key += std::to_string(std::lround(ph));
    }
    {
      const std::lock_guard<std::mutex> lk(ref_cache_mu);
      const auto it = ref_cache.find(cache_key);
      if (it != ref_cache.end()) {
        refs = it->second.refs;
        ref_err_est = it->second.err_est;
        info.kind = it->second.kind;
        info.converged = it->second.converged;
        info.err_est = it->second.err_est;
        info.nodes_per_period = it->second.nodes_per_period;
        ref_ok = it->second.usable;
        cache_hit = true;
      }
    }
  }
  if (ref_ok && !cache_hit) {
    const State<JP> w0 =
        initial_twist<JP>(prob.phi0, prob.phi0_prime, prob.basis, base.c);
    const double span = phases.back();
    const bool use_scheme =
        opt.reference == ConvergeOptions::Reference::scheme_l3 ||
        (opt.reference == ConvergeOptions::Reference::automatic &&
         span > opt.self_ref_periods);
    if (use_scheme) {
      // high-level single-period march; its own error sits far below the
      // floor terms, so it contributes nothing to the keep threshold
      SchemeParams rp = base;
      rp.order = 3;
      rp.gram_degree = SchemeParams::default_gram_degree(3);
      rp.gauss_nodes = std::max(base.gauss_nodes, 16);
      rp.periods_per_step = 1;
      SchemeEngine<JP, NL> eng(rp, prob.basis, prob.f);
      State<JP> w = w0;
      refs.resize(phases.size());
      std::size_t next = 0;
      const long span_l = std::lround(span);
      for (long k = 1; k <= span_l && next < phases.size(); ++k) {
        w = eng.step(w, static_cast<double>(k - 1) * T);
        if (!std::isfinite(norm(w))) {
          ref_ok = false;
          break;
        }
        if (static_cast<double>(k) == phases[next]) refs[next++] = w;
      }
      info.kind = "scheme_l3";
      info.converged = ref_ok;
      info.err_est = 0.0;
    } else {
      NL f = prob.f;
      auto rr = reference_run<JP, NL>(w0, 0.0, prob.basis, base.c, f, phases,
                                      opt.ref_tol, 64, pick_npp_cap(span));
      refs = std::move(rr.samples);
      ref_err_est = rr.err_est;
      info.kind = "embedded_rk";
      info.converged = rr.converged;
      info.err_est = rr.err_est;
      info.nodes_per_period = rr.nodes_per_period;
      ref_ok = true;
      for (const State<JP>& s : refs)
        if (!std::isfinite(norm(s))) ref_ok = false;
    }
    CachedRef entry;
    entry.refs = refs;
    entry.err_est = ref_err_est;
    entry.nodes_per_period = info.nodes_per_period;
    entry.converged = info.converged;
    entry.usable = ref_ok;
    entry.kind = info.kind;
    const std::lock_guard<std::mutex> lk(ref_cache_mu);
    ref_cache.emplace(std::move(cache_key), std::move(entry));
  }
  rep.references.push_back(info);

  const double threshold =
      10.0 * (std::pow(base.gamma, 2.0 * base.gauss_nodes) + cfg.error_floor +
              ref_err_est);

  if (!ref_ok) {
    for (const Job& j : jobs) rep.cells[j.cell].note = "failed: reference unavailable";
  } else {
    std::atomic<std::size_t> cursor{0};
    const auto work = [&] {
      for (;;) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= jobs.size()) return;
        const Job& job = jobs[i];
        ConvergeCell& cell = rep.cells[job.cell];
        try {
          SchemeParams p = base;
          p.periods_per_step = cell.m;
          SchemeEngine<JP, NL> eng(p, prob.basis, prob.f);
          State<JP> w =
              initial_twist<JP>(prob.phi0, prob.phi0_prime, prob.basis, base.c);
          bool finite = true;
          for (long k = 1; k <= job.steps; ++k) {
            w = eng.step(w, static_cast<double>(k - 1) * cell.tau);
            if (!std::isfinite(norm(w))) {
              finite = false;
              break;
            }
          }
          if (!finite) {
            cell.note = "failed: non-finite state";
            continue;
          }
          cell.error = norm(w - refs[job.ref_idx]);
          cell.ran = true;
          cell.threshold = threshold;
          cell.kept = std::isfinite(cell.error) && cell.error > threshold;
          if (!cell.kept) cell.note = "excluded: below resolution floor";
        } catch (const std::exception& e) {
          cell.note = std::string("failed: ") + e.what();
        }
      }
    };
    const int nt = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nt) - 1);
    for (int i = 0; i + 1 < nt; ++i) pool.emplace_back(work);
    work();
    for (std::thread& th : pool) th.join();
  }

  ConvergeFit cf;
  cf.c = base.c;
  cf.l = base.order;
  std::vector<std::pair<double, double>> pairs;
  double log_sum = 0.0;
  int log_n = 0;
  for (std::size_t i = first_cell; i < rep.cells.size(); ++i) {
    const ConvergeCell& cell = rep.cells[i];
    if (!cell.ran) continue;
    pairs.emplace_back(cell.tau, cell.error);
    if (cell.kept) {
      log_sum += std::log(cell.error / std::pow(cell.tau, cell.l));
      ++log_n;
    }
  }
  cf.fit = fit_order(pairs, threshold);
  if (log_n > 0) cf.error_constant = std::exp(log_sum / log_n);
  rep.fits.push_back(cf);
}

}  // namespace detail

/// Sweep the scheme over every (c, m) pair at the configured level, compare
/// each endpoint state against a per-c reference trajectory, and fit the
/// observed order per c on the cells that clear the resolution floor. The
/// per-c reference is computed once and shared by all of that c's cells.
[[nodiscard]] inline ConvergenceReport run_converge(const RunConfig& cfg,
                                                    std::vector<int> m_list,
                                                    std::vector<double> c_list,
                                                    const ConvergeOptions& opt = {}) {
  cfg.scheme.validate();
  std::sort(m_list.begin(), m_list.end());
  m_list.erase(std::unique(m_list.begin(), m_list.end()), m_list.end());
  std::sort(c_list.begin(), c_list.end());
  c_list.erase(std::unique(c_list.begin(), c_list.end()), c_list.end());
  if (m_list.empty()) throw std::invalid_argument("converge: empty m sweep");
  if (c_list.empty()) throw std::invalid_argument("converge: empty c sweep");
  for (int m : m_list)
    if (m < 1) throw std::invalid_argument("converge: m must be >= 1");
  for (double c : c_list)
    if (!std::isfinite(c) || c < 1.0)
      throw std::invalid_argument("converge: c must be >= 1");

  const int workers = worker_count();
  ConvergenceReport rep;
  for (double c : c_list) {
    RunConfig cc = cfg;
    cc.scheme.c = c;
    const ProblemVariant prob = build_problem(cfg.problem, c);
    std::visit(
        [&](const auto& p) { detail::converge_for_c(p, cc, m_list, opt, workers, rep); },
        prob);
  }

  double cmin = 0.0, cmax = 0.0;
  int used = 0;
  for (const ConvergeFit& f : rep.fits) {
    if (!f.fit.ok || f.fit.n_used < 2 || !(f.error_constant > 0.0)) continue;
    if (used == 0) {
      cmin = cmax = f.error_constant;
    } else {
      cmin = std::min(cmin, f.error_constant);
      cmax = std::max(cmax, f.error_constant);
    }
    ++used;
  }
  if (used >= 2) {
    rep.uniformity_ratio = cmax / cmin;
    rep.uniformity_fits = used;
  }
  return rep;
}

inline void write_converge_csv(std::ostream& os, const ConvergenceReport& rep) {
  os << "c,l,m,N,tau,steps,t_end,error,threshold,kept,note\n";
  for (const ConvergeCell& cell : rep.cells) {
    os << fmt_g17(cell.c) << ',' << cell.l << ',' << cell.m << ',' << cell.N << ','
       << fmt_g17(cell.tau) << ',' << cell.steps << ',' << fmt_g17(cell.t_end) << ',';
    if (cell.ran) os << fmt_g17(cell.error);
    os << ',' << fmt_g17(cell.threshold) << ',' << (cell.kept ? 1 : 0) << ','
       << cell.note << "\n";
  }
}

[[nodiscard]] inline nlohmann::json converge_summary_json(const ConvergenceReport& rep,
                                                          const RunConfig& cfg) {
  nlohmann::json fits = nlohmann::json::array();
  for (const ConvergeFit& f : rep.fits)
    fits.push_back({{"c", f.c},
                    {"l", f.l},
                    {"slope", f.fit.slope},
                    {"intercept", f.fit.intercept},
                    {"n_used", f.fit.n_used},
                    {"ok", f.fit.ok},
                    {"error_constant", f.error_constant}});
  nlohmann::json refs = nlohmann::json::array();
  for (const ReferenceInfo& r : rep.references)
    refs.push_back({{"c", r.c},
                    {"kind", r.kind},
                    {"converged", r.converged},
                    {"err_est", r.err_est},
                    {"nodes_per_period", r.nodes_per_period}});
  nlohmann::json uni;
  if (rep.uniformity_fits >= 2)
    uni = {{"ratio", rep.uniformity_ratio}, {"fits_used", rep.uniformity_fits}};
  return nlohmann::json{{"fits", fits},
                        {"references", refs},
                        {"uniformity", uni},
                        {"config", run_config_to_json(cfg)}};
}

// ============================================================
// Quadrature demonstration tables
// ============================================================

struct QuadDemoRow {
  std::string rule;
  int M = -1;  // -1 renders as an empty CSV field
  int m = -1;
  int N = -1;
  std::string test_function;
  double error = 0.0;
};

namespace detail {

/// Reference value of int_0^tau e^s / (2 + cos(2 pi s / T)) ds with
/// T = tau / m: the per-period factor separates, leaving one smooth
/// single-period integral times a geometric sum of period weights.
[[nodiscard]] inline double two_scale_exp_reference(double tau, int m) {
  const double T = tau / m;
  const QuadratureRule g = gauss_legendre(48);
  double inner = 0.0;  // int_0^1 e^(sigma T) / (2 + cos(2 pi sigma)) dsigma
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double s = 0.5 * (g.nodes[k] + 1.0);
    inner += 0.5 * g.weights[k] * std::exp(s * T) / (2.0 + std::cos(2.0 * pi * s));
  }
  const double ratio = std::expm1(tau) / std::expm1(T);  // sum of e^(kT), k < m
  return T * inner * ratio;
}

}  // namespace detail

/// Error tables for the four quadrature building blocks, each against a
/// closed-form or separably computed reference. `max_n` caps the swept
/// parameter (node count, or rule degree for the grid rule); zero keeps
/// the defaults.
[[nodiscard]] inline std::vector<QuadDemoRow> run_quad_demo(const std::string& rule,
                                                            int max_n = 0) {
  std::vector<QuadDemoRow> rows;
  if (rule == "trapezoid") {
    const int top = max_n > 0 ? std::clamp(max_n, 2, 64) : 24;
    const double exact = 1.0 / std::sqrt(3.0);
    for (int nn = 2; nn <= top; ++nn) {
      const double v =
          trapezoid_periodic([](double x) { return 1.0 / (2.0 + std::cos(2.0 * pi * x)); }, nn);
      rows.push_back({"trapezoid", -1, -1, nn, "inv_two_plus_cos", std::abs(v - exact)});
    }
  } else if (rule == "gauss") {
    const int top = max_n > 0 ? std::clamp(max_n, 1, 32) : 10;
    const double exact = std::expm1(1.0);
    for (int nn = 1; nn <= top; ++nn) {
      const double v =
          gauss_integrate([](double x) { return std::exp(x); }, 0.0, 1.0,
                          gauss_legendre(nn));
      rows.push_back({"gauss", -1, -1, nn, "exp", std::abs(v - exact)});
    }
  } else if (rule == "gram") {
    const int top = max_n > 0 ? std::clamp(max_n, 1, 8) : 5;
    const int mm = 30;
    for (int M = 1; M <= top; ++M) {
      const GramRule gr = gram_rule(M, mm);
      for (int d = 0; d <= 2 * M - 1; ++d) {
        double grid = 0.0;
        for (int j = 0; j < mm; ++j)
          grid += std::pow(-1.0 + 2.0 * j / (mm - 1.0), d);
        grid *= 2.0 / mm;
        double comp = 0.0;
        for (std::size_t k = 0; k < gr.size(); ++k)
          comp += gr.weights[k] * std::pow(gr.nodes[k], d);
        rows.push_back({"gram", M, mm, -1, "x^" + std::to_string(d),
                        std::abs(comp - grid)});
      }
    }
  } else if (rule == "double") {
    const int top = max_n > 0 ? std::clamp(max_n, 2, 24) : 10;
    const double tau = 0.25;
    const int mm = 20, MM = 3;
    const double T = tau / mm;
    const double exact = detail::two_scale_exp_reference(tau, mm);
    const auto g = [&](double rho, double sigma) {
      return std::exp(rho + sigma * T) / (2.0 + std::cos(2.0 * pi * sigma));
    };
    for (int nn = 2; nn <= top; ++nn) {
      const double v = double_rule(g, tau, mm, MM, nn);
      rows.push_back({"double", MM, mm, nn, "exp_over_two_plus_cos",
                      std::abs(v - exact)});
    }
  } else {
    throw std::invalid_argument("quad-demo: unknown rule \"" + rule + "\"");
  }
  return rows;
}

inline void write_quad_demo_csv(std::ostream& os, const std::vector<QuadDemoRow>& rows) {
  os << "rule,param_M,param_m,param_N,test_function,error\n";
  for (const QuadDemoRow& r : rows) {
    os << r.rule << ',';
    if (r.M >= 0) os << r.M;
    os << ',';
    if (r.m >= 0) os << r.m;
    os << ',';
    if (r.N >= 0) os << r.N;
    os << ',' << r.test_function << ',' << fmt_g17(r.error) << "\n";
  }
}

}  // namespace oscint
