#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "oscint/harness.hpp"

#include "helpers.hpp"

namespace {

nlohmann::json ode_config_json(double c, int level, int m, int N, double t_final) {
  return nlohmann::json{
      {"problem",
       {{"kind", "ode"},
        {"potential", {0.0, 0.0, 0.25}},
        {"q0", {1.0, 0.0}},
        {"p0", {0.0, 1.0}}}},
      {"scheme",
       {{"level", level},
        {"gauss_nodes", N},
        {"gamma", 0.3},
        {"c", c},
        {"periods_per_step", m}}},
      {"t_final", t_final}};
}

}  // namespace

TEST_CASE("config parsing round trip and validation", "[harness]") {
  const nlohmann::json j = ode_config_json(50.0, 2, 4, 16, 1.5);
  const oscint::RunConfig cfg = oscint::parse_run_config(j);
  CHECK(cfg.scheme.order == 2);
  CHECK(cfg.scheme.gram_degree == 1);  // default for level 2
  CHECK(cfg.scheme.gauss_nodes == 16);
  CHECK(cfg.scheme.c == 50.0);
  CHECK(cfg.scheme.periods_per_step == 4);
  CHECK(cfg.t_final == 1.5);
  CHECK(cfg.error_floor == 3e-11);
  CHECK_FALSE(cfg.with_reference);

  // serialize and reparse: every field must survive
  const oscint::RunConfig back = oscint::parse_run_config(oscint::run_config_to_json(cfg));
  CHECK(back.scheme.order == cfg.scheme.order);
  CHECK(back.scheme.gram_degree == cfg.scheme.gram_degree);
  CHECK(back.scheme.gauss_nodes == cfg.scheme.gauss_nodes);
  CHECK(back.scheme.gamma == cfg.scheme.gamma);
  CHECK(back.scheme.c == cfg.scheme.c);
  CHECK(back.scheme.periods_per_step == cfg.scheme.periods_per_step);
  CHECK(back.t_final == cfg.t_final);
  CHECK(back.error_floor == cfg.error_floor);
  CHECK(back.with_reference == cfg.with_reference);
  CHECK(back.problem == cfg.problem);

  // explicit gram_degree wins over the level default
  nlohmann::json with_M = j;
  with_M["scheme"]["gram_degree"] = 3;
  CHECK(oscint::parse_run_config(with_M).scheme.gram_degree == 3);

  CHECK_THROWS_AS(oscint::parse_run_config(nlohmann::json::array()),
                  std::invalid_argument);
  nlohmann::json bad = j;
  bad.erase("problem");
  CHECK_THROWS_AS(oscint::parse_run_config(bad), std::invalid_argument);
  bad = j;
  bad.erase("t_final");
  CHECK_THROWS_AS(oscint::parse_run_config(bad), std::invalid_argument);
  bad = j;
  bad["t_final"] = -2.0;
  CHECK_THROWS_AS(oscint::parse_run_config(bad), std::invalid_argument);
  bad = j;
  bad["scheme"]["level"] = 7;
  CHECK_THROWS_AS(oscint::parse_run_config(bad), std::invalid_argument);
  bad = j;
  bad["scheme"]["gauss_nodes"] = 0;
  CHECK_THROWS_AS(oscint::parse_run_config(bad), std::invalid_argument);
  bad = j;
  bad["scheme"]["c"] = 0.5;
  CHECK_THROWS_AS(oscint::parse_run_config(bad), std::invalid_argument);
}

TEST_CASE("solve produces a complete deterministic trajectory", "[harness]") {
  const double c = 10.0;
  oscint::RunConfig cfg = oscint::parse_run_config(ode_config_json(c, 2, 2, 8, 1.0));
  const double tau = cfg.scheme.tau();
  const long n = static_cast<long>(std::floor(cfg.t_final / tau + 1e-9));
  REQUIRE(n >= 3);

  const oscint::SolveResult res = oscint::run_solve(cfg);
  CHECK(oscint::exit_code_for(res) == oscint::kExitOk);
  CHECK_FALSE(res.blown_up);
  CHECK(res.steps_completed == n);
  REQUIRE(res.rows.size() == static_cast<std::size_t>(n) + 1);
  REQUIRE(res.diag.size() == static_cast<std::size_t>(n));
  CHECK(res.rows.front().t == 0.0);
  CHECK(res.rows.back().t == Catch::Approx(n * tau).epsilon(1e-12));
  for (const oscint::SolveRow& r : res.rows) {
    CHECK(std::isfinite(r.norm_phi));
    CHECK(std::isfinite(r.norm_w));
    CHECK(r.norm_w > 0.0);
  }
  CHECK(res.total_f_evals > 0);
  CHECK(res.summary.at("status") == "ok");
  CHECK(res.summary.at("steps_completed").get<long>() == n);

  std::ostringstream csv1, csv2, diag1;
  oscint::write_trajectory_csv(csv1, res);
  oscint::write_trajectory_csv(csv2, oscint::run_solve(cfg));
  oscint::write_diagnostics_csv(diag1, res);
  CHECK(csv1.str() == csv2.str());  // bit-identical rerun
  CHECK(csv1.str().rfind("t,norm_phi,norm_w\n", 0) == 0);
  CHECK(diag1.str().rfind("step,t,f_evals,max_depth\n", 0) == 0);

  // a reference run attaches the error column and keeps it small
  cfg.with_reference = true;
  const oscint::SolveResult wref = oscint::run_solve(cfg);
  std::ostringstream csv3;
  oscint::write_trajectory_csv(csv3, wref);
  CHECK(csv3.str().rfind("t,norm_phi,norm_w,err_vs_ref\n", 0) == 0);
  REQUIRE(wref.rows.back().has_err);
  CHECK(wref.rows.back().err < 5e-2);
  CHECK(wref.rows.back().err > 0.0);
  CHECK(wref.summary.at("reference").at("converged").get<bool>());
}

TEST_CASE("solve flags blow-up and reports the numerical exit code", "[harness]") {
  // quartic anti-well: data starts beyond the barrier, so the cubic force
  // term outruns the mass term and the norm explodes within a few steps
  nlohmann::json j = ode_config_json(3.0, 1, 1, 8, 3.0);
  j["problem"]["potential"] = {0.0, 0.0, -2.0};
  j["problem"]["q0"] = {2.0, 0.0};
  j["problem"]["p0"] = {0.0, 0.0};
  const oscint::RunConfig cfg = oscint::parse_run_config(j);
  const oscint::SolveResult res = oscint::run_solve(cfg);
  CHECK(res.blown_up);
  CHECK(oscint::exit_code_for(res) == oscint::kExitNumerical);
  CHECK(res.steps_completed < res.steps_requested);
  CHECK(res.summary.at("status") == "blow_up");
  CHECK(res.rows.size() == static_cast<std::size_t>(res.steps_completed) + 1);
}

TEST_CASE("solve rejects a step longer than the horizon", "[harness]") {
  // tau = 16 periods > t_final at c = 10
  const oscint::RunConfig cfg =
      oscint::parse_run_config(ode_config_json(10.0, 1, 16, 8, 0.5));
  CHECK_THROWS_AS(oscint::run_solve(cfg), std::invalid_argument);
}

TEST_CASE("convergence sweep fits the expected orders", "[harness]") {
  const std::vector<int> ms{1, 2, 4, 8, 16};
  const std::vector<double> cs{10.0, 100.0};

  oscint::RunConfig cfg = oscint::parse_run_config(ode_config_json(10.0, 1, 1, 8, 1.0));
  const oscint::ConvergenceReport r1 = oscint::run_converge(cfg, ms, cs);
  REQUIRE(r1.fits.size() == 2);
  for (const oscint::ConvergeFit& f : r1.fits) {
    INFO("c = " << f.c);
    REQUIRE(f.fit.ok);
    CHECK(f.fit.slope > 0.7);
    CHECK(f.fit.slope < 1.4);
  }
  // the c = 10, m = 16 cell cannot take a single step inside the horizon
  bool saw_excluded = false;
  for (const oscint::ConvergeCell& cell : r1.cells)
    if (cell.c == 10.0 && cell.m == 16) {
      CHECK_FALSE(cell.ran);
      CHECK(cell.note == "excluded: step exceeds t_final");
      saw_excluded = true;
    }
  CHECK(saw_excluded);

  // N = 16 here: the level-2 updates carry enough fast harmonics that the
  // per-period quadrature floor at N = 8 sits near 5e-6 and would swamp the
  // small-tau cells of the c = 100 column
  cfg = oscint::parse_run_config(ode_config_json(10.0, 2, 1, 16, 1.0));
  const oscint::ConvergenceReport r2 = oscint::run_converge(cfg, ms, cs);
  REQUIRE(r2.fits.size() == 2);
  for (const oscint::ConvergeFit& f : r2.fits) {
    INFO("c = " << f.c);
    REQUIRE(f.fit.ok);
    CHECK(f.fit.slope > 1.6);
    CHECK(f.fit.slope < 2.4);
  }
  // uniform accuracy: comparable error constants at both c
  REQUIRE(r2.uniformity_fits == 2);
  CHECK(r2.uniformity_ratio >= 1.0);
  CHECK(r2.uniformity_ratio <= 3.0);
}

TEST_CASE("convergence output is deterministic and ordered", "[harness]") {
  const std::vector<int> ms{4, 1, 2, 2};     // unsorted with a duplicate
  const std::vector<double> cs{30.0, 10.0};  // unsorted
  const oscint::RunConfig cfg =
      oscint::parse_run_config(ode_config_json(10.0, 1, 1, 8, 0.8));

  const oscint::ConvergenceReport a = oscint::run_converge(cfg, ms, cs);
  const oscint::ConvergenceReport b = oscint::run_converge(cfg, ms, cs);
  std::ostringstream ca, cb;
  oscint::write_converge_csv(ca, a);
  oscint::write_converge_csv(cb, b);
  CHECK(ca.str() == cb.str());
  CHECK(ca.str().rfind("c,l,m,N,tau,steps,t_end,error,threshold,kept,note\n", 0) == 0);

  // cells arrive sorted by (c, m) after dedup
  REQUIRE(a.cells.size() == 6);
  for (std::size_t i = 1; i < a.cells.size(); ++i) {
    const auto& p = a.cells[i - 1];
    const auto& q = a.cells[i];
    CHECK((p.c < q.c || (p.c == q.c && p.m < q.m)));
  }
  const nlohmann::json summary = oscint::converge_summary_json(a, cfg);
  CHECK(summary.at("fits").size() == 2);
  CHECK(summary.at("references").size() == 2);

  CHECK_THROWS_AS(oscint::run_converge(cfg, {}, cs), std::invalid_argument);
  CHECK_THROWS_AS(oscint::run_converge(cfg, ms, {0.5}), std::invalid_argument);
}

TEST_CASE("scheme self-reference matches the embedded reference", "[harness]") {
  // same sweep under both reference policies; fits must agree closely
  const std::vector<int> ms{1, 2, 4, 8};
  const std::vector<double> cs{40.0};
  const oscint::RunConfig cfg =
      oscint::parse_run_config(ode_config_json(40.0, 2, 1, 16, 0.7));

  oscint::ConvergeOptions embedded;
  embedded.reference = oscint::ConvergeOptions::Reference::embedded;
  oscint::ConvergeOptions self_ref;
  self_ref.reference = oscint::ConvergeOptions::Reference::scheme_l3;

  const oscint::ConvergenceReport re = oscint::run_converge(cfg, ms, cs, embedded);
  const oscint::ConvergenceReport rs = oscint::run_converge(cfg, ms, cs, self_ref);
  REQUIRE(re.fits.size() == 1);
  REQUIRE(rs.fits.size() == 1);
  REQUIRE(re.fits[0].fit.ok);
  REQUIRE(rs.fits[0].fit.ok);
  CHECK(re.references[0].kind == "embedded_rk");
  CHECK(rs.references[0].kind == "scheme_l3");
  CHECK(rs.fits[0].fit.slope ==
        Catch::Approx(re.fits[0].fit.slope).margin(0.15));
  for (std::size_t i = 0; i < re.cells.size(); ++i)
    if (re.cells[i].ran && rs.cells[i].ran && re.cells[i].kept)
      CHECK(rs.cells[i].error ==
            Catch::Approx(re.cells[i].error).epsilon(0.05).margin(1e-10));
}

TEST_CASE("kg solve keeps rows finite and reruns identically", "[harness]") {
  const nlohmann::json j{
      {"problem", {{"kind", "kg"}, {"n_modes", 16}}},
      {"scheme",
       {{"level", 2}, {"gauss_nodes", 8}, {"c", 20.0}, {"periods_per_step", 2}}},
      {"t_final", 0.2}};
  const oscint::RunConfig cfg = oscint::parse_run_config(j);
  const oscint::SolveResult res = oscint::run_solve(cfg);
  CHECK_FALSE(res.blown_up);
  CHECK(res.rows.size() >= 4);
  std::ostringstream c1, c2;
  oscint::write_trajectory_csv(c1, res);
  oscint::write_trajectory_csv(c2, oscint::run_solve(cfg));
  CHECK(c1.str() == c2.str());
}

TEST_CASE("quadrature demo tables carry the advertised accuracy", "[harness]") {
  using oscint::run_quad_demo;

  const auto trap = run_quad_demo("trapezoid");
  REQUIRE(trap.size() == 23);  // N = 2..24
  CHECK(trap.front().N == 2);
  CHECK(trap.back().N == 24);
  CHECK(trap.back().error < 1e-9);
  CHECK(trap.back().error < trap.front().error);

  const auto gauss = run_quad_demo("gauss");
  REQUIRE(gauss.size() == 10);  // N = 1..10
  CHECK(gauss.back().N == 10);
  CHECK(gauss.back().error < 1e-13);

  const auto gram = run_quad_demo("gram");
  std::size_t expected = 0;
  for (int M = 1; M <= 5; ++M) expected += static_cast<std::size_t>(2 * M);
  REQUIRE(gram.size() == expected);
  for (const oscint::QuadDemoRow& r : gram) CHECK(r.error <= 1e-11);

  // the fast factor of the combined-rule integrand has complex poles close
  // to the real line, so its Gauss ladder decays at a fixed geometric rate
  // rather than reaching round-off within ten nodes
  const auto dbl = run_quad_demo("double");
  REQUIRE(dbl.size() == 9);  // N = 2..10
  CHECK(dbl.back().error < 1e-3);
  CHECK(dbl.front().error >= 100.0 * dbl.back().error);

  CHECK(run_quad_demo("trapezoid", 8).size() == 7);
  CHECK_THROWS_AS(run_quad_demo("simpson"), std::invalid_argument);

  std::ostringstream os;
  oscint::write_quad_demo_csv(os, {trap.front(), gram.front()});
  const std::string text = os.str();
  CHECK(text.rfind("rule,param_M,param_m,param_N,test_function,error\n", 0) == 0);
  CHECK(text.find("trapezoid,,,2,inv_two_plus_cos,") != std::string::npos);
  CHECK(text.find("gram,1,30,,x^0,") != std::string::npos);
}

TEST_CASE("worker count honours the environment bound", "[harness]") {
  ::setenv("OSCINT_THREADS", "3", 1);
  CHECK(oscint::worker_count() == 3);
  ::setenv("OSCINT_THREADS", "0", 1);
  CHECK_THROWS_AS(oscint::worker_count(), std::invalid_argument);
  ::setenv("OSCINT_THREADS", "many", 1);
  CHECK_THROWS_AS(oscint::worker_count(), std::invalid_argument);
  ::unsetenv("OSCINT_THREADS");
  CHECK(oscint::worker_count() >= 1);
}
