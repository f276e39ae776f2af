// Command-line driver: single solves, (c, m) convergence sweeps, and
// quadrature demonstration tables. Exit codes: 0 success, 1 configuration
// or usage error, 2 numerical failure (blow-up, no measurable cells).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "oscint/harness.hpp"

namespace {

namespace fs = std::filesystem;

[[nodiscard]] nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return nlohmann::json::parse(in);
}

// "m=1,2,4" / "c=10,100" sweep clauses, repeatable
void parse_sweep(const std::string& text, std::vector<int>& m_list,
                 std::vector<double>& c_list) {
  const std::size_t eq = text.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("sweep clause needs key=values: " + text);
  const std::string key = text.substr(0, eq);
  if (key != "m" && key != "c")
    throw std::invalid_argument("unknown sweep key: " + key);
  std::size_t pos = eq + 1;
  bool any = false;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    std::size_t used = 0;
    if (item.empty()) throw std::invalid_argument("empty sweep value in: " + text);
    if (key == "m") {
      const long v = std::stol(item, &used);
      if (used != item.size())
        throw std::invalid_argument("bad sweep integer: " + item);
      m_list.push_back(static_cast<int>(v));
    } else {
      const double v = std::stod(item, &used);
      if (used != item.size())
        throw std::invalid_argument("bad sweep number: " + item);
      c_list.push_back(v);
    }
    any = true;
    pos = comma + 1;
  }
  if (!any) throw std::invalid_argument("empty sweep list in: " + text);
}

// --out beats the config's out_dir; default is the working directory
[[nodiscard]] fs::path resolve_out_dir(const std::string& cli_out,
                                       const nlohmann::json& raw) {
  if (!cli_out.empty()) return cli_out;
  if (raw.contains("out_dir")) return raw.at("out_dir").get<std::string>();
  return ".";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write: " + path.string());
  out << text;
}

int cmd_solve(const std::string& config_path, const std::string& out_dir) {
  const nlohmann::json raw = load_json(config_path);
  const oscint::RunConfig cfg = oscint::parse_run_config(raw);
  const oscint::SolveResult res = oscint::run_solve(cfg);

  const fs::path dir = resolve_out_dir(out_dir, raw);
  fs::create_directories(dir);
  std::ostringstream traj, diag;
  oscint::write_trajectory_csv(traj, res);
  oscint::write_diagnostics_csv(diag, res);
  write_file(dir / "trajectory.csv", traj.str());
  write_file(dir / "diagnostics.csv", diag.str());
  write_file(dir / "summary.json", res.summary.dump(2) + "\n");

  std::printf("status: %s\n", res.summary.at("status").get<std::string>().c_str());
  std::printf("steps:  %ld of %ld\n", res.steps_completed, res.steps_requested);
  std::printf("wrote:  %s\n", (dir / "trajectory.csv").string().c_str());
  std::printf("wrote:  %s\n", (dir / "diagnostics.csv").string().c_str());
  std::printf("wrote:  %s\n", (dir / "summary.json").string().c_str());
  if (res.blown_up)
    std::fprintf(stderr, "oscint: trajectory blew up at step %ld\n",
                 res.steps_completed + 1);
  return oscint::exit_code_for(res);
}

int cmd_converge(const std::string& config_path,
                 const std::vector<std::string>& sweeps,
                 const std::string& out_dir) {
  const nlohmann::json raw = load_json(config_path);
  const oscint::RunConfig cfg = oscint::parse_run_config(raw);
  std::vector<int> m_list;
  std::vector<double> c_list;
  for (const std::string& s : sweeps) parse_sweep(s, m_list, c_list);
  if (m_list.empty()) throw std::invalid_argument("converge needs --sweep m=...");
  if (c_list.empty()) throw std::invalid_argument("converge needs --sweep c=...");

  const oscint::ConvergenceReport rep = oscint::run_converge(cfg, m_list, c_list);

  const fs::path dir = resolve_out_dir(out_dir, raw);
  fs::create_directories(dir);
  std::ostringstream csv;
  oscint::write_converge_csv(csv, rep);
  write_file(dir / "converge.csv", csv.str());
  write_file(dir / "converge_summary.json",
             oscint::converge_summary_json(rep, cfg).dump(2) + "\n");

  for (const oscint::ConvergeFit& f : rep.fits) {
    if (f.fit.ok)
      std::printf("c=%-8g l=%d slope=%.4f constant=%.4g points=%d\n", f.c, f.l,
                  f.fit.slope, f.error_constant, f.fit.n_used);
    else
      std::printf("c=%-8g l=%d no fit (too few measurable cells)\n", f.c, f.l);
  }
  if (rep.uniformity_fits >= 2)
    std::printf("uniformity ratio: %.4f over %d fits\n", rep.uniformity_ratio,
                rep.uniformity_fits);
  std::printf("wrote:  %s\n", (dir / "converge.csv").string().c_str());
  std::printf("wrote:  %s\n", (dir / "converge_summary.json").string().c_str());

  bool any_ran = false;
  for (const oscint::ConvergeCell& cell : rep.cells) any_ran |= cell.ran;
  if (!any_ran) {
    std::fprintf(stderr, "oscint: no sweep cell produced a measurement\n");
    return oscint::kExitNumerical;
  }
  return oscint::kExitOk;
}

int cmd_quad_demo(const std::string& rule, int max_n) {
  const std::vector<oscint::QuadDemoRow> rows = oscint::run_quad_demo(rule, max_n);
  std::ostringstream csv;
  oscint::write_quad_demo_csv(csv, rows);
  std::fputs(csv.str().c_str(), stdout);
  return oscint::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oscillatory Klein-Gordon time integrator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, rule;
  std::vector<std::string> sweeps;
  int max_n = 0;

  CLI::App* solve = app.add_subcommand("solve", "integrate one configuration");
  solve->add_option("--config", config_path, "JSON configuration file")->required();
  solve->add_option("--out", out_dir, "output directory");

  CLI::App* conv = app.add_subcommand("converge", "run a (c, m) sweep and fit orders");
  conv->add_option("--config", config_path, "JSON configuration file")->required();
  conv->add_option("--sweep", sweeps, "sweep clause, e.g. m=1,2,4 or c=10,100")
      ->required();
  conv->add_option("--out", out_dir, "output directory");

  CLI::App* quad = app.add_subcommand("quad-demo", "print a quadrature error table");
  quad->add_option("--rule", rule, "trapezoid | gauss | gram | double")
      ->required()
      ->check(CLI::IsMember({"trapezoid", "gauss", "gram", "double"}));
  quad->add_option("--max-n", max_n, "largest node count")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return oscint::kExitConfig;
  }

  try {
    if (solve->parsed()) return cmd_solve(config_path, out_dir);
    if (conv->parsed()) return cmd_converge(config_path, sweeps, out_dir);
    return cmd_quad_demo(rule, max_n);
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "oscint: config error: %s\n", e.what());
    return oscint::kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "oscint: config error: %s\n", e.what());
    return oscint::kExitConfig;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "oscint: config error: %s\n", e.what());
    return oscint::kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "oscint: output error: %s\n", e.what());
    return oscint::kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "oscint: numerical failure: %s\n", e.what());
    return oscint::kExitNumerical;
  }
}
