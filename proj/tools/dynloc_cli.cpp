// Command-line front end: materialize the builtin scenarios, run one
// scenario or the whole suite, or produce the convergence study.  Reports
// carry no wall-clock data; timings go to a csv sidecar so that repeated
// runs with one seed stay byte-identical.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dynloc/scenario.hpp"

namespace fs = std::filesystem;
using namespace dynloc;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Timing {
  std::string name;
  double seconds;
};

std::string timings_csv(const std::vector<Timing>& ts) {
  std::ostringstream os;
  os << "name,seconds\n";
  for (const auto& t : ts) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%.3f\n", t.name.c_str(), t.seconds);
    os << buf;
  }
  return os.str();
}

ScenarioReport run_one(const Scenario& s, double tol_scale, std::vector<Timing>& ts) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioReport rep = run_scenario(s, ExecPolicy::Parallel, tol_scale);
  ts.push_back({s.name, std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count()});
  std::printf("%-26s %-22s kin=%-3d dyn=%-3d %s\n", s.name.c_str(), rep.verdict.c_str(),
              rep.dim_kin, rep.dim_dyn, rep.expected ? "expected" : "UNEXPECTED");
  return rep;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamical-locality laboratory"};
  app.require_subcommand(1);

  std::string config, out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int levels = 3;
  double tol_scale = 1.0;

  auto add_common = [&](CLI::App* cmd, bool with_levels) {
    cmd->add_option("--config", config, "scenario json file, or a directory of them");
    cmd->add_option("--out", out, "output file or directory");
    cmd->add_option("--seed", seed, "override the scenario seed")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--tolerance-scale", tol_scale,
                    "stretch upper bounds and shrink lower bounds by this factor");
    if (with_levels) cmd->add_option("--levels", levels, "refinement levels");
  };

  CLI::App* cmd_build =
      app.add_subcommand("build", "write the builtin scenario files");
  add_common(cmd_build, false);
  CLI::App* cmd_run = app.add_subcommand("run", "run one scenario and write its report");
  add_common(cmd_run, false);
  CLI::App* cmd_suite =
      app.add_subcommand("suite", "run every scenario and write reports");
  add_common(cmd_suite, false);
  CLI::App* cmd_converge =
      app.add_subcommand("converge", "run the refinement study");
  add_common(cmd_converge, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_build->parsed()) {
      const fs::path dir = out.empty() ? "scenarios" : out;
      for (const Scenario& s : builtin_scenarios()) {
        write_file_atomic((dir / (s.name + ".json")).string(), scenario_to_json_text(s));
        std::printf("wrote %s\n", (dir / (s.name + ".json")).c_str());
      }
      return 0;
    }

    if (cmd_run->parsed()) {
      if (config.empty()) throw std::runtime_error("run needs --config <scenario.json>");
      Scenario s = scenario_from_json_text(read_file(config));
      if (seed_set) s.seed = seed;
      std::vector<Timing> ts;
      ScenarioReport rep = run_one(s, tol_scale, ts);
      const std::string path = out.empty() ? "report.json" : out;
      write_file_atomic(path, report_to_json_text(rep));
      write_file_atomic(path + ".timings.csv", timings_csv(ts));
      return rep.expected ? 0 : 1;
    }

    if (cmd_suite->parsed()) {
      std::vector<Scenario> list;
      if (!config.empty()) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(config))
          if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& p : files)
          list.push_back(scenario_from_json_text(read_file(p.string())));
        if (list.empty()) throw std::runtime_error("no scenario files in " + config);
      } else {
        list = builtin_scenarios();
      }
      if (seed_set)
        for (Scenario& s : list) s.seed = seed;

      const fs::path dir = out.empty() ? "out" : out;
      std::vector<Timing> ts;
      std::vector<ScenarioReport> reports;
      int unexpected = 0;
      for (const Scenario& s : list) {
        reports.push_back(run_one(s, tol_scale, ts));
        if (!reports.back().expected) ++unexpected;
        write_file_atomic((dir / (s.name + ".report.json")).string(),
                          report_to_json_text(reports.back()));
      }
      write_file_atomic((dir / "suite.csv").string(), suite_to_csv(reports));
      write_file_atomic((dir / "timings.csv").string(), timings_csv(ts));
      std::printf("%d scenario(s), %d unexpected\n", int(list.size()), unexpected);
      return unexpected ? 1 : 0;
    }

    if (cmd_converge->parsed()) {
      ConvergeConfig cfg;
      cfg.levels = levels;
      const auto t0 = std::chrono::steady_clock::now();
      ConvergenceStudy study = run_convergence(cfg);
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const fs::path dir = out.empty() ? "out" : out;
      write_file_atomic((dir / "convergence.json").string(),
                        convergence_to_json_text(study));
      write_file_atomic((dir / "convergence.csv").string(), convergence_to_csv(study));
      write_file_atomic((dir / "timings.csv").string(),
                        timings_csv({{"converge", wall}}));
      std::printf("mode slope %.2f, value slope %.2f, route slopes %.2f %.2f %.2f\n",
                  study.green_mode_slope, study.green_value_slope,
                  study.magic_fd_flow_slope, study.magic_flow_stress_slope,
                  study.magic_fd_stress_slope);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
