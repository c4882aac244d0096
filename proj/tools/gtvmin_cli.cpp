// gtvmin command-line front end. All numerical work goes through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "gtvmin/gtvmin.h"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<std::string> out;
  std::optional<std::string> solver;
  std::optional<std::uint64_t> max_iter;
  std::optional<double> tol;
};

void add_common_flags(CLI::App *cmd, Overrides &o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--alpha", o.alpha, "GTVMin regularization strength (replaces alpha_list)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--solver", o.solver, "exact | iterative")
      ->check(CLI::IsMember({"exact", "iterative"}));
  cmd->add_option("--max-iter", o.max_iter, "Iteration cap for the iterative solver");
  cmd->add_option("--tol", o.tol, "Relative objective decrease tolerance");
}

int report(gtv_status status) {
  if (status != GTV_OK)
    std::cerr << "gtvmin: " << gtv_last_error() << "\n";
  return static_cast<int>(status);
}

// Loads the config file (if any) and applies flag overrides. Returns a JSON
// document or an exit code.
std::variant<std::string, int> merged_config(const Overrides &o) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) {
      std::cerr << "gtvmin: cannot open config file " << o.config_path << "\n";
      return static_cast<int>(GTV_ERR_IO);
    }
    try {
      cfg = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
      std::cerr << "gtvmin: " << o.config_path << ": " << e.what() << "\n";
      return static_cast<int>(GTV_ERR_VALIDATION);
    }
    if (!cfg.is_object()) {
      std::cerr << "gtvmin: " << o.config_path << " must hold a JSON object\n";
      return static_cast<int>(GTV_ERR_VALIDATION);
    }
  }
  if (o.seed)
    cfg["seed"] = *o.seed;
  if (o.alpha)
    cfg["alpha_list"] = {*o.alpha};
  if (o.out)
    cfg["out"] = *o.out;
  if (o.solver)
    cfg["solver"] = *o.solver;
  if (o.max_iter)
    cfg["max_iter"] = *o.max_iter;
  if (o.tol)
    cfg["tol"] = *o.tol;
  return cfg.dump();
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Clustered federated learning via generalized total variation minimization"};
  app.require_subcommand(1);

  Overrides gen_o, solve_o, analyze_o, sweep_o;
  auto *gen = app.add_subcommand("generate", "Write a synthetic clustered scenario");
  add_common_flags(gen, gen_o);

  std::string scenario_dir;
  auto *solve = app.add_subcommand("solve", "Solve GTVMin on a scenario directory");
  add_common_flags(solve, solve_o);
  solve->add_option("--scenario", scenario_dir, "Scenario directory")->required();

  std::string analyze_scenario, result_file, cluster_sel = "all";
  auto *analyze = app.add_subcommand("analyze", "Evaluate the cluster deviation bound");
  add_common_flags(analyze, analyze_o);
  analyze->add_option("--scenario", analyze_scenario, "Scenario directory")->required();
  analyze->add_option("--result", result_file, "Result JSON from `solve`")->required();
  analyze->add_option("--cluster", cluster_sel, "Cluster index or 'all'");

  auto *sweep = app.add_subcommand("sweep", "Trace the bound over alpha_list (and p_out_list)");
  add_common_flags(sweep, sweep_o);

  std::uint64_t self_seed = 2024;
  std::size_t self_count = 100;
  auto *self = app.add_subcommand("selftest", "Run the bound property suites");
  self->add_option("--seed", self_seed, "RNG seed");
  self->add_option("--count", self_count, "Random scenarios per suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    // Usage errors are validation failures; --help exits 0.
    return code == 0 ? 0 : static_cast<int>(GTV_ERR_VALIDATION);
  }

  auto with_config = [](const Overrides &o, auto &&fn) -> int {
    auto cfg = merged_config(o);
    if (auto *code = std::get_if<int>(&cfg))
      return *code;
    return fn(std::get<std::string>(cfg));
  };

  if (gen->parsed())
    return with_config(gen_o, [](const std::string &cfg) {
      return report(gtv_cmd_generate(cfg.c_str()));
    });

  if (solve->parsed())
    return with_config(solve_o, [&](const std::string &cfg) {
      return report(gtv_cmd_solve(cfg.c_str(), scenario_dir.c_str()));
    });

  if (analyze->parsed())
    return with_config(analyze_o, [&](const std::string &cfg) {
      long long cluster = -1;
      if (cluster_sel != "all") {
        try {
          std::size_t pos = 0;
          cluster = std::stoll(cluster_sel, &pos);
          if (pos != cluster_sel.size() || cluster < 0)
            throw std::invalid_argument(cluster_sel);
        } catch (const std::exception &) {
          std::cerr << "gtvmin: --cluster must be a non-negative index or 'all'\n";
          return static_cast<int>(GTV_ERR_VALIDATION);
        }
      }
      std::size_t rows = 0, violations = 0;
      const gtv_status st = gtv_cmd_analyze(cfg.c_str(), analyze_scenario.c_str(),
                                            result_file.c_str(), cluster, &rows, &violations);
      if (st == GTV_OK)
        std::cout << rows << " cluster report(s), " << violations << " violated\n";
      return report(st);
    });

  if (sweep->parsed())
    return with_config(sweep_o, [](const std::string &cfg) {
      std::size_t rows = 0;
      const gtv_status st = gtv_cmd_sweep(cfg.c_str(), &rows);
      if (st == GTV_OK)
        std::cout << rows << " sweep row(s) written\n";
      return report(st);
    });

  if (self->parsed()) {
    int passed = 0;
    char *summary = nullptr;
    const gtv_status st = gtv_selftest(self_seed, self_count, &passed, &summary);
    if (st != GTV_OK)
      return report(st);
    std::cout << summary;
    gtv_string_free(summary);
    return passed ? 0 : static_cast<int>(GTV_ERR_NUMERICAL);
  }
  return 0;
}
