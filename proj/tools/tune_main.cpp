#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pidtune/csv.hpp"
#include "pidtune/harness.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitNumericalFailure = 3;

pidtune::ExperimentConfig resolve_config(const std::string& preset,
                                         const std::string& config_file) {
  pidtune::ExperimentConfig cfg =
      preset.empty() ? pidtune::case1_config() : pidtune::preset_config(preset);
  if (!config_file.empty()) pidtune::apply_config_file(cfg, config_file);
  return cfg;
}

int cmd_run(const std::string& config_file, const std::string& preset,
            const std::string& algo, long long seed, const std::string& out,
            long long budget) {
  pidtune::ExperimentConfig cfg = resolve_config(preset, config_file);
  if (!algo.empty()) pidtune::apply_key(cfg, "algo", algo);
  if (seed >= 0) pidtune::apply_key(cfg, "seed", std::to_string(seed));
  if (budget >= 0) pidtune::apply_key(cfg, "budget", std::to_string(budget));
  if (!out.empty()) cfg.out_dir = out;

  const pidtune::RunArtifacts art = pidtune::run(cfg);
  std::cout << "run complete: algo=" << pidtune::algorithm_name(cfg.algo)
            << " seed=" << cfg.seed << " interactions=" << art.records.size() << "\n";
  if (!art.records.empty()) {
    std::cout << "final params: kp=" << pidtune::fmt_double(art.final_params.kp)
              << " tau_i=" << pidtune::fmt_double(art.final_params.tau_i)
              << " tau_d=" << pidtune::fmt_double(art.final_params.tau_d)
              << " reward=" << pidtune::fmt_double(art.records.back().reward) << "\n";
    std::cout << "best reward " << pidtune::fmt_double(art.best_reward) << " at interaction "
              << art.best_interaction << "\n";
  }
  if (!cfg.out_dir.empty()) std::cout << "artifacts written to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_oracle(const std::string& config_file, const std::string& preset, int resolution,
               const std::string& out) {
  const pidtune::ExperimentConfig cfg = resolve_config(preset, config_file);
  const pidtune::OracleResult result = pidtune::oracle(cfg, resolution, out);
  std::cout << "oracle: " << result.cells.size() << " cells evaluated\n"
            << "best: kp=" << pidtune::fmt_double(result.best.kp)
            << " tau_i=" << pidtune::fmt_double(result.best.tau_i)
            << " tau_d=" << pidtune::fmt_double(result.best.tau_d)
            << " reward=" << pidtune::fmt_double(result.best_reward) << "\n";
  if (!out.empty()) std::cout << "oracle.csv written to " << out << "\n";
  return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b, double threshold,
                const std::string& out) {
  const pidtune::CompareReport report = pidtune::compare(dir_a, dir_b, threshold, out);
  std::cout << report.text;
  if (!out.empty()) std::cout << "compare.csv written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PID autotuning experiments: two-stage entropy-driven tuner, "
               "TD3 baseline and a brute-force grid oracle"};
  app.require_subcommand(1);

  std::string config_file, preset, algo, out;
  long long seed = -1, budget = -1;
  int resolution = 0;
  std::string dir_a, dir_b;
  double threshold = -11250.0;

  CLI::App* run_cmd = app.add_subcommand("run", "execute one seeded training run");
  run_cmd->add_option("--config", config_file, "flat key = value config file");
  run_cmd->add_option("--preset", preset, "case1 or case2")
      ->check(CLI::IsMember({"case1", "case2"}));
  run_cmd->add_option("--algo", algo, "emtd3 or td3")
      ->check(CLI::IsMember({"emtd3", "td3"}));
  run_cmd->add_option("--seed", seed, "run seed");
  run_cmd->add_option("--budget", budget, "interaction budget");
  run_cmd->add_option("--out", out, "output directory for artifacts");

  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "brute-force grid search over the action box");
  oracle_cmd->add_option("--config", config_file, "flat key = value config file");
  oracle_cmd->add_option("--preset", preset, "case1 or case2")
      ->check(CLI::IsMember({"case1", "case2"}));
  oracle_cmd->add_option("--resolution", resolution, "grid points per axis (>= 2)")
      ->required();
  oracle_cmd->add_option("--out", out, "output directory for oracle.csv");

  CLI::App* compare_cmd = app.add_subcommand("compare", "compare two run directories");
  compare_cmd->add_option("--a", dir_a, "first run directory")->required();
  compare_cmd->add_option("--b", dir_b, "second run directory")->required();
  compare_cmd->add_option("--threshold", threshold,
                          "reward threshold for interactions-to-threshold");
  compare_cmd->add_option("--out", out, "output directory for compare.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(config_file, preset, algo, seed, out, budget);
    if (oracle_cmd->parsed()) return cmd_oracle(config_file, preset, resolution, out);
    if (compare_cmd->parsed()) return cmd_compare(dir_a, dir_b, threshold, out);
  } catch (const pidtune::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const pidtune::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
