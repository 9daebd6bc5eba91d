#include "pidtune/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "pidtune/csv.hpp"

namespace fs = std::filesystem;

namespace pidtune {
namespace {

std::string stage_name(Stage stage) { return stage == Stage::Warmup ? "warmup" : "exploit"; }

void write_artifacts(const RunArtifacts& art) {
  const fs::path dir = art.config.out_dir;
  fs::create_directories(dir);

  {
    CsvWriter curve((dir / "learning_curve.csv").string(),
                    {"interaction", "kp", "tau_i", "tau_d", "reward", "critic_loss_1",
                     "critic_loss_2", "actor_objective", "beta", "sigma2", "stage"});
    for (const TrainRecord& r : art.records)
      curve.row({std::to_string(r.interaction), fmt_double(r.params.kp),
                 fmt_double(r.params.tau_i), fmt_double(r.params.tau_d),
                 fmt_double(r.reward), fmt_double(r.critic_loss_1),
                 fmt_double(r.critic_loss_2), fmt_double(r.actor_objective),
                 fmt_double(r.beta), fmt_double(r.sigma2), stage_name(r.stage)});
  }
  {
    CsvWriter actions((dir / "actions.csv").string(),
                      {"interaction", "kp", "tau_i", "tau_d", "stage"});
    for (const TrainRecord& r : art.records)
      actions.row({std::to_string(r.interaction), fmt_double(r.params.kp),
                   fmt_double(r.params.tau_i), fmt_double(r.params.tau_d),
                   stage_name(r.stage)});
  }
  {
    CsvWriter traj((dir / "final_trajectory.csv").string(), {"t", "y", "u", "y_sp"});
    for (std::size_t i = 0; i < art.final_trajectory.y.size(); ++i)
      traj.row({fmt_double(static_cast<double>(i) * art.config.episode.dt),
                fmt_double(art.final_trajectory.y[i]), fmt_double(art.final_trajectory.u[i]),
                fmt_double(art.final_trajectory.y_sp[i])});
  }
  {
    std::ofstream cfg(dir / "config_resolved.txt");
    cfg << serialize_config(art.config);
  }
  {
    std::vector<double> rewards;
    rewards.reserve(art.records.size());
    for (const TrainRecord& r : art.records) rewards.push_back(r.reward);

    std::ofstream summary(dir / "summary.txt");
    summary << "algo = " << algorithm_name(art.config.algo) << "\n";
    summary << "seed = " << art.config.seed << "\n";
    summary << "interactions = " << art.records.size() << "\n";
    if (!art.records.empty()) {
      summary << "final_kp = " << fmt_double(art.final_params.kp) << "\n";
      summary << "final_tau_i = " << fmt_double(art.final_params.tau_i) << "\n";
      summary << "final_tau_d = " << fmt_double(art.final_params.tau_d) << "\n";
      summary << "final_reward = " << fmt_double(art.records.back().reward) << "\n";
      summary << "final10_mean_reward = " << fmt_double(trailing_mean(rewards, 10)) << "\n";
      summary << "best_reward = " << fmt_double(art.best_reward) << "\n";
      summary << "best_interaction = " << art.best_interaction << "\n";
    }
    summary << "wall_ms = " << fmt_double(art.wall_ms) << "\n";
  }
}

}  // namespace

double trailing_mean(const std::vector<double>& values, int window) {
  if (values.empty() || window < 1) return std::nan("");
  const std::size_t n = std::min<std::size_t>(window, values.size());
  double sum = 0.0;
  for (std::size_t i = values.size() - n; i < values.size(); ++i) sum += values[i];
  return sum / static_cast<double>(n);
}

RunArtifacts run(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();

  Trainer trainer(cfg.algo, cfg.episode, cfg.agent, cfg.schedules, cfg.plant, cfg.seed);
  RunArtifacts art;
  art.config = cfg;
  art.best_reward = -std::numeric_limits<double>::infinity();

  std::vector<double> rewards;
  double best_trailing = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int k = 0; k < cfg.agent.budget; ++k) {
    const TrainRecord rec = trainer.step();
    rewards.push_back(rec.reward);
    if (rec.reward > art.best_reward) {
      art.best_reward = rec.reward;
      art.best_interaction = rec.interaction;
    }
    art.records.push_back(rec);

    if (cfg.stop_on_plateau && static_cast<int>(rewards.size()) >= cfg.plateau_window) {
      const double m = trailing_mean(rewards, cfg.plateau_window);
      if (m > best_trailing + cfg.plateau_tol) {
        best_trailing = m;
        since_best = 0;
      } else if (++since_best >= cfg.plateau_patience) {
        break;
      }
    }
  }
  art.final_trajectory = trainer.last_trajectory();
  art.final_params = trainer.last_params();
  art.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  if (!cfg.out_dir.empty()) write_artifacts(art);
  return art;
}

namespace {

std::vector<double> axis_points(const Bounds& b, int resolution) {
  std::vector<double> pts;
  if (b.hi <= b.lo) {
    pts.push_back(b.lo);
    return pts;
  }
  pts.reserve(resolution);
  for (int i = 0; i < resolution; ++i)
    pts.push_back(b.lo + (b.hi - b.lo) * static_cast<double>(i) /
                             static_cast<double>(resolution - 1));
  return pts;
}

std::vector<double> window_points(const Bounds& b, double center, double half_width) {
  // 10x-finer pass: one coarse cell on each side, sampled at a tenth of the
  // coarse spacing.
  std::vector<double> pts;
  if (b.hi <= b.lo || half_width <= 0.0) {
    pts.push_back(std::clamp(center, b.lo, b.hi));
    return pts;
  }
  const double lo = std::max(b.lo, center - half_width);
  const double hi = std::min(b.hi, center + half_width);
  const double step = half_width / 10.0;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
  for (int i = 0; i < n; ++i) pts.push_back(std::min(lo + step * i, hi));
  return pts;
}

void evaluate_cells(const ExperimentConfig& cfg, const DiscreteSS& plant,
                    std::vector<OracleCell>& cells, int threads) {
  int hw = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  hw = std::clamp(hw, 1, 16);
  const std::size_t n = cells.size();
  std::vector<std::thread> pool;
  std::atomic<std::size_t> cursor{0};
  const auto worker = [&] {
    for (std::size_t i = cursor.fetch_add(64); i < n; i = cursor.fetch_add(64)) {
      const std::size_t end = std::min(n, i + 64);
      for (std::size_t j = i; j < end; ++j)
        cells[j].reward = reward(run_episode(plant, cells[j].params, cfg.episode));
    }
  };
  if (hw == 1 || n < 128) {
    worker();
    return;
  }
  pool.reserve(hw);
  for (int t = 0; t < hw; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

// Index-order scan with strict improvement: independent of evaluation order.
std::size_t argmax_cell(const std::vector<OracleCell>& cells, std::size_t from) {
  std::size_t best = from;
  for (std::size_t i = from; i < cells.size(); ++i)
    if (cells[i].reward > cells[best].reward) best = i;
  return best;
}

}  // namespace

OracleResult oracle(const ExperimentConfig& cfg, int resolution, const std::string& out_dir,
                    int threads) {
  validate(cfg);
  if (resolution < 2) throw ConfigError("oracle resolution must be >= 2");
  const DiscreteSS plant = discretize(cfg.plant);
  const ActionBox& box = cfg.episode.action_box;

  const auto kp_pts = axis_points(box.kp, resolution);
  const auto ti_pts = axis_points(box.tau_i, resolution);
  const auto td_pts = axis_points(box.tau_d, resolution);

  OracleResult result;
  result.cells.reserve(kp_pts.size() * ti_pts.size() * td_pts.size());
  for (double kp : kp_pts)
    for (double ti : ti_pts)
      for (double td : td_pts)
        result.cells.push_back(
            {PidParams{kp, std::max(ti, cfg.episode.tau_i_floor), td}, 0.0});

  evaluate_cells(cfg, plant, result.cells, threads);
  std::size_t best = argmax_cell(result.cells, 0);
  const PidParams coarse_best = result.cells[best].params;

  const auto half = [&](const Bounds& b) {
    return b.hi > b.lo ? (b.hi - b.lo) / static_cast<double>(resolution - 1) : 0.0;
  };
  const auto kp_fine = window_points(box.kp, coarse_best.kp, half(box.kp));
  const auto ti_fine = window_points(box.tau_i, coarse_best.tau_i, half(box.tau_i));
  const auto td_fine = window_points(box.tau_d, coarse_best.tau_d, half(box.tau_d));

  const std::size_t refine_from = result.cells.size();
  for (double kp : kp_fine)
    for (double ti : ti_fine)
      for (double td : td_fine)
        result.cells.push_back(
            {PidParams{kp, std::max(ti, cfg.episode.tau_i_floor), td}, 0.0});
  std::vector<OracleCell> refined(result.cells.begin() + refine_from, result.cells.end());
  evaluate_cells(cfg, plant, refined, threads);
  std::copy(refined.begin(), refined.end(), result.cells.begin() + refine_from);

  best = argmax_cell(result.cells, 0);
  result.best = result.cells[best].params;
  result.best_reward = result.cells[best].reward;

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    CsvWriter csv((fs::path(out_dir) / "oracle.csv").string(),
                  {"kp", "tau_i", "tau_d", "reward"});
    for (const OracleCell& c : result.cells)
      csv.row({fmt_double(c.params.kp), fmt_double(c.params.tau_i),
               fmt_double(c.params.tau_d), fmt_double(c.reward)});
    std::ofstream summary(fs::path(out_dir) / "oracle_summary.txt");
    summary << "cells = " << result.cells.size() << "\n"
            << "best_kp = " << fmt_double(result.best.kp) << "\n"
            << "best_tau_i = " << fmt_double(result.best.tau_i) << "\n"
            << "best_tau_d = " << fmt_double(result.best.tau_d) << "\n"
            << "best_reward = " << fmt_double(result.best_reward) << "\n";
  }
  return result;
}

int occupied_cells(const std::vector<PidParams>& actions, const ActionBox& box,
                   int partitions, int first_n) {
  const auto cell = [partitions](double v, const Bounds& b) {
    if (b.hi <= b.lo) return 0;
    const double rel = (v - b.lo) / (b.hi - b.lo);
    return std::clamp(static_cast<int>(rel * partitions), 0, partitions - 1);
  };
  std::set<int> seen;
  const int n = std::min<int>(first_n, static_cast<int>(actions.size()));
  for (int i = 0; i < n; ++i) {
    const PidParams& p = actions[i];
    const int idx = (cell(p.kp, box.kp) * partitions + cell(p.tau_i, box.tau_i)) * partitions +
                    cell(p.tau_d, box.tau_d);
    seen.insert(idx);
  }
  return static_cast<int>(seen.size());
}

namespace {

std::vector<fs::path> discover_runs(const std::string& dir) {
  std::vector<fs::path> runs;
  const fs::path root(dir);
  if (fs::exists(root / "learning_curve.csv")) {
    runs.push_back(root);
    return runs;
  }
  if (!fs::is_directory(root)) throw ConfigError("no run directory at " + dir);
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && fs::exists(entry.path() / "learning_curve.csv"))
      runs.push_back(entry.path());
  std::sort(runs.begin(), runs.end());
  if (runs.empty()) throw ConfigError("no runs found under " + dir);
  return runs;
}

struct LoadedRun {
  fs::path path;
  std::map<std::string, std::string> config;
  std::vector<double> rewards;
  std::vector<PidParams> actions;
};

LoadedRun load_run(const fs::path& dir) {
  LoadedRun run;
  run.path = dir;
  run.config = read_kv_file((dir / "config_resolved.txt").string());

  const CsvTable curve = read_csv((dir / "learning_curve.csv").string());
  const int reward_col = curve.column("reward");
  if (reward_col < 0) throw ConfigError("learning_curve.csv misses a reward column");
  for (const auto& row : curve.rows) run.rewards.push_back(parse_double(row[reward_col]));

  const CsvTable actions = read_csv((dir / "actions.csv").string());
  const int kp_col = actions.column("kp");
  const int ti_col = actions.column("tau_i");
  const int td_col = actions.column("tau_d");
  if (kp_col < 0 || ti_col < 0 || td_col < 0)
    throw ConfigError("actions.csv misses parameter columns");
  for (const auto& row : actions.rows)
    run.actions.push_back(PidParams{parse_double(row[kp_col]), parse_double(row[ti_col]),
                                    parse_double(row[td_col])});
  return run;
}

RunSummary summarize_run(const LoadedRun& run, double threshold) {
  RunSummary s;
  s.path = run.path.string();
  if (const auto it = run.config.find("algo"); it != run.config.end()) s.algo = it->second;
  if (const auto it = run.config.find("seed"); it != run.config.end())
    s.seed = static_cast<std::uint64_t>(parse_int(it->second));

  s.final_mean = trailing_mean(run.rewards, 10);
  for (std::size_t k = 1; k <= run.rewards.size(); ++k) {
    std::vector<double> prefix(run.rewards.begin(), run.rewards.begin() + k);
    if (trailing_mean(prefix, 10) >= threshold) {
      s.interactions_to_threshold = static_cast<int>(k);
      break;
    }
  }

  ActionBox box;
  int warmup = 0;
  const auto key = [&](const char* name) {
    const auto it = run.config.find(name);
    if (it == run.config.end()) throw ConfigError("config_resolved.txt misses " + std::string(name));
    return it->second;
  };
  box.kp = {parse_double(key("kp_lo")), parse_double(key("kp_hi"))};
  box.tau_i = {parse_double(key("tau_i_lo")), parse_double(key("tau_i_hi"))};
  box.tau_d = {parse_double(key("tau_d_lo")), parse_double(key("tau_d_hi"))};
  warmup = static_cast<int>(parse_int(key("warmup")));

  s.occupied_cells = occupied_cells(run.actions, box, 5, warmup);
  s.occupied_fraction = static_cast<double>(s.occupied_cells) / 125.0;
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

CompareReport compare(const std::string& dir_a, const std::string& dir_b, double threshold,
                      const std::string& out_dir) {
  std::vector<LoadedRun> runs_a, runs_b;
  for (const fs::path& p : discover_runs(dir_a)) runs_a.push_back(load_run(p));
  for (const fs::path& p : discover_runs(dir_b)) runs_b.push_back(load_run(p));

  // Every run must come from the same preset; only algo/seed/out_dir differ.
  const auto& reference = runs_a.front().config;
  const auto check = [&](const LoadedRun& run) {
    for (const auto& [key, value] : reference) {
      if (key == "algo" || key == "seed" || key == "out_dir") continue;
      const auto it = run.config.find(key);
      if (it == run.config.end() || it->second != value)
        throw ConfigError("mismatched presets: key '" + key + "' differs at " +
                          run.path.string());
    }
  };
  for (const LoadedRun& r : runs_a) check(r);
  for (const LoadedRun& r : runs_b) check(r);

  CompareReport report;
  for (const LoadedRun& r : runs_a) report.a.push_back(summarize_run(r, threshold));
  for (const LoadedRun& r : runs_b) report.b.push_back(summarize_run(r, threshold));

  const auto collect = [](const std::vector<RunSummary>& side, auto proj) {
    std::vector<double> out;
    for (const RunSummary& s : side) out.push_back(proj(s));
    return out;
  };
  const auto final_of = [](const RunSummary& s) { return s.final_mean; };
  const auto cells_of = [](const RunSummary& s) { return static_cast<double>(s.occupied_cells); };

  const double med_final_a = median(collect(report.a, final_of));
  const double med_final_b = median(collect(report.b, final_of));
  const double med_cells_a = median(collect(report.a, cells_of));
  const double med_cells_b = median(collect(report.b, cells_of));

  int wins = 0;
  const std::size_t paired = std::min(report.a.size(), report.b.size());
  for (std::size_t i = 0; i < paired; ++i)
    if (report.a[i].occupied_cells > report.b[i].occupied_cells) ++wins;

  std::ostringstream text;
  text << "comparison: " << dir_a << " (" << report.a.size() << " runs) vs " << dir_b << " ("
       << report.b.size() << " runs)\n";
  text << "reward threshold: " << fmt_double(threshold) << "\n\n";
  const auto side_block = [&](const char* label, const std::vector<RunSummary>& side,
                              double med_final, double med_cells) {
    text << label << "\n";
    for (const RunSummary& s : side)
      text << "  " << s.path << "  algo=" << s.algo << " seed=" << s.seed
           << " final10_mean=" << fmt_double(s.final_mean)
           << " to_threshold=" << s.interactions_to_threshold
           << " occupied_cells=" << s.occupied_cells << "\n";
    text << "  median final10_mean = " << fmt_double(med_final)
         << ", median occupied cells = " << fmt_double(med_cells) << "\n\n";
  };
  side_block("side a:", report.a, med_final_a, med_cells_a);
  side_block("side b:", report.b, med_final_b, med_cells_b);
  text << "delta (a - b): median final10_mean = " << fmt_double(med_final_a - med_final_b)
       << ", median occupied cells = " << fmt_double(med_cells_a - med_cells_b) << "\n";
  text << "paired runs where a occupies more cells: " << wins << " of " << paired << "\n";
  report.text = text.str();

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    CsvWriter csv((fs::path(out_dir) / "compare.csv").string(),
                  {"side", "run", "algo", "seed", "final_mean", "interactions_to_threshold",
                   "occupied_cells", "occupied_fraction"});
    const auto rows = [&](const char* side, const std::vector<RunSummary>& list) {
      for (const RunSummary& s : list)
        csv.row({side, s.path, s.algo, std::to_string(s.seed), fmt_double(s.final_mean),
                 std::to_string(s.interactions_to_threshold), std::to_string(s.occupied_cells),
                 fmt_double(s.occupied_fraction)});
    };
    rows("a", report.a);
    rows("b", report.b);
  }
  return report;
}

}  // namespace pidtune
