#pragma once

#include <string>
#include <vector>

#include "pidtune/config.hpp"

namespace pidtune {

/// Everything one run produces. Files are written only when the
/// configuration names an output directory.
struct RunArtifacts {
  ExperimentConfig config;
  std::vector<TrainRecord> records;
  Trajectory final_trajectory;
  PidParams final_params;
  double best_reward = 0.0;
  int best_interaction = -1;
  double wall_ms = 0.0;
};

/// Executes the configured interaction budget. Writes learning_curve.csv,
/// actions.csv, final_trajectory.csv, config_resolved.txt and summary.txt
/// into the output directory when one is set. Deterministic per seed.
RunArtifacts run(const ExperimentConfig& cfg);

struct OracleCell {
  PidParams params;
  double reward = 0.0;
};

struct OracleResult {
  std::vector<OracleCell> cells;  // coarse grid, then the refinement pass
  PidParams best;
  double best_reward = 0.0;
};

/// Brute-force grid search over the action box (tau_i floor applied) with
/// one 10x-finer local pass around the argmax. resolution is the point
/// count per axis, at least 2. Embarrassingly parallel; the result does not
/// depend on evaluation order. Writes oracle.csv and oracle_summary.txt
/// when out_dir is non-empty.
OracleResult oracle(const ExperimentConfig& cfg, int resolution,
                    const std::string& out_dir = "", int threads = 0);

/// Per-run comparison metrics.
struct RunSummary {
  std::string path;
  std::string algo;
  std::uint64_t seed = 0;
  double final_mean = 0.0;         // trailing-10 mean reward at the end
  int interactions_to_threshold = -1;  // 1-based; -1 when never reached
  int occupied_cells = 0;          // 5x5x5 partition, first `warmup` actions
  double occupied_fraction = 0.0;
};

struct CompareReport {
  std::vector<RunSummary> a;
  std::vector<RunSummary> b;
  std::string text;  // one-page summary
};

/// Compares two run directories (each either a single run or a directory of
/// runs). All runs must share every configuration key except algo, seed and
/// out_dir; otherwise a ConfigError is thrown. Writes compare.csv into
/// out_dir when non-empty.
CompareReport compare(const std::string& dir_a, const std::string& dir_b,
                      double threshold, const std::string& out_dir = "");

/// Occupied-cell count of a partitions^3 split of the box over the first
/// first_n parameter triples.
int occupied_cells(const std::vector<PidParams>& actions, const ActionBox& box,
                   int partitions, int first_n);

/// Mean of the last `window` values (or fewer when the series is shorter).
double trailing_mean(const std::vector<double>& values, int window);

}  // namespace pidtune
