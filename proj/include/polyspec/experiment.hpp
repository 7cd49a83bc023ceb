#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace polyspec {

enum class Command { Validate, Spectrum, BsdCompare, BeamTrace, Echo, Dtn };

std::string command_name(Command c);

/// Everything one CLI invocation needs. Fields not used by the command are
/// ignored.
struct ExperimentConfig {
  Command command = Command::Validate;
  std::string input;
  std::string other;       // second polyhedron for bsd-compare
  std::string output_dir;  // empty: nothing written
  std::uint64_t seed = 0x5eed5eedULL;

  double h = 0.05;
  int count = 10;
  double eps = 0.07;
  double T = 1.0;

  double tol_eig = 1e-8;
  double tol_lambda = 1e-6;
  double tol_trace = 1e-3;
  double tol_gram = 1e-8;

  std::string gamma;                      // boundary subset name (bsd-compare, dtn)
  double pitch = 0.05;                    // boundary sample pitch
  std::vector<std::string> dirichlet;     // boundary subsets clamped to zero
  std::vector<double> point;              // launch point, chart coordinates
  std::vector<double> direction;          // launch covector
  std::optional<std::pair<int, int>> facet;  // echo facet by vertex ids
  double sigma = 0.2;
  double threshold = 10.0;
  int samples = 121;
  double launch_im = 2.0;
  double max_truncation = 0.1;
  double dt = 0.01;
  int steps = 2048;
};

/// Throws std::invalid_argument for non-positive tolerances or sizes and
/// for missing command inputs.
void validate_config(const ExperimentConfig& cfg);

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct ExperimentResult {
  std::string title;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, std::string>> csvs;  // file name, content
  bool negative = false;  // the verdict is "no": not admissible, not equivalent, no echo
  std::string verdict;
};

/// Runs one command. Configuration errors throw std::invalid_argument;
/// module errors propagate unchanged.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// 0 on success, 2 on a negative verdict.
int exit_status(const ExperimentResult& r);

struct Report {
  std::string summary;  // human-readable, one line per check
  std::string json;     // machine-readable digest
  std::vector<std::pair<std::string, std::string>> files;
};

Report emit_report(const std::vector<ExperimentResult>& results);

/// Writes summary.txt, report.json and every CSV into `dir`, each atomically.
void write_report(const Report& report, const std::string& dir);

}  // namespace polyspec
