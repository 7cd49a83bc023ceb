#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polyspec/experiment.hpp"

using namespace polyspec;

namespace {

struct Flags {
  ExperimentConfig cfg;
  std::vector<int> facet;
};

void common(CLI::App* sub, Flags& f) {
  sub->add_option("input", f.cfg.input, "Polyhedron file")->required()->check(CLI::ExistingFile);
  sub->add_option("-o,--out", f.cfg.output_dir, "Directory for summary.txt, report.json and CSVs");
  sub->add_option("--seed", f.cfg.seed, "Random seed")->capture_default_str();
}

void mesh_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--mesh", f.cfg.h, "Target mesh size")->capture_default_str();
  sub->add_option("--count", f.cfg.count, "Number of eigenpairs")->capture_default_str();
  sub->add_option("--tol-eig", f.cfg.tol_eig, "Relative eigen residual tolerance")->capture_default_str();
}

void launch_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--point", f.cfg.point, "Launch point x y")->required()->expected(2);
  sub->add_option("--direction", f.cfg.direction, "Launch covector x y")->required()->expected(2);
  sub->add_option("--launch-im", f.cfg.launch_im, "Im H = launch-im * g at launch")->capture_default_str();
  sub->add_option("--dt", f.cfg.dt, "Beam step")->capture_default_str();
  sub->add_option("--dirichlet", f.cfg.dirichlet, "Boundary subsets with Dirichlet conditions");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian polyhedra: validation, spectra, boundary spectral data, Gaussian beams and echoes"};
  app.require_subcommand(1);
  Flags f;

  auto* validate = app.add_subcommand("validate", "Structural checks and chambers");
  common(validate, f);
  validate->add_option("--pitch", f.cfg.h, "Distance graph pitch for the admissibility sample")->capture_default_str();

  auto* spectrum = app.add_subcommand("spectrum", "Lowest Laplace eigenpairs with transmission conditions");
  common(spectrum, f);
  mesh_flags(spectrum, f);
  spectrum->add_option("--tol-gram", f.cfg.tol_gram, "Mass Gram tolerance")->capture_default_str();
  spectrum->add_option("--dirichlet", f.cfg.dirichlet, "Boundary subsets with Dirichlet conditions");

  auto* bsd = app.add_subcommand("bsd-compare", "Compare boundary spectral data of two polyhedra");
  common(bsd, f);
  bsd->add_option("other", f.cfg.other, "Second polyhedron file")->required()->check(CLI::ExistingFile);
  mesh_flags(bsd, f);
  bsd->add_option("--gamma", f.cfg.gamma, "Boundary subset observed")->required();
  bsd->add_option("--pitch", f.cfg.pitch, "Boundary sample pitch")->capture_default_str();
  bsd->add_option("--tol-lambda", f.cfg.tol_lambda, "Relative eigenvalue tolerance")->capture_default_str();
  bsd->add_option("--tol-trace", f.cfg.tol_trace, "Aligned trace residual tolerance")->capture_default_str();

  auto* trace = app.add_subcommand("beam-trace", "Gaussian beam tree with interface events");
  common(trace, f);
  launch_flags(trace, f);
  trace->add_option("--T", f.cfg.T, "Final time")->capture_default_str();

  auto* echo = app.add_subcommand("echo", "Beam echo experiment on one facet");
  common(echo, f);
  mesh_flags(echo, f);
  launch_flags(echo, f);
  echo->add_option("--facet", f.facet, "Probed facet as two vertex ids")->required()->expected(2);
  echo->add_option("--eps", f.cfg.eps, "Beam parameter")->capture_default_str();
  echo->add_option("--sigma", f.cfg.sigma, "Ball radius")->capture_default_str();
  echo->add_option("--threshold", f.cfg.threshold, "Echo ratio for a positive verdict")->capture_default_str();
  echo->add_option("--samples", f.cfg.samples, "Time samples")->capture_default_str();
  echo->add_option("--max-truncation", f.cfg.max_truncation, "Allowed modal projection residual")
      ->capture_default_str();

  auto* dtn = app.add_subcommand("dtn", "Dirichlet-to-Neumann response to a boundary pulse");
  common(dtn, f);
  dtn->add_option("--mesh", f.cfg.h, "Target mesh size")->capture_default_str();
  dtn->add_option("--gamma", f.cfg.gamma, "Boundary subset driven")->required();
  dtn->add_option("--T", f.cfg.T, "Final time")->capture_default_str();
  dtn->add_option("--steps", f.cfg.steps, "Time steps")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  if (name == "validate") f.cfg.command = Command::Validate;
  else if (name == "spectrum") f.cfg.command = Command::Spectrum;
  else if (name == "bsd-compare") f.cfg.command = Command::BsdCompare;
  else if (name == "beam-trace") f.cfg.command = Command::BeamTrace;
  else if (name == "echo") f.cfg.command = Command::Echo;
  else f.cfg.command = Command::Dtn;
  if (f.facet.size() == 2) f.cfg.facet = std::make_pair(f.facet[0], f.facet[1]);

  try {
    const ExperimentResult result = run_experiment(f.cfg);
    const Report report = emit_report({result});
    if (!f.cfg.output_dir.empty()) write_report(report, f.cfg.output_dir);
    std::cout << report.summary;
    return exit_status(result);
  } catch (const std::exception& e) {
    std::cerr << "polyspec " << name << ": " << e.what() << "\n";
    return 1;
  }
}
