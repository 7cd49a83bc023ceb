// Serial reference against the OpenMP path for the parallel kernels.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "polyspec/beam.hpp"
#include "polyspec/document.hpp"
#include "polyspec/execution.hpp"
#include "polyspec/fem.hpp"
#include "polyspec/wave.hpp"

using namespace polyspec;

namespace {

const Polyhedron& rectangle() {
  static const Polyhedron p = load_polyhedron(std::string(POLYSPEC_FIXTURES) + "/two_rectangle.poly");
  return p;
}

const Mesh& fine_mesh() {
  static const Mesh mesh = refine(rectangle().complex, rectangle().metric, 0.02);
  return mesh;
}

PolyPoint containing(const SimplicialComplex& c, const Eigen::VectorXd& x) {
  int best = 0;
  double best_min = -1e300;
  for (std::size_t t = 0; t < c.count(c.dim()); ++t) {
    const double lo = c.barycentric(static_cast<int>(t), x).minCoeff();
    if (lo > best_min) {
      best_min = lo;
      best = static_cast<int>(t);
    }
  }
  return PolyPoint{best, x};
}

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

void element_kernel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(element_matrices(fine_mesh(), rectangle().metric, mode(state)));
}

void assembly(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(assemble_forms(fine_mesh(), rectangle().metric, mode(state)));
}

void synthesis(benchmark::State& state) {
  static const Mesh mesh = refine(rectangle().complex, rectangle().metric, 0.05);
  static const EigenSystem es = solve_eigen(assemble_forms(mesh, rectangle().metric), 60);
  const Eigen::VectorXd a = es.vectors.leftCols(20).rowwise().sum();
  const Eigen::VectorXd b = Eigen::VectorXd::Zero(a.size());
  std::vector<double> times;
  for (int k = 0; k < 64; ++k) times.push_back(0.02 * k);
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_wave(es, a, b, times, nullptr, {}, mode(state)));
}

void beam_field(benchmark::State& state) {
  const auto& p = rectangle();
  static const BeamField field = [&] {
    const PolyPoint p0 = containing(p.complex, Eigen::Vector2d(0.5, 0.5));
    return trace_beam_tree(p.complex, p.metric, launch_beam(p.metric, p0.simplex, p0.x, Eigen::Vector2d(1.0, 0.2)),
                           1.0);
  }();
  for (auto _ : state)
    benchmark::DoNotOptimize(beam_nodal_data(p.complex, p.metric, field, 0.07, fine_mesh(), 0.6, mode(state)));
}

}  // namespace

BENCHMARK(element_kernel)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(assembly)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(synthesis)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(beam_field)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
