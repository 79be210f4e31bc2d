#include <benchmark/benchmark.h>

#include "viflow/oracle.hpp"
#include "viflow/run.hpp"
#include "viflow/vi.hpp"

using namespace viflow;

namespace {

void bm_assemble_stokes(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  ProblemDef def = quartic_channel_mms_def(n);
  Mesh mesh = def.mesh;
  FemSpace space = build_space(mesh);
  BoundaryGeometry geom = compute_boundary_frames(mesh);
  DofMap dofs = build_dofmap(space, geom, def.patches);
  AssemblyContext ctx{&mesh, &space, &geom, &dofs, def.patches, def.nu};
  for (auto _ : state) {
    SpMat A = assemble_a03(ctx);
    benchmark::DoNotOptimize(A.nonZeros());
  }
  state.SetLabel(std::to_string(dofs.n_free()) + " free dofs");
}

void bm_solve_slip_channel(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  auto s = build_setup(poiseuille_channel_def(n, 8, 0.4), false, false);
  ConvexVIProblem prob;
  prob.A = &s->vi.A0;
  prob.B = &s->vi.B;
  prob.F = s->vi.F;
  prob.spec = &s->vi.spec;
  prob.gauge_dof = s->vi.gauge_pressure_dof;
  prob.tol = 1e-10;
  for (auto _ : state) {
    VISolution sol = solve_convex_vi(prob);
    benchmark::DoNotOptimize(sol.vi_res);
  }
  state.SetLabel(std::to_string(s->dofs.n_free()) + " free dofs");
}

void bm_oracle_enumeration(benchmark::State& state) {
  SmallInstance inst = random_instance(7, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    VectorXd v = active_set_enumeration(inst);
    benchmark::DoNotOptimize(v.sum());
  }
}

void bm_multiplier_recovery(benchmark::State& state) {
  auto s = build_setup(poiseuille_channel_def(8, 8, 0.4), false, false);
  ConvexVIProblem prob;
  prob.A = &s->vi.A0;
  prob.B = &s->vi.B;
  prob.F = s->vi.F;
  prob.spec = &s->vi.spec;
  prob.gauge_dof = s->vi.gauge_pressure_dof;
  prob.tol = 1e-10;
  VISolution sol = solve_convex_vi(prob);
  for (auto _ : state) {
    Multipliers m = recover_multipliers(s->vi, sol.w, sol.lambda, 1e-10);
    benchmark::DoNotOptimize(m.sigma_tau.size());
  }
}

}  // namespace

BENCHMARK(bm_assemble_stokes)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_solve_slip_channel)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_oracle_enumeration)->Arg(6)->Arg(8)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_multiplier_recovery)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
