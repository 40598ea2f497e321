#pragma once

#include "pfgl/schur.hpp"
#include "pfgl/single_scale.hpp"

namespace pfgl {

struct GLConfig {
  double tol_gl = 1e-6;
  int max_gl_iter = 60;
  RobinMode mode = RobinMode::RobinIdentity;
  StaggeredConfig local;  // stagger/Newton tolerances of the local solve
};

// Interface fields (u_Gamma, lambda_C) live on active global-trace pairs,
// lambda_L on active local-trace pairs.
struct GLState {
  VecX u_G;
  VecX u_L, d_L;
  VecX u_Gamma, lambda_C, lambda_L;
  HistoryField H_L;
  bool converged = false;
};

struct GLLogRow {
  int step = 0, k = 0;
  double du_gamma_rel = 0;
  double dlambda_rel = 0;
  int stagger_sweeps = 0;
  double wall_ms = 0;
};

// Geometry-bound problem: operators are snapshots and must be rebuilt
// (setup_gl_problem) whenever the local domain changes.
struct GLProblem {
  const QuadMesh* global_mesh = nullptr;
  const LocalMesh* local = nullptr;
  MaterialParams params;
  LoadSchedule global_schedule;
  LoadSchedule local_schedule;
  GLConfig config;

  CouplingOperators ops;
  SchurOperator S_C, S_F;
  RobinParams robin;
  Triplets K_G0;  // intact global stiffness, constant across adaptivity

  DofMap global_dofs, local_dofs;  // constraint structure (values set per step)
};

GLProblem setup_gl_problem(const QuadMesh& global_mesh, const LocalMesh& local,
                           const MaterialParams& params, const LoadSchedule& gsched,
                           const LoadSchedule& lsched, const GLConfig& config);

GLState initial_gl_state(const GLProblem& prob);

struct LocalSolveStats {
  int stagger_sweeps = 0;
  int newton_iterations = 0;
};

// Local Robin boundary-value problem (staggered, nonlinear). LambdaL carries
// the Robin data; in DirichletNeumann mode it carries the prescribed trace.
LocalSolveStats local_robin_solve(const GLProblem& prob, int step, const VecX& LambdaL,
                                  VecX& u_L, VecX& d_L, VecX& u_half, VecX& lambda_L,
                                  HistoryField& H_work);

// Global Robin boundary-value problem (linear, one solve).
void global_robin_solve(const GLProblem& prob, int step, const VecX& LambdaG,
                        const VecX& u_half, const VecX& lambda_L, VecX& u_G,
                        VecX& lambda_C, VecX& u_Gamma);

struct GLStepStats {
  int iterations = 0;
  double reaction = 0;
  std::vector<GLLogRow> log;
};

// Algorithm: iterate local solve -> Lambda_G -> global solve -> Lambda_L
// until the interface mismatch and the Robin increment both drop below
// tol_gl. Throws when max_gl_iter is exceeded, carrying the trace.
GLStepStats gl_load_step(GLProblem& prob, GLState& state, int step,
                         InvariantMonitor* monitor = nullptr);

double gl_reaction(const GLProblem& prob, const GLState& state);

}  // namespace pfgl
