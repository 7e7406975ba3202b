#pragma once

#include "sbhdg/assembly.hpp"

namespace sbhdg {

/// Uniform partition of [0, T]; N * dt = T holds by construction.
struct TimeGrid {
  double T = 1.0;
  int n_steps = 1;

  double dt() const { return T / n_steps; }
  void validate() const {
    if (!(T > 0.0) || n_steps < 1) throw Error("invalid time grid");
  }
};

/// Steady solve of the tau-regularized stationary system.
SystemState solve_steady(const Discretization& disc, const ParameterSet& params,
                         const ProblemData& data, int workers = 0);

/// Initial displacement and pore pressure with the displacement gradient
/// (needed to evaluate the elliptic projection's right-hand side).
struct InitialData {
  std::function<Vec2(const Vec2&)> u_b;
  std::function<Mat2(const Vec2&)> grad_u_b;  // (i,j) = d_j u_i
  std::function<double(const Vec2&)> p_p;
};

/// Initialization: elliptic projection of u^b(0) onto the Biot displacement
/// pair, elementwise L2 projection of p^p(0), and the compatible total
/// pressure alpha p_h^p - lambda div u_h^b (the lambda term drops out in the
/// incompressible limit, where it never enters the time stencil).
SystemState initialize(const Discretization& disc, const ParameterSet& params,
                       const InitialData& init, int workers = 0);

struct StepInfo {
  int step = 0;           // 1-based; state is at t = step * dt
  double t = 0.0;
  const SystemState* state = nullptr;
  const SystemState* prev = nullptr;
  const SystemState* prev2 = nullptr;  // null during the first steps
  TimeStencil stencil;                 // stencil used for this step
};
using StepObserver = std::function<void(const StepInfo&)>;

struct MarchOptions {
  int workers = 0;
  StepObserver observer;
};

/// Time marching from the given initial state. BDF2 starts with one backward
/// Euler step. The system matrix is factorized once per distinct stencil;
/// every step re-projects the (possibly time-dependent) essential data.
std::vector<SystemState> march(const Discretization& disc,
                               const ParameterSet& params,
                               const ProblemData& data, const TimeGrid& grid,
                               TimeScheme scheme, const SystemState& initial,
                               const MarchOptions& opts = {});

}  // namespace sbhdg
