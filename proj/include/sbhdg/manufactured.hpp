#pragma once

#include <array>
#include <string>

#include "sbhdg/assembly.hpp"

namespace sbhdg {

/// Closed-form exact solution with hand-coded derivatives. Spatial Hessians
/// are stored per component; time-dependent cases also provide first time
/// derivatives of the Biot fields and of their gradients (needed for the
/// source term and the interface data). Stationary cases ignore t.
struct ExactSolution {
  std::function<Vec2(const Vec2&, double)> u_s;
  std::function<Mat2(const Vec2&, double)> grad_u_s;  // (i,j) = d_j u_i
  std::function<std::array<Mat2, 2>(const Vec2&, double)> hess_u_s;
  std::function<double(const Vec2&, double)> p_s;
  std::function<Vec2(const Vec2&, double)> grad_p_s;

  std::function<Vec2(const Vec2&, double)> u_b;
  std::function<Mat2(const Vec2&, double)> grad_u_b;
  std::function<std::array<Mat2, 2>(const Vec2&, double)> hess_u_b;
  std::function<Vec2(const Vec2&, double)> dt_u_b;
  std::function<Mat2(const Vec2&, double)> dt_grad_u_b;

  std::function<double(const Vec2&, double)> p_p;
  std::function<Vec2(const Vec2&, double)> grad_p_p;
  std::function<Mat2(const Vec2&, double)> hess_p_p;
  std::function<double(const Vec2&, double)> dt_p_p;

  bool time_dependent = false;

  // Derived fields. p^b = -lambda div u^b + alpha p^p; in the incompressible
  // limit (inv_lambda = 0) the exact displacement must be divergence free and
  // p^b reduces to alpha p^p.
  double div_u_b(const Vec2& x, double t) const;
  double p_b(const Vec2& x, double t, const ParameterSet& p) const;
  Vec2 grad_p_b(const Vec2& x, double t, const ParameterSet& p) const;
  double dt_p_b(const Vec2& x, double t, const ParameterSet& p) const;
  Vec2 z(const Vec2& x, double t, const ParameterSet& p) const;
  double div_z(const Vec2& x, double t, const ParameterSet& p) const;
  Mat2 sigma_s(const Vec2& x, double t, const ParameterSet& p) const;
  Mat2 sigma_b(const Vec2& x, double t, const ParameterSet& p) const;
};

/// Stationary manufactured case (trigonometric fields on the split unit
/// square).
ExactSolution exact_steady();
/// Transient manufactured case.
ExactSolution exact_transient();
/// Stationary case with a divergence-free displacement, usable for any
/// lambda including the incompressible limit (locking benchmark).
ExactSolution exact_locking();

/// Loads, boundary and interface data reproducing the exact solution. The
/// interface conditions carry the discrete-time-derivative weight: tau u^b in
/// steady mode, the exact time derivative otherwise.
ProblemData derive_data(const ExactSolution& ex, const ParameterSet& params,
                        TimeScheme mode);

enum class Field { u_s, p_s, u_b, p_b, z, p_p, div_u_s };

/// L2 error of a state against the exact solution at time t; Field::div_u_s
/// returns the L2 norm of div u_h^s itself.
double l2_error(const Discretization& disc, const SystemState& state,
                const ExactSolution& ex, const ParameterSet& params,
                Field field, double t);

struct ConvergenceRow {
  int level = 0;
  int cells = 0;
  double h = 0.0;
  double err_us = 0, err_ps = 0, err_ub = 0, err_pb = 0, err_z = 0, err_pp = 0;
  double rate_us = 0, rate_ps = 0, rate_ub = 0, rate_pb = 0, rate_z = 0,
         rate_pp = 0;  // NaN on the first level
  double div_us = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  // Largest ||div u_h^s|| / ||u_h^s|| over all levels, and the largest
  // relative conformity residual over all computed states.
  double max_div_rel = 0.0;
  double max_conformity_rel = 0.0;
  void write_csv(const std::string& path) const;
  std::string to_csv() const;
};

enum class CaseKind { Steady, Transient };

struct ConvergenceOptions {
  int base_resolution = 4;  // coarsest level: 8 r^2 cells
  int workers = 0;
  double T = 0.01;          // transient horizon
  bool verify_conformity = true;
  double conformity_tol = 1e-10;
};

/// Solves on a red-refinement hierarchy and reports errors and observed
/// rates. The transient case marches BDF2 with dt = h^{3/2} / 10 and reports
/// terminal-time errors.
ConvergenceReport run_convergence(CaseKind kind, int k, int levels,
                                  ParameterSet params,
                                  const ConvergenceOptions& opts = {});

}  // namespace sbhdg
