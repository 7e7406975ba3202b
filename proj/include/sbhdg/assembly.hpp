#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "sbhdg/data.hpp"
#include "sbhdg/spaces_dofs.hpp"

namespace sbhdg {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

/// Physical and discretization constants. The Lame parameter lambda is
/// stored through its inverse so the incompressible limit (lambda -> inf,
/// inv_lambda = 0) is representable exactly.
struct ParameterSet {
  double mu_s = 1e-2;       // fluid dynamic viscosity
  double mu_b = 1e-3;       // shear Lame constant
  double inv_lambda = 1e-2; // 1 / lambda, >= 0
  double alpha = 0.2;       // Biot-Willis
  double c0 = 1e-2;         // specific storage
  double kappa = 1e-2;      // permeability
  double gamma = 0.3;       // BJS slip constant
  double beta_s = 0.0;      // interior penalty, Stokes side (default 8 k^2)
  double beta_b = 0.0;      // interior penalty, Biot side
  int degree = 2;
  double tau = 1e-2;        // stationary regularization weight
  double dt = 0.0;          // time step (transient runs)

  void validate() const;  // throws Error on any violated constraint
  double nu() const {     // Poisson ratio
    return 1.0 / (2.0 * (1.0 + mu_b * inv_lambda));
  }
  double youngs_modulus() const {
    return mu_b * (3.0 + 2.0 * mu_b * inv_lambda) / (1.0 + mu_b * inv_lambda);
  }

  /// Parameters of the stationary/transient manufactured cases, with the
  /// interior penalty defaulting to 8 k^2 on both sides.
  static ParameterSet manufactured(int k);
  /// Surface/subsurface benchmark sets 1..3.
  static ParameterSet surfsub(int set_id, int k);
};

enum class TimeScheme { Steady, BackwardEuler, Bdf2 };

/// Discrete time derivative d_t g ~= a0 g^{n+1} - (c1 g^n + c2 g^{n-1}).
/// The steady system replaces d_t by tau * (.) uniformly.
struct TimeStencil {
  double a0 = 1.0, c1 = 0.0, c2 = 0.0;

  static TimeStencil steady(double tau) { return {tau, 0.0, 0.0}; }
  static TimeStencil backward_euler(double dt) {
    return {1.0 / dt, 1.0 / dt, 0.0};
  }
  static TimeStencil bdf2(double dt) {
    return {1.5 / dt, 2.0 / dt, -0.5 / dt};
  }
};

int history_size(TimeScheme scheme);
TimeStencil stencil_for(TimeScheme scheme, const ParameterSet& params);

/// Triplets over the full dof indexing, split into the stencil-independent
/// part S and the time-coupled part T. A system for one stencil reads
/// A = S + a0 T with the history entering the right-hand side through T.
struct FormBlocks {
  std::vector<Trip> stat;
  std::vector<Trip> timec;
  void append(FormBlocks&& other);
};

// Individual bilinear forms. workers <= 0 uses all threads; the *_serial
// entry points below are the plain reference loops kept for testing.
FormBlocks assemble_ah(const Discretization&, const ParameterSet&, Subdomain j,
                       int workers = 0);
FormBlocks assemble_bh(const Discretization&, Subdomain j, int workers = 0);
FormBlocks assemble_ch(const Discretization&, const ParameterSet&);
FormBlocks assemble_storage_mass(const Discretization&, const ParameterSet&);
FormBlocks assemble_interface(const Discretization&, const ParameterSet&);
FormBlocks assemble_darcy(const Discretization&, const ParameterSet&,
                          int workers = 0);

FormBlocks assemble_all(const Discretization&, const ParameterSet&,
                        int workers = 0);
FormBlocks assemble_all_serial(const Discretization&, const ParameterSet&);

/// Loads, Neumann/flux data, and interface corrections at time t, as a
/// full-length vector (constrained rows are dropped at consolidation).
Vector assemble_data_rhs(const Discretization&, const ParameterSet&,
                         const ProblemData&, double t, int workers = 0);

/// Coefficients over the full dof set at one time level; constrained
/// entries hold their imposed values.
struct SystemState {
  Vector coeffs;
  double time = 0.0;
};

/// Consolidated operators split by column constraint status. Rows are always
/// the unconstrained equations (symmetric elimination).
struct BilinearSystem {
  SpMat S_uu, S_uc, T_uu, T_uc;
};

BilinearSystem build_bilinear_system(const Discretization&,
                                     const ParameterSet&, int workers = 0,
                                     bool serial_reference = false);

struct AssembledSystem {
  SpMat A;
  Vector b;
  Vector constrained_values;  // full length
};

SpMat system_matrix(const BilinearSystem&, const TimeStencil&);

/// Right-hand side over unconstrained dofs: data terms + time history
/// through T + elimination of constrained columns.
Vector system_rhs(const Discretization&, const BilinearSystem&,
                  const TimeStencil&, const Vector& data_rhs_full,
                  const std::vector<const SystemState*>& prev,
                  const Vector& constrained_values);

/// One-shot monolithic assembly of the fully discrete system at time t.
/// prev holds the previous states, newest first (1 for backward Euler,
/// 2 for BDF2, none for the steady system).
AssembledSystem assemble_system(const Discretization&, const ParameterSet&,
                                TimeScheme mode,
                                const std::vector<const SystemState*>& prev,
                                const ProblemData& data, double t,
                                int workers = 0);

/// Scatter a solved unconstrained vector and the constrained values into a
/// full-length state.
SystemState make_state(const DofMap& dm, const Vector& x_sys,
                       const Vector& constrained_values, double t);

}  // namespace sbhdg
