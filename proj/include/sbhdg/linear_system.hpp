#pragma once

#include <string>

#include "sbhdg/assembly.hpp"

namespace sbhdg {

struct SolveStats {
  int n = 0;
  double rel_residual = 0.0;
};

/// Sparse LU solve (partial pivoting, fill-reducing column ordering) with a
/// mandatory post-solve residual check:
///   ||Ax - b|| <= 1e-10 ||b||, or for b = 0, ||Ax|| <= 1e-12 ||A||_max ||x||.
/// Throws SolverError on factorization failure or a violated check; the
/// message carries Eigen's pivot report so callers can append the parameter
/// set that produced the system.
Vector sparse_solve(const SpMat& A, const Vector& b,
                    SolveStats* stats = nullptr);

/// MatrixMarket export of the assembled system for cross-tool debugging.
void export_matrix_market(const SpMat& A, const std::string& path);
void export_vector_market(const Vector& b, const std::string& path);

/// Convenience: solve an assembled system and scatter into a full state.
SystemState solve(const Discretization& disc, const AssembledSystem& sys,
                  double t, SolveStats* stats = nullptr);

}  // namespace sbhdg
