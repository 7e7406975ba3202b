#include "sbhdg/linear_system.hpp"

#include <Eigen/SparseLU>

#include <cstdio>
#include <fstream>

namespace sbhdg {

Vector sparse_solve(const SpMat& A, const Vector& b, SolveStats* stats) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw SolverError("system dimensions inconsistent");
  SpMat a = A;
  a.makeCompressed();
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success)
    throw SolverError("sparse LU factorization failed: " +
                      lu.lastErrorMessage());
  const Vector x = lu.solve(b);

  const double bnorm = b.norm();
  const double rnorm = (A * x - b).norm();
  double rel;
  if (bnorm > 0.0) {
    rel = rnorm / bnorm;
    if (!(rel <= 1e-10))
      throw SolverError("solve residual " + std::to_string(rel) +
                        " exceeds 1e-10");
  } else {
    const double amax = Eigen::Map<const Vector>(a.valuePtr(), a.nonZeros())
                            .cwiseAbs()
                            .maxCoeff();
    const double xnorm = x.norm();
    rel = xnorm == 0.0 ? 0.0 : rnorm / (amax * xnorm);
    if (xnorm != 0.0 && !(rel <= 1e-12))
      throw SolverError("zero-rhs solve returned a nonzero residual");
  }
  if (stats) {
    stats->n = static_cast<int>(A.rows());
    stats->rel_residual = rel;
  }
  return x;
}

void export_matrix_market(const SpMat& A, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  SpMat a = A;
  a.makeCompressed();
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  char buf[64];
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n",
                    static_cast<int>(it.row()) + 1,
                    static_cast<int>(it.col()) + 1, it.value());
      os << buf;
    }
}

void export_vector_market(const Vector& b, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << "%%MatrixMarket matrix array real general\n";
  os << b.size() << " 1\n";
  char buf[64];
  for (int i = 0; i < b.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", b(i));
    os << buf;
  }
}

SystemState solve(const Discretization& disc, const AssembledSystem& sys,
                  double t, SolveStats* stats) {
  const Vector x = sparse_solve(sys.A, sys.b, stats);
  return make_state(disc.dm, x, sys.constrained_values, t);
}

}  // namespace sbhdg
