#include "sbhdg/fe_basis.hpp"

#include <cmath>

namespace sbhdg {

namespace {

constexpr int kMaxGaussPoints = 24;  // exactness up to 47

// Golub-Welsch: nodes and weights of the n-point Gaussian rule for the
// weight whose monic three-term recurrence has diagonal a_k and squared
// off-diagonal b_k (b_0 = zeroth moment).
void golub_welsch(const std::vector<long double>& a,
                  const std::vector<long double>& b, int n,
                  std::vector<double>& nodes, std::vector<double>& weights) {
  MatrixX jac = MatrixX::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    jac(i, i) = static_cast<double>(a[i]);
    if (i + 1 < n) {
      const double off = std::sqrt(static_cast<double>(b[i + 1]));
      jac(i, i + 1) = off;
      jac(i + 1, i) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixX> es(jac);
  nodes.resize(n);
  weights.resize(n);
  const double mu0 = static_cast<double>(b[0]);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

// Gauss-Legendre on [0,1].
void gauss_legendre01(int n, std::vector<double>& nodes,
                      std::vector<double>& weights) {
  std::vector<long double> a(n, 0.0L), b(n);
  b[0] = 2.0L;
  for (int k = 1; k < n; ++k)
    b[k] = static_cast<long double>(k) * k /
           ((2.0L * k - 1.0L) * (2.0L * k + 1.0L));
  golub_welsch(a, b, n, nodes, weights);
  for (int i = 0; i < n; ++i) {
    nodes[i] = 0.5 * (1.0 + nodes[i]);
    weights[i] *= 0.5;
  }
}

// Gauss-Jacobi with weight (1-x) mapped to [0,1]: integrates
// f -> int_0^1 f(u) (1-u) du exactly for f of degree <= 2n-1.
void gauss_jacobi10_01(int n, std::vector<double>& nodes,
                       std::vector<double>& weights) {
  std::vector<long double> a(n), b(n);
  for (int k = 0; k < n; ++k)
    a[k] = -1.0L / ((2.0L * k + 1.0L) * (2.0L * k + 3.0L));
  b[0] = 2.0L;
  for (int k = 1; k < n; ++k)
    b[k] = static_cast<long double>(k) * (k + 1.0L) /
           ((2.0L * k + 1.0L) * (2.0L * k + 1.0L));
  golub_welsch(a, b, n, nodes, weights);
  for (int i = 0; i < n; ++i) {
    nodes[i] = 0.5 * (1.0 + nodes[i]);
    weights[i] *= 0.25;
  }
}

long double factorial_ld(int n) {
  long double f = 1.0L;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Cholesky factorization in extended precision; dimensions here are <= 15.
void cholesky_ld(std::vector<long double>& g, int n) {
  for (int j = 0; j < n; ++j) {
    long double d = g[j * n + j];
    for (int k = 0; k < j; ++k) d -= g[j * n + k] * g[j * n + k];
    if (d <= 0.0L) throw Error("basis Gram matrix not positive definite");
    const long double l = std::sqrt(d);
    g[j * n + j] = l;
    for (int i = j + 1; i < n; ++i) {
      long double s = g[i * n + j];
      for (int k = 0; k < j; ++k) s -= g[i * n + k] * g[j * n + k];
      g[i * n + j] = s / l;
    }
  }
}

// Given lower-triangular L (row major), overwrite C with L^{-1} C.
void forward_solve_ld(const std::vector<long double>& l, int n,
                      std::vector<long double>& c) {
  for (int col = 0; col < n; ++col) {
    for (int i = 0; i < n; ++i) {
      long double s = c[i * n + col];
      for (int k = 0; k < i; ++k) s -= l[i * n + k] * c[k * n + col];
      c[i * n + col] = s / l[i * n + i];
    }
  }
}

}  // namespace

QuadratureRule quadrature(QuadratureRule::Domain domain, int exactness) {
  if (exactness < 0) throw Error("quadrature exactness must be nonnegative");
  const int n = exactness / 2 + 1;
  if (n > kMaxGaussPoints)
    throw Error("quadrature exactness " + std::to_string(exactness) +
                " unsupported");
  QuadratureRule rule;
  rule.domain = domain;
  rule.exactness = exactness;
  if (domain == QuadratureRule::Domain::Segment) {
    std::vector<double> x, w;
    gauss_legendre01(n, x, w);
    rule.points.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
      rule.points[i] = Vec2(x[i], 0.0);
      rule.weights(i) = w[i];
    }
  } else {
    std::vector<double> xu, wu, xv, wv;
    gauss_jacobi10_01(n, xu, wu);
    gauss_legendre01(n, xv, wv);
    rule.points.resize(n * n);
    rule.weights.resize(n * n);
    int q = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j, ++q) {
        rule.points[q] = Vec2(xu[i], xv[j] * (1.0 - xu[i]));
        rule.weights(q) = wu[i] * wv[j];
      }
  }
  return rule;
}

CellBasis::CellBasis(int degree) : degree_(degree) {
  if (degree < 0) throw Error("cell basis degree must be nonnegative");
  size_ = pk_dim_triangle(degree);
  expo_.reserve(size_);
  for (int d = 0; d <= degree; ++d)
    for (int a = d; a >= 0; --a) expo_.emplace_back(a, d - a);

  const int n = size_;
  // Exact monomial Gram on the reference triangle:
  // int x^a y^b = a! b! / (a+b+2)!
  std::vector<long double> gram(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int a = expo_[i].first + expo_[j].first;
      const int b = expo_[i].second + expo_[j].second;
      gram[i * n + j] =
          factorial_ld(a) * factorial_ld(b) / factorial_ld(a + b + 2);
    }
  std::vector<long double> c(n * n, 0.0L);
  for (int i = 0; i < n; ++i) c[i * n + i] = 1.0L;
  cholesky_ld(gram, n);
  forward_solve_ld(gram, n, c);  // c = L^{-1}

  // Second pass: re-orthonormalize against the numerically evaluated Gram of
  // the first-pass basis. The monomial Gram is ill conditioned at higher
  // degree, so one pass alone leaves O(1e-8) departures from orthonormality.
  QuadratureRule rule = quadrature(QuadratureRule::Domain::Triangle,
                                   2 * std::max(degree, 1));
  std::vector<long double> g2(n * n, 0.0L);
  for (int q = 0; q < rule.size(); ++q) {
    const long double x = rule.points[q].x();
    const long double y = rule.points[q].y();
    std::vector<long double> mono(n), phi(n, 0.0L);
    for (int j = 0; j < n; ++j)
      mono[j] = std::pow(x, expo_[j].first) * std::pow(y, expo_[j].second);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) phi[i] += c[i * n + j] * mono[j];
    const long double w = rule.weights(q);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g2[i * n + j] += w * phi[i] * phi[j];
  }
  cholesky_ld(g2, n);
  std::vector<long double> c2 = c;
  forward_solve_ld(g2, n, c2);

  coeff_.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      coeff_(i, j) = static_cast<double>(c2[i * n + j]);
}

void CellBasis::eval(const std::vector<Vec2>& pts, MatrixX* values,
                     MatrixX* gx, MatrixX* gy) const {
  const int nq = static_cast<int>(pts.size());
  const int n = size_;
  MatrixX mv(nq, n), mgx(nq, n), mgy(nq, n);
  for (int q = 0; q < nq; ++q) {
    const double x = pts[q].x();
    const double y = pts[q].y();
    // Powers up to the degree; pow(0,0) handled as 1.
    double px[16], py[16];
    px[0] = py[0] = 1.0;
    for (int d = 1; d <= degree_; ++d) {
      px[d] = px[d - 1] * x;
      py[d] = py[d - 1] * y;
    }
    for (int j = 0; j < n; ++j) {
      const int a = expo_[j].first;
      const int b = expo_[j].second;
      mv(q, j) = px[a] * py[b];
      mgx(q, j) = (a > 0) ? a * px[a - 1] * py[b] : 0.0;
      mgy(q, j) = (b > 0) ? b * px[a] * py[b - 1] : 0.0;
    }
  }
  if (values) *values = mv * coeff_.transpose();
  if (gx) *gx = mgx * coeff_.transpose();
  if (gy) *gy = mgy * coeff_.transpose();
}

MatrixX CellBasis::values(const std::vector<Vec2>& pts) const {
  MatrixX v;
  eval(pts, &v, nullptr, nullptr);
  return v;
}

FacetBasis::FacetBasis(int degree) : degree_(degree) {
  if (degree < 0) throw Error("facet basis degree must be nonnegative");
}

void FacetBasis::eval(const std::vector<double>& pts, MatrixX* values,
                      MatrixX* derivs) const {
  const int nq = static_cast<int>(pts.size());
  const int n = size();
  MatrixX v(nq, n), d(nq, n);
  for (int q = 0; q < nq; ++q) {
    const double t = 2.0 * pts[q] - 1.0;
    // Legendre values and derivatives by recurrence:
    //   P_n = ((2n-1) t P_{n-1} - (n-1) P_{n-2}) / n
    //   P'_n = P'_{n-2} + (2n-1) P_{n-1}
    double p0 = 1.0, p1 = t, d0 = 0.0, d1 = 1.0;
    for (int m = 0; m < n; ++m) {
      double pm, dm;
      if (m == 0) {
        pm = p0;
        dm = d0;
      } else if (m == 1) {
        pm = p1;
        dm = d1;
      } else {
        pm = ((2.0 * m - 1.0) * t * p1 - (m - 1.0) * p0) / m;
        dm = d0 + (2.0 * m - 1.0) * p1;
        p0 = p1;
        p1 = pm;
        d0 = d1;
        d1 = dm;
      }
      const double scale = std::sqrt(2.0 * m + 1.0);
      v(q, m) = scale * pm;
      d(q, m) = scale * dm * 2.0;  // chain rule for t = 2s - 1
    }
  }
  if (values) *values = v;
  if (derivs) *derivs = d;
}

MatrixX FacetBasis::values(const std::vector<double>& pts) const {
  MatrixX v;
  eval(pts, &v, nullptr);
  return v;
}

BasisTable eval_cell_basis(int k, const std::vector<Vec2>& pts) {
  if (k < 1) throw Error("cell space degree must satisfy k >= 1");
  CellBasis basis(k);
  BasisTable table;
  basis.eval(pts, &table.values, &table.gx, &table.gy);
  return table;
}

}  // namespace sbhdg
