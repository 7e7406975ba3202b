#include "sbhdg/manufactured.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sbhdg/diagnostics.hpp"
#include "sbhdg/drivers.hpp"
#include "sbhdg/fields.hpp"

namespace sbhdg {

namespace {

constexpr double kPi = std::numbers::pi;

// Stokes fields shared by the stationary and transient cases; the phase is
// theta = pi (x1 x2 - c t) with c = 0 or 1.
void set_stokes_fields(ExactSolution& ex, double c) {
  ex.u_s = [c](const Vec2& x, double t) {
    const double th = kPi * (x.x() * x.y() - c * t);
    return Vec2(kPi * x.x() * std::cos(th) + 1.0,
                -kPi * x.y() * std::cos(th) + 2.0 * x.x());
  };
  ex.grad_u_s = [c](const Vec2& x, double t) {
    const double x1 = x.x(), x2 = x.y();
    const double th = kPi * (x1 * x2 - c * t);
    const double s = std::sin(th), co = std::cos(th);
    Mat2 g;
    g(0, 0) = kPi * co - kPi * kPi * x1 * x2 * s;
    g(0, 1) = -kPi * kPi * x1 * x1 * s;
    g(1, 0) = kPi * kPi * x2 * x2 * s + 2.0;
    g(1, 1) = -kPi * co + kPi * kPi * x1 * x2 * s;
    return g;
  };
  ex.hess_u_s = [c](const Vec2& x, double t) {
    const double x1 = x.x(), x2 = x.y();
    const double th = kPi * (x1 * x2 - c * t);
    const double s = std::sin(th), co = std::cos(th);
    const double p2 = kPi * kPi, p3 = p2 * kPi;
    Mat2 h0, h1;
    h0(0, 0) = -2.0 * p2 * x2 * s - p3 * x1 * x2 * x2 * co;
    h0(0, 1) = h0(1, 0) = -2.0 * p2 * x1 * s - p3 * x1 * x1 * x2 * co;
    h0(1, 1) = -p3 * x1 * x1 * x1 * co;
    h1(0, 0) = p3 * x2 * x2 * x2 * co;
    h1(0, 1) = h1(1, 0) = 2.0 * p2 * x2 * s + p3 * x1 * x2 * x2 * co;
    h1(1, 1) = 2.0 * p2 * x1 * s + p3 * x1 * x1 * x2 * co;
    return std::array<Mat2, 2>{h0, h1};
  };
  ex.p_s = [c](const Vec2& x, double t) {
    return std::sin(3.0 * x.x()) * std::cos(4.0 * (x.y() - c * t));
  };
  ex.grad_p_s = [c](const Vec2& x, double t) {
    const double a = 3.0 * x.x(), b = 4.0 * (x.y() - c * t);
    return Vec2(3.0 * std::cos(a) * std::cos(b),
                -4.0 * std::sin(a) * std::sin(b));
  };
}

// Pore pressure p^p = sin(3 (x1 x2 - c t)).
void set_pore_fields(ExactSolution& ex, double c) {
  ex.p_p = [c](const Vec2& x, double t) {
    return std::sin(3.0 * (x.x() * x.y() - c * t));
  };
  ex.grad_p_p = [c](const Vec2& x, double t) {
    const double ps = 3.0 * (x.x() * x.y() - c * t);
    const double co = std::cos(ps);
    return Vec2(3.0 * x.y() * co, 3.0 * x.x() * co);
  };
  ex.hess_p_p = [c](const Vec2& x, double t) {
    const double x1 = x.x(), x2 = x.y();
    const double ps = 3.0 * (x1 * x2 - c * t);
    const double s = std::sin(ps), co = std::cos(ps);
    Mat2 h;
    h(0, 0) = -9.0 * x2 * x2 * s;
    h(0, 1) = h(1, 0) = 3.0 * co - 9.0 * x1 * x2 * s;
    h(1, 1) = -9.0 * x1 * x1 * s;
    return h;
  };
  ex.dt_p_p = [c](const Vec2& x, double t) {
    return -3.0 * c * std::cos(3.0 * (x.x() * x.y() - c * t));
  };
}

std::function<Mat2(const Vec2&, double)> zero_mat2() {
  return [](const Vec2&, double) { return Mat2::Zero().eval(); };
}
std::function<Vec2(const Vec2&, double)> zero_vec2() {
  return [](const Vec2&, double) { return Vec2::Zero().eval(); };
}

}  // namespace

double ExactSolution::div_u_b(const Vec2& x, double t) const {
  return grad_u_b(x, t).trace();
}

double ExactSolution::p_b(const Vec2& x, double t,
                          const ParameterSet& p) const {
  if (p.inv_lambda == 0.0) return p.alpha * p_p(x, t);
  return -div_u_b(x, t) / p.inv_lambda + p.alpha * p_p(x, t);
}

Vec2 ExactSolution::grad_p_b(const Vec2& x, double t,
                             const ParameterSet& p) const {
  if (p.inv_lambda == 0.0) return (p.alpha * grad_p_p(x, t)).eval();
  const auto h = hess_u_b(x, t);
  const Vec2 grad_div(h[0](0, 0) + h[1](0, 1), h[0](1, 0) + h[1](1, 1));
  return (-grad_div / p.inv_lambda + p.alpha * grad_p_p(x, t)).eval();
}

double ExactSolution::dt_p_b(const Vec2& x, double t,
                             const ParameterSet& p) const {
  if (p.inv_lambda == 0.0) return p.alpha * dt_p_p(x, t);
  return -dt_grad_u_b(x, t).trace() / p.inv_lambda + p.alpha * dt_p_p(x, t);
}

Vec2 ExactSolution::z(const Vec2& x, double t, const ParameterSet& p) const {
  return (-p.kappa * grad_p_p(x, t)).eval();
}

double ExactSolution::div_z(const Vec2& x, double t,
                            const ParameterSet& p) const {
  return -p.kappa * hess_p_p(x, t).trace();
}

Mat2 ExactSolution::sigma_s(const Vec2& x, double t,
                            const ParameterSet& p) const {
  const Mat2 g = grad_u_s(x, t);
  return (p.mu_s * (g + g.transpose()) - p_s(x, t) * Mat2::Identity()).eval();
}

Mat2 ExactSolution::sigma_b(const Vec2& x, double t,
                            const ParameterSet& p) const {
  const Mat2 g = grad_u_b(x, t);
  return (p.mu_b * (g + g.transpose()) - p_b(x, t, p) * Mat2::Identity())
      .eval();
}

ExactSolution exact_steady() {
  ExactSolution ex;
  ex.time_dependent = false;
  set_stokes_fields(ex, 0.0);
  set_pore_fields(ex, 0.0);
  ex.u_b = [](const Vec2& x, double) {
    return Vec2(std::cos(4.0 * x.x()) * std::cos(3.0 * x.y()),
                std::sin(5.0 * x.x()) * std::cos(2.0 * x.y()));
  };
  ex.grad_u_b = [](const Vec2& x, double) {
    const double x1 = x.x(), x2 = x.y();
    Mat2 g;
    g(0, 0) = -4.0 * std::sin(4.0 * x1) * std::cos(3.0 * x2);
    g(0, 1) = -3.0 * std::cos(4.0 * x1) * std::sin(3.0 * x2);
    g(1, 0) = 5.0 * std::cos(5.0 * x1) * std::cos(2.0 * x2);
    g(1, 1) = -2.0 * std::sin(5.0 * x1) * std::sin(2.0 * x2);
    return g;
  };
  ex.hess_u_b = [](const Vec2& x, double) {
    const double x1 = x.x(), x2 = x.y();
    const double c4 = std::cos(4.0 * x1), s4 = std::sin(4.0 * x1);
    const double c3 = std::cos(3.0 * x2), s3 = std::sin(3.0 * x2);
    const double c5 = std::cos(5.0 * x1), s5 = std::sin(5.0 * x1);
    const double c2 = std::cos(2.0 * x2), s2 = std::sin(2.0 * x2);
    Mat2 h0, h1;
    h0(0, 0) = -16.0 * c4 * c3;
    h0(0, 1) = h0(1, 0) = 12.0 * s4 * s3;
    h0(1, 1) = -9.0 * c4 * c3;
    h1(0, 0) = -25.0 * s5 * c2;
    h1(0, 1) = h1(1, 0) = -10.0 * c5 * s2;
    h1(1, 1) = -4.0 * s5 * c2;
    return std::array<Mat2, 2>{h0, h1};
  };
  ex.dt_u_b = zero_vec2();
  ex.dt_grad_u_b = zero_mat2();
  return ex;
}

ExactSolution exact_transient() {
  ExactSolution ex;
  ex.time_dependent = true;
  set_stokes_fields(ex, 1.0);
  set_pore_fields(ex, 1.0);
  ex.u_b = [](const Vec2& x, double t) {
    const double T = std::sin(10.0 * kPi * t);
    return Vec2(T * std::cos(4.0 * (x.x() - t)) * std::cos(3.0 * x.y()),
                T * std::sin(5.0 * x.x()) * std::cos(2.0 * (x.y() - t)));
  };
  ex.grad_u_b = [](const Vec2& x, double t) {
    const double T = std::sin(10.0 * kPi * t);
    const double A = std::cos(4.0 * (x.x() - t)), As = std::sin(4.0 * (x.x() - t));
    const double B = std::cos(3.0 * x.y()), Bs = std::sin(3.0 * x.y());
    const double C = std::sin(5.0 * x.x()), Cc = std::cos(5.0 * x.x());
    const double D = std::cos(2.0 * (x.y() - t)), Ds = std::sin(2.0 * (x.y() - t));
    Mat2 g;
    g(0, 0) = -4.0 * T * As * B;
    g(0, 1) = -3.0 * T * A * Bs;
    g(1, 0) = 5.0 * T * Cc * D;
    g(1, 1) = -2.0 * T * C * Ds;
    return g;
  };
  ex.hess_u_b = [](const Vec2& x, double t) {
    const double T = std::sin(10.0 * kPi * t);
    const double A = std::cos(4.0 * (x.x() - t)), As = std::sin(4.0 * (x.x() - t));
    const double B = std::cos(3.0 * x.y()), Bs = std::sin(3.0 * x.y());
    const double C = std::sin(5.0 * x.x()), Cc = std::cos(5.0 * x.x());
    const double D = std::cos(2.0 * (x.y() - t)), Ds = std::sin(2.0 * (x.y() - t));
    Mat2 h0, h1;
    h0(0, 0) = -16.0 * T * A * B;
    h0(0, 1) = h0(1, 0) = 12.0 * T * As * Bs;
    h0(1, 1) = -9.0 * T * A * B;
    h1(0, 0) = -25.0 * T * C * D;
    h1(0, 1) = h1(1, 0) = -10.0 * T * Cc * Ds;
    h1(1, 1) = -4.0 * T * C * D;
    return std::array<Mat2, 2>{h0, h1};
  };
  ex.dt_u_b = [](const Vec2& x, double t) {
    const double T = std::sin(10.0 * kPi * t), Tc = std::cos(10.0 * kPi * t);
    const double A = std::cos(4.0 * (x.x() - t)), As = std::sin(4.0 * (x.x() - t));
    const double B = std::cos(3.0 * x.y());
    const double C = std::sin(5.0 * x.x());
    const double D = std::cos(2.0 * (x.y() - t)), Ds = std::sin(2.0 * (x.y() - t));
    return Vec2(10.0 * kPi * Tc * A * B + 4.0 * T * As * B,
                10.0 * kPi * Tc * C * D + 2.0 * T * C * Ds);
  };
  ex.dt_grad_u_b = [](const Vec2& x, double t) {
    const double T = std::sin(10.0 * kPi * t), Tc = std::cos(10.0 * kPi * t);
    const double A = std::cos(4.0 * (x.x() - t)), As = std::sin(4.0 * (x.x() - t));
    const double B = std::cos(3.0 * x.y()), Bs = std::sin(3.0 * x.y());
    const double C = std::sin(5.0 * x.x()), Cc = std::cos(5.0 * x.x());
    const double D = std::cos(2.0 * (x.y() - t)), Ds = std::sin(2.0 * (x.y() - t));
    Mat2 g;
    g(0, 0) = -40.0 * kPi * Tc * As * B + 16.0 * T * A * B;
    g(0, 1) = -3.0 * Bs * (10.0 * kPi * Tc * A + 4.0 * T * As);
    g(1, 0) = 5.0 * Cc * (10.0 * kPi * Tc * D + 2.0 * T * Ds);
    g(1, 1) = -20.0 * kPi * Tc * C * Ds + 4.0 * T * C * D;
    return g;
  };
  return ex;
}

ExactSolution exact_locking() {
  ExactSolution ex = exact_steady();
  // Divergence-free displacement (curl of a stream function), so the exact
  // solution is independent of lambda and remains valid for 1/lambda = 0.
  ex.u_b = [](const Vec2& x, double) {
    return Vec2(3.0 * std::cos(2.0 * x.x()) * std::cos(3.0 * x.y()),
                2.0 * std::sin(2.0 * x.x()) * std::sin(3.0 * x.y()));
  };
  ex.grad_u_b = [](const Vec2& x, double) {
    const double s2 = std::sin(2.0 * x.x()), c2 = std::cos(2.0 * x.x());
    const double s3 = std::sin(3.0 * x.y()), c3 = std::cos(3.0 * x.y());
    Mat2 g;
    g(0, 0) = -6.0 * s2 * c3;
    g(0, 1) = -9.0 * c2 * s3;
    g(1, 0) = 4.0 * c2 * s3;
    g(1, 1) = 6.0 * s2 * c3;
    return g;
  };
  ex.hess_u_b = [](const Vec2& x, double) {
    const double s2 = std::sin(2.0 * x.x()), c2 = std::cos(2.0 * x.x());
    const double s3 = std::sin(3.0 * x.y()), c3 = std::cos(3.0 * x.y());
    Mat2 h0, h1;
    h0(0, 0) = -12.0 * c2 * c3;
    h0(0, 1) = h0(1, 0) = 18.0 * s2 * s3;
    h0(1, 1) = -27.0 * c2 * c3;
    h1(0, 0) = -8.0 * s2 * s3;
    h1(0, 1) = h1(1, 0) = 12.0 * c2 * c3;
    h1(1, 1) = -18.0 * s2 * s3;
    return std::array<Mat2, 2>{h0, h1};
  };
  return ex;
}

ProblemData derive_data(const ExactSolution& ex, const ParameterSet& params,
                        TimeScheme mode) {
  ProblemData d;
  const ParameterSet p = params;
  const bool steady = mode == TimeScheme::Steady;
  if (steady && ex.time_dependent)
    throw Error("steady data requested from a time-dependent solution");

  d.f_s = [ex, p](const Vec2& x, double t) {
    const auto h = ex.hess_u_s(x, t);
    const Vec2 lap(h[0](0, 0) + h[0](1, 1), h[1](0, 0) + h[1](1, 1));
    const Vec2 grad_div(h[0](0, 0) + h[1](0, 1), h[0](1, 0) + h[1](1, 1));
    return (-p.mu_s * (lap + grad_div) + ex.grad_p_s(x, t)).eval();
  };
  d.f_b = [ex, p](const Vec2& x, double t) {
    const auto h = ex.hess_u_b(x, t);
    const Vec2 lap(h[0](0, 0) + h[0](1, 1), h[1](0, 0) + h[1](1, 1));
    const Vec2 grad_div(h[0](0, 0) + h[1](0, 1), h[0](1, 0) + h[1](1, 1));
    return (-p.mu_b * (lap + grad_div) + ex.grad_p_b(x, t, p)).eval();
  };
  // Mass source, using alpha/lambda (alpha p^p - p^b) = alpha div u^b, which
  // stays finite in the incompressible limit.
  if (steady) {
    const double tau = p.tau;
    d.g_b = [ex, p, tau](const Vec2& x, double t) {
      return p.c0 * tau * ex.p_p(x, t) +
             p.alpha * tau * ex.div_u_b(x, t) + ex.div_z(x, t, p);
    };
  } else {
    d.g_b = [ex, p](const Vec2& x, double t) {
      return p.c0 * ex.dt_p_p(x, t) +
             p.alpha * ex.dt_grad_u_b(x, t).trace() + ex.div_z(x, t, p);
    };
  }

  d.U_s = [ex](const Vec2& x, double t) { return ex.u_s(x, t); };
  d.U_b = [ex](const Vec2& x, double t) { return ex.u_b(x, t); };
  d.P_p = [ex](const Vec2& x, double t) { return ex.p_p(x, t); };
  d.S_s = [ex, p](const Vec2& x, const Vec2& n, double t) {
    return (ex.sigma_s(x, t, p) * n).eval();
  };
  d.S_b = [ex, p](const Vec2& x, const Vec2& n, double t) {
    return (ex.sigma_b(x, t, p) * n).eval();
  };
  d.Z = [ex, p](const Vec2& x, const Vec2& n, double t) {
    return ex.z(x, t, p).dot(n);
  };

  // Interface residuals of the modified conditions; w_b is the weight the
  // scheme applies to u^b at the interface (tau u^b when stationary, the
  // exact time derivative otherwise).
  auto w_b = [ex, p, steady](const Vec2& x, double t) {
    return steady ? (p.tau * ex.u_b(x, t)).eval() : ex.dt_u_b(x, t);
  };
  d.M_u = [ex, p, w_b](const Vec2& x, const Vec2& n, double t) {
    return (ex.u_s(x, t) - w_b(x, t) - ex.z(x, t, p)).dot(n);
  };
  d.M_s = [ex, p](const Vec2& x, const Vec2& n, double t) {
    return ((ex.sigma_s(x, t, p) - ex.sigma_b(x, t, p)) * n).eval();
  };
  d.M_p = [ex, p](const Vec2& x, const Vec2& n, double t) {
    return -(ex.sigma_s(x, t, p) * n).dot(n) - ex.p_p(x, t);
  };
  d.M_e = [ex, p, w_b](const Vec2& x, const Vec2& n, double t) {
    const Mat2 g = ex.grad_u_s(x, t);
    const Vec2 en = p.mu_s * ((g + g.transpose()) * n);  // 2 mu eps(u^s) n
    const Vec2 slip = ex.u_s(x, t) - w_b(x, t);
    const double coef = p.gamma * std::sqrt(p.mu_s / p.kappa);
    auto tang = [&n](const Vec2& v) { return (v - v.dot(n) * n).eval(); };
    return (-tang(en) - coef * tang(slip)).eval();
  };
  return d;
}

double l2_error(const Discretization& disc, const SystemState& state,
                const ExactSolution& ex, const ParameterSet& params,
                Field field, double t) {
  const Mesh& mesh = *disc.mesh;
  const Subdomain sub = (field == Field::u_s || field == Field::p_s ||
                         field == Field::div_u_s)
                            ? Subdomain::Stokes
                            : Subdomain::Biot;
  const QuadratureRule rule =
      quadrature(QuadratureRule::Domain::Triangle, 2 * disc.k + 4);

  double total = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cell = mesh.cells[c];
    if (cell.subdomain != sub) continue;
    const CellGeometry geo = cell_geometry(mesh, c);
    double acc = 0.0;
    switch (field) {
      case Field::u_s:
      case Field::u_b: {
        const auto s = eval_cell_vector(disc, state.coeffs, disc.dm.u_off[c],
                                        c, rule.points);
        for (int q = 0; q < rule.size(); ++q) {
          const Vec2 xq = geo.v0 + geo.jac * rule.points[q];
          const Vec2 diff = s.val[q] - (field == Field::u_s ? ex.u_s(xq, t)
                                                            : ex.u_b(xq, t));
          acc += rule.weights(q) * diff.squaredNorm();
        }
        break;
      }
      case Field::z: {
        const auto s = eval_cell_vector(disc, state.coeffs, disc.dm.z_off[c],
                                        c, rule.points);
        for (int q = 0; q < rule.size(); ++q) {
          const Vec2 xq = geo.v0 + geo.jac * rule.points[q];
          const Vec2 diff = s.val[q] - ex.z(xq, t, params);
          acc += rule.weights(q) * diff.squaredNorm();
        }
        break;
      }
      case Field::p_s:
      case Field::p_b: {
        const auto s =
            eval_cell_scalar(disc, state.coeffs, disc.dm.p_off[c], rule.points);
        for (int q = 0; q < rule.size(); ++q) {
          const Vec2 xq = geo.v0 + geo.jac * rule.points[q];
          const double exv = field == Field::p_s ? ex.p_s(xq, t)
                                                 : ex.p_b(xq, t, params);
          acc += rule.weights(q) * (s[q] - exv) * (s[q] - exv);
        }
        break;
      }
      case Field::p_p: {
        const auto s = eval_cell_scalar(disc, state.coeffs, disc.dm.pp_off[c],
                                        rule.points);
        for (int q = 0; q < rule.size(); ++q) {
          const Vec2 xq = geo.v0 + geo.jac * rule.points[q];
          const double diff = s[q] - ex.p_p(xq, t);
          acc += rule.weights(q) * diff * diff;
        }
        break;
      }
      case Field::div_u_s: {
        const auto s = eval_cell_vector(disc, state.coeffs, disc.dm.u_off[c],
                                        c, rule.points, true);
        for (int q = 0; q < rule.size(); ++q) {
          const double div = s.grad[q].trace();
          acc += rule.weights(q) * div * div;
        }
        break;
      }
    }
    total += acc * geo.det;
  }
  return std::sqrt(total);
}

namespace {

double l2_norm_of(const Discretization& disc, const SystemState& state,
                  Field field) {
  // Norm of the discrete field itself (used for relative tolerances).
  const Mesh& mesh = *disc.mesh;
  const Subdomain sub =
      field == Field::u_s ? Subdomain::Stokes : Subdomain::Biot;
  double total = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    if (mesh.cells[c].subdomain != sub) continue;
    const CellGeometry geo = cell_geometry(mesh, c);
    const auto s = eval_cell_vector(disc, state.coeffs, disc.dm.u_off[c], c,
                                    disc.vol_rule.points);
    double acc = 0.0;
    for (int q = 0; q < disc.vol_rule.size(); ++q)
      acc += disc.vol_rule.weights(q) * s.val[q].squaredNorm();
    total += acc * geo.det;
  }
  return std::sqrt(total);
}

double safe_rate(double coarse, double fine) {
  if (coarse <= 0.0 || fine <= 0.0) return std::nan("");
  return std::log2(coarse / fine);
}

}  // namespace

std::string ConvergenceReport::to_csv() const {
  std::ostringstream os;
  os << "level,cells,h,err_us,rate_us,err_ps,rate_ps,err_ub,rate_ub,"
        "err_pb,rate_pb,err_z,rate_z,err_pp,rate_pp,div_us\n";
  char buf[512];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    auto rate = [&](double v) {
      if (i == 0 || std::isnan(v)) return std::string();
      char b[32];
      std::snprintf(b, sizeof b, "%.2f", v);
      return std::string(b);
    };
    std::snprintf(buf, sizeof buf, "%d,%d,%.6e,", r.level, r.cells, r.h);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "%.6e,%s,%.6e,%s,%.6e,%s,%.6e,%s,%.6e,%s,%.6e,%s,%.6e\n",
                  r.err_us, rate(r.rate_us).c_str(), r.err_ps,
                  rate(r.rate_ps).c_str(), r.err_ub, rate(r.rate_ub).c_str(),
                  r.err_pb, rate(r.rate_pb).c_str(), r.err_z,
                  rate(r.rate_z).c_str(), r.err_pp, rate(r.rate_pp).c_str(),
                  r.div_us);
    os << buf;
  }
  return os.str();
}

void ConvergenceReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << to_csv();
}

ConvergenceReport run_convergence(CaseKind kind, int k, int levels,
                                  ParameterSet params,
                                  const ConvergenceOptions& opts) {
  if (levels < 2) throw Error("convergence study needs at least 2 levels");
  params.degree = k;
  if (params.beta_s <= 0.0) params.beta_s = 8.0 * k * k;
  if (params.beta_b <= 0.0) params.beta_b = 8.0 * k * k;

  const ExactSolution ex =
      kind == CaseKind::Steady ? exact_steady() : exact_transient();

  ConvergenceReport report;
  GeometrySpec spec;
  spec.preset = DomainPreset::UnitSquareSplit;
  spec.resolution = opts.base_resolution;
  Mesh mesh = generate(spec);

  for (int level = 0; level < levels; ++level) {
    if (level > 0) mesh = refine(mesh);
    const Discretization disc(mesh, k);

    SystemState state;
    double t_final = 0.0;
    double max_conf = 0.0;
    if (kind == CaseKind::Steady) {
      const ProblemData data = derive_data(ex, params, TimeScheme::Steady);
      state = solve_steady(disc, params, data, opts.workers);
      if (opts.verify_conformity) {
        const ConformityReport conf = check_conformity(
            disc, params, state, nullptr, nullptr,
            TimeStencil::steady(params.tau), &data);
        max_conf = conf.max_rel();
      }
    } else {
      ParameterSet tp = params;
      const double dt_target = std::pow(mesh.max_h(), 1.5) / 10.0;
      TimeGrid grid;
      grid.T = opts.T;
      grid.n_steps = std::max(1, static_cast<int>(std::ceil(opts.T / dt_target)));
      tp.dt = grid.dt();
      const ProblemData data = derive_data(ex, tp, TimeScheme::Bdf2);
      InitialData init;
      init.u_b = [&ex](const Vec2& x) { return ex.u_b(x, 0.0); };
      init.grad_u_b = [&ex](const Vec2& x) { return ex.grad_u_b(x, 0.0); };
      init.p_p = [&ex](const Vec2& x) { return ex.p_p(x, 0.0); };
      const SystemState initial = initialize(disc, tp, init, opts.workers);
      MarchOptions mopts;
      mopts.workers = opts.workers;
      if (opts.verify_conformity)
        mopts.observer = [&](const StepInfo& info) {
          const ConformityReport conf =
              check_conformity(disc, tp, *info.state, info.prev, info.prev2,
                               info.stencil, &data);
          max_conf = std::max(max_conf, conf.max_rel());
        };
      auto states =
          march(disc, tp, data, grid, TimeScheme::Bdf2, initial, mopts);
      state = std::move(states.back());
      t_final = grid.T;
    }

    ConvergenceRow row;
    row.level = level;
    row.cells = mesh.n_cells();
    row.h = mesh.max_h();
    row.err_us = l2_error(disc, state, ex, params, Field::u_s, t_final);
    row.err_ps = l2_error(disc, state, ex, params, Field::p_s, t_final);
    row.err_ub = l2_error(disc, state, ex, params, Field::u_b, t_final);
    row.err_pb = l2_error(disc, state, ex, params, Field::p_b, t_final);
    row.err_z = l2_error(disc, state, ex, params, Field::z, t_final);
    row.err_pp = l2_error(disc, state, ex, params, Field::p_p, t_final);
    row.div_us = l2_error(disc, state, ex, params, Field::div_u_s, t_final);
    if (!report.rows.empty()) {
      const auto& prev = report.rows.back();
      row.rate_us = safe_rate(prev.err_us, row.err_us);
      row.rate_ps = safe_rate(prev.err_ps, row.err_ps);
      row.rate_ub = safe_rate(prev.err_ub, row.err_ub);
      row.rate_pb = safe_rate(prev.err_pb, row.err_pb);
      row.rate_z = safe_rate(prev.err_z, row.err_z);
      row.rate_pp = safe_rate(prev.err_pp, row.err_pp);
    }
    report.max_div_rel = std::max(
        report.max_div_rel, row.div_us / l2_norm_of(disc, state, Field::u_s));
    report.max_conformity_rel = std::max(report.max_conformity_rel, max_conf);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace sbhdg
