#include "optnet/kerr.hpp"

#include <Eigen/LU>
#include <array>
#include <cmath>
#include <stdexcept>

namespace optnet {

namespace {

// Per destination row: up to two (column, weight) intensity contributions,
// weight 1 for the co-propagating field and 2 for the counterpropagating one.
struct KerrTerm {
  int col = -1;
  double weight = 0.0;
};

struct System {
  MatrixC A;        // R_BM T^{-1} S0
  IndexMap map{1};
  int drive_slot = 0;
  std::vector<std::array<KerrTerm, 2>> terms;
  double gamma = 0.0;  // chi L / Nx
  double t_BM = 0.0;
  Complex ulphase{0, 0};  // e^{-i w L}
  Complex uhphase{0, 0};  // e^{-i w L / 2}

  static System build(const SteadyParams& p) {
    if (p.config.geometry != Geometry::Cylinder)
      throw std::domain_error("steady solver: geometry must be Cylinder");
    if (!p.config.ideal())
      throw std::domain_error(
          "steady solver: loss_eta must be 1 and disorder_delta 0 (nonlinear paths use the "
          "ideal network)");
    if (p.config.r_BM >= 1.0)
      throw std::domain_error("steady solver: r_BM must be < 1");

    System sys;
    const LinearAssembly assembly = assemble_closed(p.config, p.sector, p.kx);
    sys.map = assembly.map;
    sys.A = assembly.step_operator();
    sys.drive_slot = sys.map.at(Dir::D, 1);
    sys.A.row(sys.drive_slot) *= kI * p.config.r_BM;
    sys.t_BM = std::sqrt(1.0 - p.config.r_BM * p.config.r_BM);
    sys.gamma = p.config.chi * p.config.L / p.config.Nx;
    sys.ulphase = std::exp(Complex(0, -p.omega_d * p.config.L));
    sys.uhphase = std::exp(Complex(0, -p.omega_d * p.config.L / 2.0));

    const int ny = p.config.Ny;
    const IndexMap& map = sys.map;
    sys.terms.assign(map.size(), {KerrTerm{}, KerrTerm{}});
    for (int n = 1; n <= ny; ++n) {
      sys.terms[map.at(Dir::R, n)] = {KerrTerm{map.at(Dir::R, n), 1.0},
                                      KerrTerm{map.at(Dir::L, n), 2.0}};
      sys.terms[map.at(Dir::L, n)] = {KerrTerm{map.at(Dir::L, n), 1.0},
                                      KerrTerm{map.at(Dir::R, n), 2.0}};
      if (n < ny)
        sys.terms[map.at(Dir::U, n)] = {KerrTerm{map.at(Dir::U, n), 1.0},
                                        KerrTerm{map.at(Dir::D, n + 1), 2.0}};
      if (n > 1)
        sys.terms[map.at(Dir::D, n)] = {KerrTerm{map.at(Dir::D, n), 1.0},
                                        KerrTerm{map.at(Dir::U, n - 1), 2.0}};
    }
    // Bottom mirror image fiber: the down output returns as the up input,
    // self plus cross coupling of the same field gives weight 3.
    sys.terms[map.at(Dir::U, ny)] = {KerrTerm{map.at(Dir::U, ny), 3.0}, KerrTerm{}};
    // Top mirror row (d,1): linear boundary, no Kerr phase.
    sys.terms[sys.drive_slot] = {KerrTerm{}, KerrTerm{}};
    return sys;
  }

  Eigen::VectorXd intensities(const AmplitudeVector& a) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(a.size());
    for (int j = 0; j < a.size(); ++j)
      for (const KerrTerm& t : terms[j])
        if (t.col >= 0) out(j) += t.weight * std::norm(a(t.col));
    return out;
  }

  AmplitudeVector residual(const AmplitudeVector& a, Complex A_in) const {
    const Eigen::VectorXd N = intensities(a);
    AmplitudeVector f = A * a;
    for (int j = 0; j < a.size(); ++j)
      f(j) -= ulphase * std::exp(Complex(0, gamma * N(j))) * a(j);
    f(drive_slot) += t_BM * uhphase * A_in;
    return f;
  }

  void jacobian(const AmplitudeVector& a, MatrixC& F_a, MatrixC& F_abar) const {
    const int n = static_cast<int>(a.size());
    const Eigen::VectorXd N = intensities(a);
    F_a = A;
    F_abar = MatrixC::Zero(n, n);
    for (int j = 0; j < n; ++j) {
      const Complex ej = ulphase * std::exp(Complex(0, gamma * N(j)));
      F_a(j, j) -= ej;
      const Complex pref = -ej * kI * gamma * a(j);
      for (const KerrTerm& t : terms[j]) {
        if (t.col < 0) continue;
        F_a(j, t.col) += pref * t.weight * std::conj(a(t.col));
        F_abar(j, t.col) += pref * t.weight * a(t.col);
      }
    }
  }
};

Eigen::VectorXd to_real(const AmplitudeVector& a) {
  const int n = static_cast<int>(a.size());
  Eigen::VectorXd x(2 * n);
  x.head(n) = a.real();
  x.tail(n) = a.imag();
  return x;
}

AmplitudeVector to_complex(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size()) / 2;
  AmplitudeVector a(n);
  a.real() = x.head(n);
  a.imag() = x.tail(n);
  return a;
}

Eigen::MatrixXd real_jacobian(const MatrixC& F_a, const MatrixC& F_abar) {
  const int n = static_cast<int>(F_a.rows());
  Eigen::MatrixXd J(2 * n, 2 * n);
  const MatrixC sum = F_a + F_abar;
  const MatrixC dif = F_a - F_abar;
  J.topLeftCorner(n, n) = sum.real();
  J.topRightCorner(n, n) = -dif.imag();
  J.bottomLeftCorner(n, n) = sum.imag();
  J.bottomRightCorner(n, n) = dif.real();
  return J;
}

SteadyState make_state(const SteadyParams& p, const AmplitudeVector& a, double resid,
                       bool converged, bool fold) {
  SteadyState s;
  s.amplitudes = a;
  s.config = p.config;
  s.omega_d = p.omega_d;
  s.kx = p.kx;
  s.A_in = p.A_in;
  s.r_BM = p.config.r_BM;
  s.chi = p.config.chi;
  s.sector = p.sector;
  s.N_p = a.squaredNorm();
  s.residual_norm = resid;
  s.converged = converged;
  s.fold_suspected = fold;
  return s;
}

// Newton with backtracking on ||F||; sys must match params.
SteadyState newton_solve(const System& sys, const SteadyParams& params,
                         const AmplitudeVector& guess, int max_iter = 60, double tol = 1e-11) {
  AmplitudeVector a = guess;
  double fnorm = sys.residual(a, params.A_in).norm();
  bool fold = false;
  for (int it = 0; it < max_iter; ++it) {
    const double scale = std::max(1.0, a.norm());
    if (fnorm < tol * scale) break;
    MatrixC F_a, F_abar;
    sys.jacobian(a, F_a, F_abar);
    const Eigen::MatrixXd J = real_jacobian(F_a, F_abar);
    const AmplitudeVector f = sys.residual(a, params.A_in);
    Eigen::VectorXd rhs(2 * f.size());
    rhs.head(f.size()) = -f.real();
    rhs.tail(f.size()) = -f.imag();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    const Eigen::VectorXd step = lu.solve(rhs);
    if (!step.allFinite() || (J * step - rhs).norm() > 1e-6 * rhs.norm()) {
      fold = true;
      break;
    }
    double lambda = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      const AmplitudeVector trial = to_complex(to_real(a) + lambda * step);
      const double tnorm = sys.residual(trial, params.A_in).norm();
      if (tnorm < fnorm * (1.0 - 1e-4 * lambda) || tnorm < tol) {
        a = trial;
        fnorm = tnorm;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;
  }
  const double scale = std::max(1.0, a.norm());
  return make_state(params, a, fnorm, fnorm < 1e-10 * scale, fold);
}

}  // namespace

KerrPhaseDiagonal kerr_phase_diagonal(const AmplitudeVector& a, const SteadyParams& params) {
  const System sys = System::build(params);
  KerrPhaseDiagonal out;
  out.intensities = sys.intensities(a);
  out.prefactor = sys.gamma;
  return out;
}

AmplitudeVector steady_residual(const AmplitudeVector& a, const SteadyParams& params) {
  return System::build(params).residual(a, params.A_in);
}

void steady_jacobian(const AmplitudeVector& a, const SteadyParams& params, MatrixC& F_a,
                     MatrixC& F_abar) {
  System::build(params).jacobian(a, F_a, F_abar);
}

Eigen::MatrixXd steady_jacobian_real(const AmplitudeVector& a, const SteadyParams& params) {
  MatrixC F_a, F_abar;
  System::build(params).jacobian(a, F_a, F_abar);
  return real_jacobian(F_a, F_abar);
}

SteadyState solve_steady(const SteadyParams& params, const AmplitudeVector& guess) {
  const System sys = System::build(params);
  return newton_solve(sys, params, guess);
}

SteadyState solve_steady_homotopy(const SteadyParams& params) {
  // chi = 0 solve is one linear system.
  SteadyParams linear = params;
  linear.config.chi = 0.0;
  const System lin = System::build(linear);
  const int dim = lin.map.size();
  MatrixC M = lin.A - lin.ulphase * MatrixC::Identity(dim, dim);
  AmplitudeVector rhs = AmplitudeVector::Zero(dim);
  rhs(lin.drive_slot) = -lin.t_BM * lin.uhphase * params.A_in;
  AmplitudeVector a = M.partialPivLu().solve(rhs);
  if (params.config.chi == 0.0) {
    const double resid = lin.residual(a, params.A_in).norm();
    return make_state(linear, a, resid, resid < 1e-9 * std::max(1.0, a.norm()), false);
  }

  double reached = 0.0;
  double step = 1.0;
  SteadyParams cur = params;
  while (reached < 1.0) {
    const double next = std::min(1.0, reached + step);
    cur.config.chi = params.config.chi * next;
    const System sys = System::build(cur);
    const SteadyState trial = newton_solve(sys, cur, a);
    if (trial.converged) {
      a = trial.amplitudes;
      reached = next;
      step = std::min(1.0, step * 1.5);
      if (reached >= 1.0) return trial;
    } else {
      step *= 0.5;
      if (step < 1e-6) {
        SteadyState out = trial;
        out.converged = false;
        return out;
      }
    }
  }
  return newton_solve(System::build(params), params, a);
}

ContinuationCurve continuation_sweep(const SteadyParams& params, double drive_min,
                                     double drive_max, const ContinuationOptions& opts) {
  if (!(drive_max > drive_min) || drive_min < 0.0)
    throw std::domain_error("continuation_sweep: need 0 <= drive_min < drive_max");
  const double abs_chi = std::abs(params.config.chi);
  if (abs_chi == 0.0)
    throw std::domain_error("continuation_sweep: chi must be nonzero (use the linear solver)");

  const System sys = System::build(params);
  const int n = sys.map.size();
  const int nreal = 2 * n;

  // Unknowns z = (Re a, Im a, s) with real drive amplitude s = A_in.
  const auto residual_z = [&](const Eigen::VectorXd& z) {
    const AmplitudeVector a = to_complex(z.head(nreal));
    const AmplitudeVector f = sys.residual(a, Complex(z(nreal), 0.0));
    Eigen::VectorXd r(nreal);
    r.head(n) = f.real();
    r.tail(n) = f.imag();
    return r;
  };
  const auto jacobian_z = [&](const Eigen::VectorXd& z) {
    const AmplitudeVector a = to_complex(z.head(nreal));
    MatrixC F_a, F_abar;
    sys.jacobian(a, F_a, F_abar);
    Eigen::MatrixXd J(nreal, nreal + 1);
    J.leftCols(nreal) = real_jacobian(F_a, F_abar);
    // dF/ds: only the drive row depends on A_in.
    Eigen::VectorXd ds = Eigen::VectorXd::Zero(nreal);
    const Complex d = sys.t_BM * sys.uhphase;
    ds(sys.drive_slot) = d.real();
    ds(n + sys.drive_slot) = d.imag();
    J.col(nreal) = ds;
    return J;
  };

  // Start point from homotopy at the smallest drive.
  SteadyParams start = params;
  start.A_in = std::sqrt(drive_min > 0 ? drive_min / abs_chi : 1e-6 * drive_max / abs_chi);
  const SteadyState s0 = solve_steady_homotopy(start);
  if (!s0.converged)
    throw std::runtime_error("continuation_sweep: homotopy start did not converge");

  ContinuationCurve curve;
  Eigen::VectorXd z(nreal + 1);
  z.head(nreal) = to_real(s0.amplitudes);
  z(nreal) = std::abs(start.A_in);

  // Tangent from the Jacobian nullspace, oriented toward increasing drive.
  Eigen::VectorXd tangent = Eigen::VectorXd::Zero(nreal + 1);
  tangent(nreal) = 1.0;
  const auto update_tangent = [&](const Eigen::VectorXd& at, Eigen::VectorXd& t) {
    const Eigen::MatrixXd J = jacobian_z(at);
    Eigen::MatrixXd Jsq(nreal + 1, nreal + 1);
    Jsq.topRows(nreal) = J;
    Jsq.row(nreal) = t.transpose();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(nreal + 1);
    e(nreal) = 1.0;
    const Eigen::VectorXd tn = Jsq.partialPivLu().solve(e);
    if (tn.allFinite() && tn.norm() > 0) t = tn.normalized() * (tn.dot(t) >= 0 ? 1.0 : -1.0);
  };
  update_tangent(z, tangent);

  const auto push_point = [&](const Eigen::VectorXd& at, bool fold) {
    SteadyParams p = params;
    p.A_in = Complex(at(nreal), 0.0);
    const AmplitudeVector a = to_complex(at.head(nreal));
    const double resid = sys.residual(a, p.A_in).norm();
    ContinuationPoint pt;
    pt.state = make_state(p, a, resid, resid < 1e-8 * std::max(1.0, a.norm()), false);
    pt.drive_intensity = abs_chi * at(nreal) * at(nreal);
    pt.total_intensity = abs_chi * pt.state.N_p;
    pt.fold = fold;
    pt.branch_id = curve.fold_indices.size();
    curve.points.push_back(std::move(pt));
  };
  push_point(z, false);

  // One corrector pass: returns the corrected point for a predictor step of
  // size hh from base along dir, or nullopt on failure.
  const auto correct = [&](const Eigen::VectorXd& base, const Eigen::VectorXd& dir, double hh,
                           Eigen::VectorXd& out) {
    Eigen::VectorXd zc = base + hh * dir;
    for (int it = 0; it < opts.newton_max_iter; ++it) {
      Eigen::VectorXd r(nreal + 1);
      r.head(nreal) = residual_z(zc);
      r(nreal) = dir.dot(zc - base) - hh;
      const double scale = std::max(1.0, zc.head(nreal).norm());
      if (r.norm() < opts.tol * scale) {
        out = zc;
        return true;
      }
      Eigen::MatrixXd Jsq(nreal + 1, nreal + 1);
      Jsq.topRows(nreal) = jacobian_z(zc);
      Jsq.row(nreal) = dir.transpose();
      const Eigen::VectorXd step = Jsq.partialPivLu().solve(-r);
      if (!step.allFinite()) return false;
      zc += step;
      if (step.norm() < opts.tol * scale) {
        if (residual_z(zc).norm() < 1e-8 * scale) {
          out = zc;
          return true;
        }
        return false;
      }
    }
    return false;
  };

  double h = opts.initial_step;
  while (static_cast<int>(curve.points.size()) < opts.max_points) {
    const double drive = abs_chi * z(nreal) * z(nreal);
    if (drive >= drive_max) break;

    Eigen::VectorXd zc;
    if (!correct(z, tangent, h, zc)) {
      h *= 0.5;
      if (h < opts.min_step) {
        curve.truncated = true;
        break;
      }
      continue;
    }

    const Eigen::VectorXd z_prev = z;
    const Eigen::VectorXd tangent_prev = tangent;
    const double s_dir_before = tangent(nreal);
    z = zc;
    update_tangent(z, tangent);
    const bool fold = (tangent(nreal) > 0) != (s_dir_before > 0);

    if (fold) {
      // Bisect the step size until the tangent drive-component vanishes:
      // that is the fold point, where the plain Jacobian is singular.
      double lo = 0.0, hi = h;
      Eigen::VectorXd z_fold = z;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        Eigen::VectorXd zm;
        if (!correct(z_prev, tangent_prev, mid, zm)) break;
        Eigen::VectorXd tm = tangent_prev;
        update_tangent(zm, tm);
        if ((tm(nreal) > 0) == (s_dir_before > 0))
          lo = mid;
        else
          hi = mid;
        z_fold = zm;
        if (hi - lo < 1e-13 * h) break;
      }
      curve.fold_indices.push_back(static_cast<int>(curve.points.size()));
      push_point(z_fold, true);
    }
    push_point(z, false);

    h = std::min(opts.max_step, h * 1.3);
    if (z(nreal) < 0) break;  // drive amplitude left the physical half-line
  }
  return curve;
}

std::optional<SteadyState> state_at_total_intensity(const ContinuationCurve& curve,
                                                    const SteadyParams& params, double target,
                                                    double rel_tol) {
  const double abs_chi = std::abs(params.config.chi);
  const System sys = System::build(params);
  const int n = sys.map.size();
  const int nreal = 2 * n;

  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const double y0 = curve.points[i].total_intensity;
    const double y1 = curve.points[i + 1].total_intensity;
    if ((y0 - target) * (y1 - target) > 0) continue;

    // Constrained Newton: F(a,s) = 0 and |chi| N_p(a) = target.
    Eigen::VectorXd z(nreal + 1);
    z.head(nreal) = to_real(curve.points[i].state.amplitudes);
    z(nreal) = std::abs(curve.points[i].state.A_in);
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      const AmplitudeVector a = to_complex(z.head(nreal));
      const AmplitudeVector f = sys.residual(a, Complex(z(nreal), 0));
      Eigen::VectorXd r(nreal + 1);
      r.head(n) = f.real();
      r.segment(n, n) = f.imag();
      r(nreal) = abs_chi * a.squaredNorm() - target;
      if (r.norm() < 1e-10 * std::max(1.0, a.norm())) {
        ok = true;
        break;
      }
      MatrixC F_a, F_abar;
      sys.jacobian(a, F_a, F_abar);
      Eigen::MatrixXd J(nreal + 1, nreal + 1);
      J.topLeftCorner(nreal, nreal) = real_jacobian(F_a, F_abar);
      Eigen::VectorXd ds = Eigen::VectorXd::Zero(nreal);
      const Complex d = sys.t_BM * sys.uhphase;
      ds(sys.drive_slot) = d.real();
      ds(n + sys.drive_slot) = d.imag();
      J.block(0, nreal, nreal, 1) = ds;
      J.row(nreal).head(n) = 2.0 * abs_chi * a.real().transpose();
      J.row(nreal).segment(n, n) = 2.0 * abs_chi * a.imag().transpose();
      J(nreal, nreal) = 0.0;
      const Eigen::VectorXd step = J.partialPivLu().solve(-r);
      if (!step.allFinite()) break;
      z += step;
    }
    if (!ok) continue;
    SteadyParams p = params;
    p.A_in = Complex(z(nreal), 0.0);
    const AmplitudeVector a = to_complex(z.head(nreal));
    const double resid = sys.residual(a, p.A_in).norm();
    SteadyState st = make_state(p, a, resid, resid < 1e-9 * std::max(1.0, a.norm()), false);
    if (std::abs(abs_chi * st.N_p - target) <= rel_tol * target && st.converged) return st;
  }
  return std::nullopt;
}

IntensityTable observables(const SteadyState& state) {
  IntensityTable out;
  out.N_p = state.amplitudes.squaredNorm();
  const int ny = static_cast<int>(state.amplitudes.size()) / 4;
  const IndexMap map(ny);
  out.intensity.resize(ny, 4);
  for (int n = 1; n <= ny; ++n)
    for (int s = 0; s < 4; ++s)
      out.intensity(n - 1, s) = std::norm(state.amplitudes[map.at(kDirs[s], n)]);
  return out;
}

}  // namespace optnet
