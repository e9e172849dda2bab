#include "optnet/fabry_perot.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "optnet/fluctuation.hpp"

namespace optnet {

namespace {

using Eigen::Matrix4cd;

Complex cavity_denominator(double k, const FPParams& p) {
  return std::exp(Complex(0, -k * p.L)) - kI * p.r_BM * std::exp(Complex(0, k * p.L));
}

// Paper-ordering fluctuation matrix of the cavity fiber before the a_r
// phase gauge: entries are chi |a_r|^2 times e^{i k L} factors.
Matrix4cd ungauged_coupling(double y, double kL) {
  const Complex ep = std::exp(Complex(0, kL));
  const Complex em = std::exp(Complex(0, -kL));
  Matrix4cd m;
  m << 1.0, 2.0 * em, 1.0, 2.0 * ep,
       2.0 * ep, 1.0, 2.0 * ep, ep * ep,
      -1.0, -2.0 * em, -1.0, -2.0 * ep,
      -2.0 * em, -em * em, -2.0 * em, -1.0;
  return y * m;
}

struct FPMatrices {
  Matrix4cd Ub, Ua;   // rearrangement factors of the fluctuation relation
  Matrix4cd UkR;      // U_k R_BM
  Eigen::Vector4cd theta_left, theta_right;  // diagonal phase factors
};

FPMatrices fp_matrices(Complex omega_f, const FPState& state, const FPParams& p) {
  const double y = state.y;
  const double k = p.omega_d - 3.0 * y;
  const Matrix4cd coupling = fp_coupling_matrix(state, p);
  const Matrix4cd P = propagation_matrix(coupling, omega_f, p.L);

  FPMatrices out;
  out.Ub << P(0, 0), 0, P(0, 2), 0,
           -P(1, 0), 1, -P(1, 2), 0,
            P(2, 0), 0, P(2, 2), 0,
           -P(3, 0), 0, -P(3, 2), 1;
  out.Ua << 1, -P(0, 1), 0, -P(0, 3),
            0, P(1, 1), 0, P(1, 3),
            0, -P(2, 1), 1, -P(2, 3),
            0, P(3, 1), 0, P(3, 3);

  const Complex et = std::exp(Complex(0, p.theta0));
  const Complex eti = std::exp(Complex(0, -p.theta0));
  out.theta_left = Eigen::Vector4cd(et, 1.0, eti, 1.0);    // U_theta~
  out.theta_right = Eigen::Vector4cd(1.0, eti, 1.0, et);   // U_theta

  const Complex ek = std::exp(Complex(0, k * p.L));
  const Complex eki = std::exp(Complex(0, -k * p.L));
  Matrix4cd R;
  R << 0, kI * p.r_BM, 0, 0,
       1, 0, 0, 0,
       0, 0, 0, -kI * p.r_BM,
       0, 0, 1, 0;
  out.UkR = Eigen::Vector4cd(ek, ek, eki, eki).asDiagonal() * R;
  return out;
}

}  // namespace

double fp_input_intensity(double y, const FPParams& params) {
  const double r = params.r_BM;
  const double bracket =
      1.0 + r * r + 2.0 * r * std::sin(2.0 * params.omega_d * params.L - 6.0 * y * params.L);
  return y / (1.0 - r * r) * bracket;
}

std::vector<FPState> fp_solve(Complex A_in, const FPParams& params) {
  if (params.r_BM >= 1.0) throw std::domain_error("fp_solve: r_BM must be < 1");
  const double x = params.chi * std::norm(A_in);
  std::vector<FPState> states;

  const auto make_state = [&](double y) {
    FPState s;
    const double k = params.omega_d - 3.0 * y;
    s.y = y;
    s.x = x;
    const double t = std::sqrt(1.0 - params.r_BM * params.r_BM);
    const Complex denom = cavity_denominator(k, params);
    s.a_r = t * A_in * std::exp(Complex(0, -params.theta0)) / denom;
    const Complex ek = std::exp(Complex(0, k * params.L));
    const Complex eki = std::exp(Complex(0, -k * params.L));
    s.A_out = (ek + kI * params.r_BM * eki) / denom * A_in;
    return s;
  };

  if (x == 0.0) {
    states.push_back(make_state(0.0));
    return states;
  }

  const double sign = x > 0.0 ? 1.0 : -1.0;
  double span = 3.0 * std::abs(x) / ((1.0 - params.r_BM) * (1.0 - params.r_BM));
  const auto g = [&](double y) { return fp_input_intensity(y, params) - x; };

  for (int attempt = 0; attempt < 4; ++attempt) {
    states.clear();
    // Grid fine enough for the sin oscillation (period pi/3 in y L).
    const int n = std::max(2000, static_cast<int>(span * params.L * 12.0));
    double prev_y = 0.0;
    double prev_g = g(0.0);
    bool edge_root = false;
    for (int i = 1; i <= n; ++i) {
      const double yy = sign * span * i / n;
      const double gg = g(yy);
      if (gg == 0.0) {
        states.push_back(make_state(yy));
        if (i == n) edge_root = true;
      } else if (prev_g != 0.0 && (gg > 0) != (prev_g > 0)) {
        double lo = prev_y, hi = yy;
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double gm = g(mid);
          if (gm == 0.0) {
            lo = hi = mid;
            break;
          }
          if ((gm > 0) == (prev_g > 0))
            lo = mid;
          else
            hi = mid;
        }
        states.push_back(make_state(0.5 * (lo + hi)));
        if (i == n) edge_root = true;
      }
      prev_y = yy;
      prev_g = gg;
    }
    if (!edge_root) break;
    span *= 1.5;  // a root sat on the grid edge: widen and retry
  }

  std::sort(states.begin(), states.end(),
            [&](const FPState& a, const FPState& b) { return a.y / params.chi < b.y / params.chi; });
  return states;
}

double fp_closed_frequency(int n, double intensity, const FPParams& params) {
  return n * kPi / params.L - kPi / (4.0 * params.L) + 3.0 * params.chi * intensity;
}

Eigen::Matrix4cd fp_coupling_matrix(const FPState& state, const FPParams& params) {
  const double k = params.omega_d - 3.0 * state.y;
  const Matrix4cd m = ungauged_coupling(state.y, k * params.L);
  const Complex g = std::exp(Complex(0, 2.0 * std::arg(state.a_r)));
  const Eigen::Vector4cd us(1.0, 1.0, g, g);
  return us.conjugate().asDiagonal() * m * us.asDiagonal().toDenseMatrix();
}

LogValue fp_det_d(Complex omega_f, const FPState& state, const FPParams& params) {
  // det(Utheta~ Ub^{-1} Ua Utheta - Uk R), assembled in log space from the
  // factored form det(Ua Utheta - Ub Utheta~^{-1} Uk R) / det(Ub) (times
  // the unit-modulus det Utheta~). This avoids inverting Ub while keeping
  // exactly the transcendental function whose zeros are the resonances;
  // it is meromorphic with poles at det Ub = 0.
  const FPMatrices m = fp_matrices(omega_f, state, params);
  const MatrixC d =
      m.Ua * m.theta_right.asDiagonal().toDenseMatrix() -
      m.Ub * (m.theta_left.cwiseInverse().asDiagonal() * m.UkR);
  const LogValue num = log_det(d);
  const LogValue den = log_det(m.Ub);
  double phase = num.phase - den.phase;
  for (int i = 0; i < 4; ++i) phase += std::arg(m.theta_left(i));
  return LogValue{num.log_abs - den.log_abs, phase};
}

LogValue fp_det_d_unreduced(Complex omega_f, const FPState& state, const FPParams& params) {
  const double k = params.omega_d - 3.0 * state.y;
  const Matrix4cd coupling = fp_coupling_matrix(state, params);
  const Matrix4cd P = propagation_matrix(coupling, omega_f, params.L);

  const Complex et = std::exp(Complex(0, params.theta0));
  const Complex eti = std::exp(Complex(0, -params.theta0));
  const Complex ek = std::exp(Complex(0, k * params.L));
  const Complex eki = std::exp(Complex(0, -k * params.L));

  // Unknowns (da_r, da_l, da_r*, da_l*, db_r, db_l, db_r*, db_l*).
  MatrixC big = MatrixC::Zero(8, 8);
  // Fiber relation P (Q_B dB + Q_A dA) = R_A dA + R_B dB.
  const Eigen::Vector4cd qb(eti, 0.0, et, 0.0);
  const Eigen::Vector4cd qa(0.0, eti, 0.0, et);
  const Eigen::Vector4cd ra(1.0, 0.0, 1.0, 0.0);
  const Eigen::Vector4cd rb(0.0, 1.0, 0.0, 1.0);
  big.block<4, 4>(0, 0) = P * qa.asDiagonal().toDenseMatrix() - MatrixC(ra.asDiagonal());
  big.block<4, 4>(0, 4) = P * qb.asDiagonal().toDenseMatrix() - MatrixC(rb.asDiagonal());
  // Right perfect mirror: da_r = e^{-ikL} db_l (and conjugate).
  big(4, 0) = 1.0;
  big(4, 5) = -eki;
  big(5, 2) = 1.0;
  big(5, 7) = -ek;
  // Left transmissive mirror (homogeneous part): e^{-ikL} db_r = i r da_l.
  big(6, 4) = eki;
  big(6, 1) = -kI * params.r_BM;
  big(7, 6) = ek;
  big(7, 3) = kI * params.r_BM;
  return log_det(big);
}

FPStability fp_stability(const FPState& state, const FPParams& params) {
  FPStability out;
  // det D is only asymptotically periodic in Re(omega_f): instability bands
  // can sit in neighbouring periods even when the principal window is
  // clean, so the search spans three periods on each side.
  SearchBox box{-3.0 * kPi / params.L, 3.0 * kPi / params.L, -2.0 / params.L, 2.0 / params.L};
  // Root search runs on the uninverted (entire) determinant so the winding
  // counts see no poles; its zeros are exactly the det D resonances.
  const AnalyticLogFn fn = [&](Complex w) { return fp_det_d_unreduced(w, state, params); };
  RootFindOptions opts;
  opts.phase_rate_bound = 20.0 * params.L;
  const RootFindResult res = find_roots(fn, box, opts);
  out.roots = res.roots;
  out.consistent = res.consistent;
  out.stable = true;
  for (const Complex& r : res.roots)
    if (r.imag() >= 0.0) out.stable = false;
  return out;
}

}  // namespace optnet
