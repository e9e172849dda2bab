#include "optnet/fluctuation.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <stdexcept>

#include "optnet/assembly.hpp"
#include "optnet/parallel.hpp"

namespace optnet {

namespace {

using Eigen::Matrix2cd;
using Eigen::Matrix4cd;
using Eigen::Vector4cd;

// Coupling matrix of one fiber for forward/backward steady amplitudes
// (f, b) and momentum-mismatch phase factor phi (1 on vertical fibers).
Matrix4cd coupling_form(Complex f, Complex b, Complex phi, double pref) {
  const Complex fc = std::conj(f);
  const Complex bc = std::conj(b);
  const Complex pc = std::conj(phi);
  Matrix4cd m;
  m << std::norm(f), 2.0 * phi * bc * f, f * f, 2.0 * phi * f * b,
      2.0 * pc * fc * b, std::norm(b), 2.0 * pc * f * b, b * b,
      -fc * fc, -2.0 * phi * fc * bc, -std::norm(f), -2.0 * phi * fc * b,
      -2.0 * pc * fc * bc, -bc * bc, -2.0 * pc * bc * f, -std::norm(b);
  return pref * m;
}

Matrix4cd expm4(const Matrix4cd& e) {
  // Scaling and squaring with a plain Taylor series; accurate to machine
  // precision for the 4x4 exponents that occur here.
  const double norm = e.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.25) {
    scale *= 0.5;
    ++squarings;
  }
  const Matrix4cd es = e * scale;
  Matrix4cd term = Matrix4cd::Identity();
  Matrix4cd sum = Matrix4cd::Identity();
  for (int k = 1; k <= 24; ++k) {
    term = (term * es) / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

// Fiber relation split into the implicit form LHS db-quad = RHS da-quad,
// with the left/right birefringent phases pl = e^{-i n s th0}, pr = conj.
void fiber_lhs_rhs(const Matrix4cd& P, Complex pl, Complex pr, Matrix4cd& lhs, Matrix4cd& rhs) {
  lhs << P(0, 0) * pl, 0, P(0, 2) * pr, 0,
        -P(1, 0) * pl, 1, -P(1, 2) * pr, 0,
         P(2, 0) * pl, 0, P(2, 2) * pr, 0,
        -P(3, 0) * pl, 0, -P(3, 2) * pr, 1;
  rhs << 1, -P(0, 1) * pl, 0, -P(0, 3) * pr,
         0, P(1, 1) * pl, 0, P(1, 3) * pr,
         0, -P(2, 1) * pl, 1, -P(2, 3) * pr,
         0, P(3, 1) * pl, 0, P(3, 3) * pr;
}

struct FluctContext {
  const SteadyState* state = nullptr;
  SteadyParams params;
  IndexMap map{1};
  int ny = 0;
  int dim = 0;  // 4 Ny: one particle/hole block
  double p_x = 0.0;
  double q_x = 0.0;
  double L = 0.0;
  double r_BM = 0.0;
  double t_BM = 0.0;
  MatrixC S_p;  // Kerr/omega_d-phased node matrix at p_x (destination rows)
  MatrixC S_q;  // conjugated counterpart at q_x
  AmplitudeVector phi_p, phi_q;  // destination shift phases
  std::vector<FiberBogMatrix> fibers;
  double bottom_kL = 0.0;  // wavevector of the bottom mirror loop
  int slot_d1 = 0;
  int slot_uN = 0;

  void init(const SteadyState& s, double px) {
    state = &s;
    params = SteadyParams{s.config, s.sector, s.kx, s.omega_d, s.A_in};
    if (s.config.geometry != Geometry::Cylinder)
      throw std::domain_error("fluctuation analysis: geometry must be Cylinder");
    if (!s.config.ideal())
      throw std::domain_error("fluctuation analysis: requires the ideal network");
    ny = s.config.Ny;
    map = IndexMap(ny);
    dim = map.size();
    p_x = px;
    q_x = 2.0 * s.kx - px;
    L = s.config.L;
    r_BM = s.config.r_BM;
    t_BM = std::sqrt(1.0 - r_BM * r_BM);
    slot_d1 = map.at(Dir::D, 1);
    slot_uN = map.at(Dir::U, ny);

    const KerrPhaseDiagonal kerr = kerr_phase_diagonal(s.amplitudes, params);

    NetworkConfig flat = s.config;
    flat.theta0 = 0.0;
    flat.disorder_delta = 0.0;
    flat.loss_eta = 1.0;
    const MatrixC base_p = assemble_closed(flat, s.sector, p_x).step_operator();
    const MatrixC base_q = assemble_closed(flat, s.sector, q_x).step_operator();

    const Complex ewd = std::exp(Complex(0, s.omega_d * L));
    S_p.resize(dim, dim);
    S_q.resize(dim, dim);
    for (int j = 0; j < dim; ++j) {
      const Complex phase = ewd * std::exp(Complex(0, -kerr.prefactor * kerr.intensities(j)));
      S_p.row(j) = phase * base_p.row(j);
      S_q.row(j) = std::conj(phase) * base_q.row(j).conjugate();
    }

    phi_p = AmplitudeVector::Ones(dim);
    phi_q = AmplitudeVector::Ones(dim);
    for (int n = 1; n <= ny; ++n) {
      phi_p(map.at(Dir::R, n)) = std::exp(Complex(0, p_x));
      phi_p(map.at(Dir::L, n)) = std::exp(Complex(0, -p_x));
      phi_q(map.at(Dir::R, n)) = std::exp(Complex(0, -q_x));
      phi_q(map.at(Dir::L, n)) = std::exp(Complex(0, q_x));
    }

    fibers = fiber_bog_matrices(s, px);
    const double chi_nx = s.config.chi / s.config.Nx;
    bottom_kL = s.omega_d * L - 3.0 * chi_nx * L * std::norm(s.amplitudes[slot_uN]);
  }

  int p(int j) const { return j; }
  int q(int j) const { return dim + j; }

  // Bottom mirror loop pieces: da-pair = G A (mu,nu), db-pair = G B (mu,nu),
  // G = diag(e^{i k L/2}, e^{-i k L/2}).
  void bottom_blocks(Complex omega_f, Matrix2cd& A, Matrix2cd& B, Matrix2cd& G) const {
    const FiberBogMatrix& fm = fibers.back();
    const Matrix4cd P = propagation_matrix(fm.Mbar, omega_f, L / 2.0);
    A << P(0, 0) + P(0, 1), P(0, 2) + P(0, 3), P(2, 0) + P(2, 1), P(2, 2) + P(2, 3);
    B << P(1, 0) + P(1, 1), P(1, 2) + P(1, 3), P(3, 0) + P(3, 1), P(3, 2) + P(3, 3);
    const Complex g = std::exp(Complex(0, bottom_kL / 2.0));
    G.setZero();
    G(0, 0) = g;
    G(1, 1) = std::conj(g);
  }

  // Full linear system in (da_p, da_q*, db_p, db_q*), entire in omega_f.
  // Rows 0..2*dim: node relations S da = Phi db. Rows 2*dim..4*dim: fiber
  // relations in implicit (uninverted) form plus the two mirror boundaries.
  MatrixC build_big(Complex omega_f) const {
    const SteadyState& s = *state;
    const int n4 = 4 * dim;
    MatrixC M = MatrixC::Zero(n4, n4);

    // Node relations.
    M.block(0, 0, dim, dim) = S_p;
    M.block(dim, dim, dim, dim) = S_q;
    for (int j = 0; j < dim; ++j) {
      M(p(j), 2 * dim + j) = -phi_p(j);
      M(q(j), 3 * dim + j) = -phi_q(j);
    }

    // Fiber relations.
    const double sg = sigma_value(s.sector);
    for (const FiberBogMatrix& fm : fibers) {
      const int n = fm.row;
      if (fm.kind == FiberBogMatrix::Kind::BottomMirror) continue;
      const Matrix4cd P = propagation_matrix(fm.Mbar, omega_f, L);
      Matrix4cd lhs, rhs;
      int slots[4];
      if (fm.kind == FiberBogMatrix::Kind::Horizontal) {
        const Complex pl = std::exp(Complex(0, -n * sg * s.config.theta0));
        fiber_lhs_rhs(P, pl, std::conj(pl), lhs, rhs);
        slots[0] = p(map.at(Dir::R, n));
        slots[1] = p(map.at(Dir::L, n));
        slots[2] = q(map.at(Dir::R, n));
        slots[3] = q(map.at(Dir::L, n));
      } else {
        fiber_lhs_rhs(P, 1.0, 1.0, lhs, rhs);
        slots[0] = p(map.at(Dir::U, n));
        slots[1] = p(map.at(Dir::D, n + 1));
        slots[2] = q(map.at(Dir::U, n));
        slots[3] = q(map.at(Dir::D, n + 1));
      }
      for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
          M(2 * dim + slots[i], 2 * dim + slots[k]) += lhs(i, k);
          M(2 * dim + slots[i], slots[k]) -= rhs(i, k);
        }
    }

    // Top transmissive mirror: i r db_(d,1),p = e^{-i w L} da_(d,1),p - C+,
    // and the conjugated negative-frequency row.
    const Complex ef = std::exp(Complex(0, -1.0) * omega_f * L);
    M(2 * dim + p(slot_d1), 2 * dim + p(slot_d1)) += kI * r_BM;
    M(2 * dim + p(slot_d1), p(slot_d1)) -= ef;
    M(2 * dim + q(slot_d1), 2 * dim + q(slot_d1)) += -kI * r_BM;
    M(2 * dim + q(slot_d1), q(slot_d1)) -= ef;

    // Bottom mirror loop, implicit form: det(B) G^{-1} da - A adj(B) G^{-1} db = 0.
    Matrix2cd A, B, G;
    bottom_blocks(omega_f, A, B, G);
    Matrix2cd adjB;
    adjB << B(1, 1), -B(0, 1), -B(1, 0), B(0, 0);
    const Complex detB = B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0);
    const Matrix2cd da_coef = detB * G.inverse();
    const Matrix2cd db_coef = A * adjB * G.inverse();
    const int pr[2] = {p(slot_uN), q(slot_uN)};
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k) {
        M(2 * dim + pr[i], pr[k]) += da_coef(i, k);
        M(2 * dim + pr[i], 2 * dim + pr[k]) -= db_coef(i, k);
      }
    return M;
  }

  // Paper-form reduced matrix D = H_f - R S-blockdiag (meromorphic in
  // omega_f through the per-fiber inversions).
  DAssembly build_reduced(Complex omega_f) const {
    const SteadyState& s = *state;
    MatrixC H = MatrixC::Zero(2 * dim, 2 * dim);
    std::vector<int> flagged;

    const double sg = sigma_value(s.sector);
    for (const FiberBogMatrix& fm : fibers) {
      const int n = fm.row;
      if (fm.kind == FiberBogMatrix::Kind::BottomMirror) {
        Matrix2cd A, B, G;
        bottom_blocks(omega_f, A, B, G);
        const Matrix2cd K = G * A * B.inverse() * G.inverse();
        if (std::abs(B.determinant()) < 1e-12 || std::abs(K.determinant()) < 1e-12)
          flagged.push_back(slot_uN);
        const Matrix2cd Kinv = K.inverse();
        const int rows[2] = {p(slot_uN), q(slot_uN)};
        for (int i = 0; i < 2; ++i)
          for (int k = 0; k < 2; ++k) H(rows[i], rows[k]) += Kinv(i, k);
        continue;
      }
      const Matrix4cd P = propagation_matrix(fm.Mbar, omega_f, L);
      Matrix4cd lhs, rhs;
      int slots[4];
      Complex row_phase[4];
      if (fm.kind == FiberBogMatrix::Kind::Horizontal) {
        const Complex pl = std::exp(Complex(0, -n * sg * s.config.theta0));
        fiber_lhs_rhs(P, pl, std::conj(pl), lhs, rhs);
        slots[0] = p(map.at(Dir::R, n));
        slots[1] = p(map.at(Dir::L, n));
        slots[2] = q(map.at(Dir::R, n));
        slots[3] = q(map.at(Dir::L, n));
        row_phase[0] = phi_p(map.at(Dir::R, n));
        row_phase[1] = phi_p(map.at(Dir::L, n));
        row_phase[2] = phi_q(map.at(Dir::R, n));
        row_phase[3] = phi_q(map.at(Dir::L, n));
      } else {
        fiber_lhs_rhs(P, 1.0, 1.0, lhs, rhs);
        slots[0] = p(map.at(Dir::U, n));
        slots[1] = p(map.at(Dir::D, n + 1));
        slots[2] = q(map.at(Dir::U, n));
        slots[3] = q(map.at(Dir::D, n + 1));
        row_phase[0] = row_phase[1] = row_phase[2] = row_phase[3] = 1.0;
      }
      if (std::abs(lhs.determinant()) < 1e-12) flagged.push_back(slots[0] % dim);
      const Matrix4cd W = lhs.partialPivLu().solve(rhs);
      for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) H(slots[i], slots[k]) += row_phase[i] * W(i, k);
    }

    const Complex ef = std::exp(Complex(0, -1.0) * omega_f * L);
    H(p(slot_d1), p(slot_d1)) += ef;
    H(q(slot_d1), q(slot_d1)) += ef;

    DAssembly out;
    out.D = std::move(H);
    out.flagged_rows = std::move(flagged);
    for (int j = 0; j < dim; ++j) {
      const Complex rp = (j == slot_d1) ? kI * r_BM : Complex(1, 0);
      const Complex rq = (j == slot_d1) ? -kI * r_BM : Complex(1, 0);
      out.D.row(p(j)).head(dim) -= rp * S_p.row(j);
      out.D.row(q(j)).tail(dim) -= rq * S_q.row(j);
    }
    return out;
  }

  // Solve the driven fluctuation problem; rhs_p / rhs_q are the (d,1)-slot
  // drive values of the reduced system D (da_p; da_q*) = rhs.
  struct Response {
    AmplitudeVector da;  // (da_p; da_q*)
    bool near_singular = false;
  };
  Response respond(const Eigen::PartialPivLU<MatrixC>& lu, const MatrixC& M, Complex rhs_p,
                   Complex rhs_q) const {
    AmplitudeVector rhs = AmplitudeVector::Zero(4 * dim);
    rhs(2 * dim + p(slot_d1)) = -rhs_p;
    rhs(2 * dim + q(slot_d1)) = -rhs_q;
    const AmplitudeVector x = lu.solve(rhs);
    Response out;
    out.da = x.head(2 * dim);
    out.near_singular = !((M * x - rhs).norm() < 1e-8 * (1.0 + x.norm()));
    return out;
  }
};

}  // namespace

Eigen::Matrix4cd bog_sigma() {
  Matrix4cd s = Matrix4cd::Zero();
  s(0, 0) = kI;
  s(1, 1) = -kI;
  s(2, 2) = kI;
  s(3, 3) = -kI;
  return s;
}

std::vector<FiberBogMatrix> fiber_bog_matrices(const SteadyState& state, double p_x) {
  const NetworkConfig& cfg = state.config;
  const int ny = cfg.Ny;
  const IndexMap map(ny);
  const double pref = cfg.chi / cfg.Nx;
  const double sg = sigma_value(state.sector);
  const Complex phi = std::exp(Complex(0, state.kx - p_x));

  std::vector<FiberBogMatrix> out;
  out.reserve(2 * ny);
  for (int n = 1; n <= ny; ++n) {
    const Complex a_r = state.amplitudes[map.at(Dir::R, n)];
    const Complex a_l_t =
        std::exp(Complex(0, -n * sg * cfg.theta0)) * state.amplitudes[map.at(Dir::L, n)];
    out.push_back({coupling_form(a_r, a_l_t, phi, pref), FiberBogMatrix::Kind::Horizontal, n});
  }
  for (int n = 1; n < ny; ++n) {
    const Complex a_u = state.amplitudes[map.at(Dir::U, n)];
    const Complex a_d = state.amplitudes[map.at(Dir::D, n + 1)];
    out.push_back({coupling_form(a_u, a_d, 1.0, pref), FiberBogMatrix::Kind::Vertical, n});
  }
  // Bottom mirror loop: both directions carry the same field; reference
  // amplitude is the up input de-propagated to the mirror.
  const Complex a_uN = state.amplitudes[map.at(Dir::U, ny)];
  const double kL = state.omega_d * cfg.L - 3.0 * pref * cfg.L * std::norm(a_uN);
  const Complex s_amp = a_uN * std::exp(Complex(0, -kL / 2.0));
  out.push_back({coupling_form(s_amp, s_amp, 1.0, pref), FiberBogMatrix::Kind::BottomMirror, ny});
  return out;
}

Eigen::Matrix4cd propagation_matrix(const Eigen::Matrix4cd& Mbar, Complex omega_f, double L,
                                    bool* disagree) {
  const Matrix4cd exponent = bog_sigma() * (omega_f * Matrix4cd::Identity() - Mbar) * L;

  // Scaling-and-squaring is the evaluation path: unlike the eigenbasis
  // route it stays smooth across the exceptional points of the non-normal
  // exponent, which the contour phase tracking depends on. The
  // eigendecomposition is kept as a cross-check; a disagreement beyond
  // 1e-8 (with a healthy eigenbasis) is reported through `disagree`.
  const Matrix4cd series = expm4(exponent);
  if (disagree) {
    *disagree = false;
    Eigen::ComplexEigenSolver<Matrix4cd> eig(exponent, true);
    if (eig.info() == Eigen::Success) {
      Eigen::JacobiSVD<Matrix4cd> svd(eig.eigenvectors());
      const double cond = svd.singularValues()(0) / svd.singularValues()(3);
      if (cond < 1e8) {
        Vector4cd expvals;
        for (int i = 0; i < 4; ++i) expvals(i) = std::exp(eig.eigenvalues()(i));
        const Matrix4cd by_eig =
            eig.eigenvectors() * expvals.asDiagonal() * eig.eigenvectors().inverse();
        const double diff = (by_eig - series).cwiseAbs().maxCoeff() /
                            std::max(1.0, series.cwiseAbs().maxCoeff());
        *disagree = diff > 1e-8;
      }
    }
  }
  return series;
}

DAssembly assemble_D(const SteadyState& state, Complex omega_f, double p_x) {
  FluctContext ctx;
  ctx.init(state, p_x);
  return ctx.build_reduced(omega_f);
}

LogValue det_D(const SteadyState& state, Complex omega_f, double p_x) {
  FluctContext ctx;
  ctx.init(state, p_x);
  return log_det(ctx.build_big(omega_f));
}

StabilityResult stability_roots(const SteadyState& state, double p_x) {
  // Three spectral periods on each side: det D is only asymptotically
  // periodic in Re(omega_f) and instability bands of the pumped network
  // can live outside the principal window. Stability only depends on the
  // roots above the margin line, so only the winding of the upper
  // sub-region is counted; the dense cloud of damped resonances below it
  // is never enumerated.
  const double L = state.config.L;
  FluctContext ctx;
  ctx.init(state, p_x);
  const AnalyticLogFn fn = [&](Complex w) { return log_det(ctx.build_big(w)); };

  StabilityResult out;
  out.margin = 1e-8 / L;
  RootFindOptions opts;
  opts.phase_rate_bound = (8.0 * ctx.ny + 10.0) * L;
  SearchBox upper{-3.0 * kPi / L, 3.0 * kPi / L, -out.margin, 2.0 / L};
  out.region = upper;

  // A root sitting essentially on the margin line stalls the contour; back
  // the line off in decades and report the margin actually certified.
  int above = 0;
  bool counted = false;
  for (double m : {1e-8 / L, 1e-7 / L, 1e-6 / L, 1e-5 / L}) {
    upper.im_lo = -m;
    try {
      above = winding_number(fn, upper, opts);
      counted = true;
      out.margin = m;
      out.region = upper;
      break;
    } catch (const std::runtime_error&) {
      continue;
    }
  }
  if (!counted) {
    out.consistent = false;
    out.stable = false;
    return out;
  }
  out.stable = above == 0;
  if (above > 0) {
    RootFindOptions fopts = opts;
    const RootFindResult res = find_roots(fn, upper, fopts);
    out.roots = res.roots;
    out.consistent = res.consistent;
  }
  return out;
}

StabilityResult stability_roots(const SteadyState& state, double p_x, SearchBox region) {
  FluctContext ctx;
  ctx.init(state, p_x);
  // The entire (uninverted) form of det D keeps the winding counts free of
  // the spurious poles of the per-fiber rearrangement.
  const AnalyticLogFn fn = [&](Complex w) { return log_det(ctx.build_big(w)); };
  RootFindOptions opts;
  opts.phase_rate_bound = (8.0 * ctx.ny + 10.0) * state.config.L;
  const RootFindResult res = find_roots(fn, region, opts);

  StabilityResult out;
  out.roots = res.roots;
  out.consistent = res.consistent;
  out.region = res.box_used;
  out.margin = 1e-8 / state.config.L;
  out.stable = true;
  for (const Complex& r : out.roots)
    if (!(r.imag() < -out.margin)) out.stable = false;
  return out;
}

NearAxisSpectrum near_axis_spectrum(const SteadyState& state, double p_x, double im_band) {
  const double L = state.config.L;
  NearAxisSpectrum out;

  // Exact linear resonances: at zero amplitude the reduced D is affine in
  // e^{-i w L} with an invertible coefficient, so the roots come out of one
  // dense eigensolve.
  SteadyState zero = state;
  zero.amplitudes = AmplitudeVector::Zero(state.amplitudes.size());
  FluctContext lin;
  lin.init(zero, p_x);
  const Complex w1(0.37, 0.21), w2(-0.83, -0.19);
  const Complex mu1 = std::exp(Complex(0, -1.0) * w1 * L);
  const Complex mu2 = std::exp(Complex(0, -1.0) * w2 * L);
  const MatrixC D1 = lin.build_reduced(w1).D;
  const MatrixC D2 = lin.build_reduced(w2).D;
  const MatrixC G = (D1 - D2) / (mu1 - mu2);
  const MatrixC C = mu1 * G - D1;
  Eigen::ComplexEigenSolver<MatrixC> eig(G.partialPivLu().solve(C), false);

  std::vector<Complex> seeds;
  for (int i = 0; i < eig.eigenvalues().size(); ++i) {
    const Complex mu = eig.eigenvalues()(i);
    if (!(std::abs(mu) > 1e-12)) continue;
    const Complex w0 = fold_energy(kI * std::log(mu) / L, L);
    if (std::abs(w0.imag()) > im_band) continue;
    for (int img = -1; img <= 1; ++img)
      seeds.push_back(w0 + Complex(2.0 * kPi * img / L, 0.0));
  }
  out.seeds = static_cast<int>(seeds.size());

  // Amplitude homotopy: scale the condensate toward the full state while
  // polishing each root.
  const double scales[] = {0.35, 0.6, 0.8, 0.92, 1.0};
  std::vector<FluctContext> ctxs(std::size(scales));
  for (std::size_t k = 0; k < std::size(scales); ++k) {
    SteadyState partial = state;
    partial.amplitudes = scales[k] * state.amplitudes;
    ctxs[k].init(partial, p_x);
  }

  std::vector<Complex> tracked(seeds.size());
  std::vector<char> ok(seeds.size(), 1);
  parallel_for(seeds.size(), [&](std::size_t i) {
    Complex w = seeds[i];
    for (std::size_t k = 0; k < std::size(scales); ++k) {
      const auto& ctx = ctxs[k];
      const AnalyticLogFn fn = [&](Complex z) { return log_det(ctx.build_big(z)); };
      const Complex next = polish_root(fn, w);
      if (!(std::abs(next - w) < 0.3) || !std::isfinite(next.real()) ||
          !std::isfinite(next.imag())) {
        ok[i] = 0;
        return;
      }
      w = next;
    }
    tracked[i] = w;
  });

  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!ok[i]) {
      ++out.lost;
      continue;
    }
    // Keep roots inside the tracked window.
    if (std::abs(tracked[i].real()) > 3.0 * kPi / L + 0.5) continue;
    out.roots.push_back(tracked[i]);
    out.max_im = std::max(out.max_im, tracked[i].imag());
  }
  std::sort(out.roots.begin(), out.roots.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  out.stable = out.lost == 0 && out.max_im < -1e-8 / L;
  return out;
}

BogoliubovResponse bogoliubov_response(const SteadyState& state, double p_x, Complex dA_in_plus,
                                       Complex dA_in_minus,
                                       const std::vector<double>& omega_grid) {
  FluctContext ctx;
  ctx.init(state, p_x);
  const int dim = ctx.dim;
  const double L = ctx.L;
  const double wd = state.omega_d;
  const Complex inv_ir = 1.0 / (kI * ctx.r_BM);

  BogoliubovResponse out;
  out.p_x = p_x;
  out.q_x = ctx.q_x;
  out.omega_f = omega_grid;
  const int npts = static_cast<int>(omega_grid.size());
  out.S_plus.resize(npts);
  out.S_minus.resize(npts);
  out.M_io.resize(npts);
  out.delta_a_p.resize(dim, npts);
  out.delta_a_q_conj.resize(dim, npts);
  out.near_singular.assign(npts, false);

  for (int i = 0; i < npts; ++i) {
    const double wf = omega_grid[i];
    const MatrixC M = ctx.build_big(Complex(wf, 0.0));
    Eigen::PartialPivLU<MatrixC> lu(M);

    const Complex drive_p = ctx.t_BM * dA_in_plus * std::exp(Complex(0, (wd - wf) * L / 2.0));
    const Complex drive_q =
        ctx.t_BM * std::conj(dA_in_minus) * std::exp(Complex(0, -(wd + wf) * L / 2.0));
    const auto resp = ctx.respond(lu, M, drive_p, drive_q);
    out.near_singular[i] = resp.near_singular;
    out.delta_a_p.col(i) = resp.da.head(dim);
    out.delta_a_q_conj.col(i) = resp.da.tail(dim);

    // M_IO from the two resolvent columns at the drive slots.
    const auto colp = ctx.respond(lu, M, 1.0, 0.0);
    const auto colq = ctx.respond(lu, M, 0.0, 1.0);
    Matrix2cd Dtilde;
    Dtilde << colp.da(ctx.p(ctx.slot_d1)), colq.da(ctx.p(ctx.slot_d1)),
        colp.da(ctx.q(ctx.slot_d1)), colq.da(ctx.q(ctx.slot_d1));
    const Complex half_up = std::exp(Complex(0, -wd * L / 2.0));
    Matrix2cd conj_phase = Matrix2cd::Zero();
    conj_phase(0, 0) = half_up;
    conj_phase(1, 1) = std::conj(half_up);
    Matrix2cd m = ctx.t_BM * ctx.t_BM * std::exp(Complex(0, -wf * L)) *
                      (conj_phase * Dtilde * conj_phase.inverse()) -
                  Matrix2cd::Identity();
    m = inv_ir * (Eigen::Vector2cd(1.0, -1.0).asDiagonal() * m);
    out.M_io[i] = m;
    out.S_plus(i) = std::abs(m(0, 0));
    out.S_minus(i) = std::abs(m(1, 0));
  }
  return out;
}

}  // namespace optnet
