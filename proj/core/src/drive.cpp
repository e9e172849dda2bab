#include "optnet/drive.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <stdexcept>

namespace optnet {

namespace {

MatrixC scaled_step(const LinearAssembly& assembly, double r_bm,
                    const std::vector<int>& mirror_rows) {
  MatrixC A = assembly.step_operator();
  for (int row : mirror_rows) A.row(row) *= kI * r_bm;
  return A;
}

Complex drive_phase(double omega_d, double L) { return std::exp(Complex(0, -omega_d * L / 2)); }

}  // namespace

DrivenCylinderSolver::DrivenCylinderSolver(const NetworkConfig& config, Sigma sector, double kx)
    : config_(config), kx_(kx) {
  if (config.geometry != Geometry::Cylinder)
    throw std::domain_error("DrivenCylinderSolver: geometry must be Cylinder");
  if (config.r_BM >= 1.0)
    throw std::domain_error("DrivenCylinderSolver: r_BM must be < 1 for a driven network");

  LinearAssembly assembly = assemble_closed(config, sector, kx);
  if (!config.ideal()) assembly = apply_imperfections(assembly, config);
  slot_ = assembly.map.at(Dir::D, 1);
  t_bm_ = std::sqrt(1.0 - config.r_BM * config.r_BM);
  step_ = assembly.step_operator();
  B_ = step_;
  B_.row(slot_) *= kI * config.r_BM;

  Eigen::ComplexEigenSolver<MatrixC> eig(B_, true);
  eig_ok_ = eig.info() == Eigen::Success;
  if (eig_ok_) {
    vecs_ = eig.eigenvectors();
    vals_ = eig.eigenvalues();
    vlu_.compute(vecs_);
  }
}

DrivenSolution DrivenCylinderSolver::solve(double omega_d, Complex A_in) const {
  const int dim = static_cast<int>(B_.rows());
  const double L = config_.L;
  const Complex mu = std::exp(Complex(0, -omega_d * L));
  AmplitudeVector rhs = AmplitudeVector::Zero(dim);
  rhs(slot_) = -t_bm_ * drive_phase(omega_d, L) * A_in;

  DrivenSolution sol;
  bool solved = false;
  if (eig_ok_) {
    AmplitudeVector y = vlu_.solve(rhs);
    for (int i = 0; i < dim; ++i) y(i) /= (vals_(i) - mu);
    sol.amplitudes = vecs_ * y;
    const double resid = (B_ * sol.amplitudes - mu * sol.amplitudes - rhs).norm();
    solved = resid < 1e-9 * (1.0 + sol.amplitudes.norm());
  }
  if (!solved) {
    MatrixC M = B_ - mu * MatrixC::Identity(dim, dim);
    Eigen::PartialPivLU<MatrixC> lu(M);
    sol.amplitudes = lu.solve(rhs);
    sol.near_singular =
        !((M * sol.amplitudes - rhs).norm() < 1e-8 * (1.0 + sol.amplitudes.norm()));
  }
  sol.omega_d = omega_d;
  sol.kx = kx_;
  sol.A_in = A_in;
  const Complex b_u0 = step_.row(slot_) * sol.amplitudes;
  sol.A_out = t_bm_ * std::exp(Complex(0, omega_d * L / 2.0)) * b_u0 +
              kI * config_.r_BM * A_in;
  return sol;
}

std::vector<DrivenCylinderSolver::Resonance> DrivenCylinderSolver::resonances(double lo,
                                                                              double hi) const {
  std::vector<Resonance> out;
  if (!eig_ok_) return out;
  const int dim = static_cast<int>(B_.rows());
  AmplitudeVector e = AmplitudeVector::Zero(dim);
  e(slot_) = 1.0;
  const AmplitudeVector weights_in = vlu_.solve(e);  // V^{-1} e_slot
  const double L = config_.L;

  double max_weight = 0.0;
  std::vector<double> weight(dim);
  for (int j = 0; j < dim; ++j) {
    const Complex out_coupling = step_.row(slot_) * vecs_.col(j);
    weight[j] = std::abs(out_coupling) * std::abs(weights_in(j));
    max_weight = std::max(max_weight, weight[j]);
  }
  for (int j = 0; j < dim; ++j) {
    const Complex z = fold_energy(kI * std::log(vals_(j)) / L, L);
    if (!(z.imag() < -1e-14)) continue;           // no decay, no pole
    if (weight[j] < 1e-12 * max_weight) continue;  // decoupled from the port
    // Periodic images across the requested window.
    const double period = 2.0 * kPi / L;
    const double n_lo = std::floor((lo - z.real()) / period) - 1;
    const double n_hi = std::ceil((hi - z.real()) / period) + 1;
    for (double n = n_lo; n <= n_hi; ++n) {
      const double re = z.real() + n * period;
      if (re > lo - 2.0 * period && re < hi + 2.0 * period)
        out.push_back({re, z.imag()});
    }
  }
  return out;
}

DrivenSolution solve_driven_cylinder(const NetworkConfig& config, Sigma sector, double kx,
                                     double omega_d, Complex A_in) {
  if (config.geometry != Geometry::Cylinder)
    throw std::domain_error("solve_driven_cylinder: geometry must be Cylinder");
  if (config.r_BM >= 1.0)
    throw std::domain_error("solve_driven_cylinder: r_BM must be < 1 for a driven network");

  LinearAssembly assembly = assemble_closed(config, sector, kx);
  if (!config.ideal()) assembly = apply_imperfections(assembly, config);

  const int dim = assembly.dim();
  const int slot = assembly.map.at(Dir::D, 1);
  const double L = config.L;
  const double t = std::sqrt(1.0 - config.r_BM * config.r_BM);

  MatrixC M = scaled_step(assembly, config.r_BM, {slot});
  M -= std::exp(Complex(0, -omega_d * L)) * MatrixC::Identity(dim, dim);

  AmplitudeVector rhs = AmplitudeVector::Zero(dim);
  rhs(slot) = -t * drive_phase(omega_d, L) * A_in;

  Eigen::PartialPivLU<MatrixC> lu(M);
  DrivenSolution sol;
  sol.amplitudes = lu.solve(rhs);
  const double resid = (M * sol.amplitudes - rhs).norm();
  sol.near_singular = !(resid < 1e-8 * (1.0 + sol.amplitudes.norm()));
  sol.omega_d = omega_d;
  sol.kx = kx;
  sol.A_in = A_in;
  const Complex b_u0 = assembly.step_operator().row(slot) * sol.amplitudes;
  sol.A_out = t * std::exp(Complex(0, omega_d * L / 2.0)) * b_u0 + kI * config.r_BM * A_in;
  return sol;
}

std::vector<DrivenSolution> driven_cylinder_scan(const NetworkConfig& config, Sigma sector,
                                                 double kx, const std::vector<double>& omega_grid,
                                                 Complex A_in) {
  const DrivenCylinderSolver solver(config, sector, kx);
  std::vector<DrivenSolution> out;
  out.reserve(omega_grid.size());
  for (double w : omega_grid) out.push_back(solver.solve(w, A_in));
  return out;
}

namespace {

double wrap_pi(double x) {
  double y = std::remainder(x, 2.0 * kPi);
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

// Blaschke phase of all known resonance poles: each pole below the real
// axis advances the reflection phase by 2 pi as omega sweeps across it.
// Splitting this part off analytically leaves a smooth background whose
// minimal-jump unwrap is safe; windings of resonances far narrower than
// the grid step would otherwise be lost silently.
class PoleLedger {
 public:
  explicit PoleLedger(std::vector<DrivenCylinderSolver::Resonance> poles)
      : poles_(std::move(poles)) {}

  double phase(double omega) const {
    double s = 0.0;
    for (const auto& p : poles_) s += 2.0 * std::atan((omega - p.re) / (-p.im));
    return s;
  }

 private:
  std::vector<DrivenCylinderSolver::Resonance> poles_;
};

// Residual (background) phase increment with bisection as a safety net.
double background_increment(const DrivenCylinderSolver& solver, const PoleLedger& ledger,
                            Complex A_in, double w0, double w1, double b0, double b1, int depth,
                            bool* warn) {
  const double jump = wrap_pi(b1 - b0);
  if (std::abs(jump) < 0.5 * kPi) return jump;
  if (depth >= 36) {
    *warn = true;
    return jump;
  }
  const double wm = 0.5 * (w0 + w1);
  const double bm =
      wrap_pi(std::arg(solver.solve(wm, A_in).A_out / A_in) - ledger.phase(wm));
  return background_increment(solver, ledger, A_in, w0, wm, b0, bm, depth + 1, warn) +
         background_increment(solver, ledger, A_in, wm, w1, bm, b1, depth + 1, warn);
}

}  // namespace

PhaseScan reflection_phase_scan(const NetworkConfig& config, Sigma sector, double kx,
                                const std::vector<double>& omega_grid, Complex A_in) {
  if (omega_grid.size() < 3)
    throw std::domain_error("reflection_phase_scan: grid must have at least 3 points");
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    if (!(omega_grid[i] > omega_grid[i - 1]))
      throw std::domain_error("reflection_phase_scan: omega grid must be strictly increasing");

  const DrivenCylinderSolver solver(config, sector, kx);
  const PoleLedger ledger(solver.resonances(omega_grid.front(), omega_grid.back()));

  PhaseScan scan;
  scan.points.resize(omega_grid.size());
  const double window_offset = kPi + resonance_phase_shift(config.r_BM);

  std::vector<double> background(omega_grid.size());
  for (std::size_t i = 0; i < omega_grid.size(); ++i) {
    const DrivenSolution sol = solver.solve(omega_grid[i], A_in);
    scan.points[i].omega_d = omega_grid[i];
    scan.points[i].A_out = sol.A_out;
    background[i] = wrap_pi(std::arg(sol.A_out / A_in) - ledger.phase(omega_grid[i]));
  }

  double acc = background[0];
  scan.points[0].delta = acc + ledger.phase(omega_grid[0]);
  scan.points[0].delta_windowed = fold_phase(scan.points[0].delta - window_offset);
  for (std::size_t i = 1; i < omega_grid.size(); ++i) {
    bool warn = false;
    acc += background_increment(solver, ledger, A_in, omega_grid[i - 1], omega_grid[i],
                                background[i - 1], background[i], 0, &warn);
    if (warn) scan.unwrap_warning = true;
    scan.points[i].delta = acc + ledger.phase(omega_grid[i]);
    scan.points[i].delta_windowed = fold_phase(scan.points[i].delta - window_offset);
  }
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const std::size_t lo = (i == 0) ? 0 : i - 1;
    const std::size_t hi = (i + 1 == scan.points.size()) ? i : i + 1;
    scan.points[i].ddelta_domega = (scan.points[hi].delta - scan.points[lo].delta) /
                                   (scan.points[hi].omega_d - scan.points[lo].omega_d);
  }
  return scan;
}

DrivenSolution solve_driven_plane(const NetworkConfig& config, Sigma sector, double omega_d,
                                  Complex A_in) {
  const auto scan = driven_plane_scan(config, sector, {omega_d}, A_in);
  return scan.front();
}

std::vector<DrivenSolution> driven_plane_scan(const NetworkConfig& config, Sigma sector,
                                              const std::vector<double>& omega_grid,
                                              Complex A_in) {
  if (config.geometry != Geometry::Plane)
    throw std::domain_error("driven_plane_scan: geometry must be Plane");

  LinearAssembly assembly = assemble_plane(config, sector);
  if (!config.ideal()) assembly = apply_imperfections(assembly, config);

  const int dim = assembly.dim();
  const IndexMap& map = assembly.map;
  const int in_slot = map.at(Dir::R, 1, 1);                   // set by the (1,1) mirror
  const int out_slot = map.at(Dir::L, config.Ny, config.Nx);  // set by the (Ny,Nx) mirror
  const double L = config.L;
  const double r = config.r_BM;
  const double t = std::sqrt(1.0 - r * r);

  const MatrixC B = scaled_step(assembly, r, {in_slot, out_slot});
  Eigen::ComplexEigenSolver<MatrixC> eig(B, true);
  const bool eig_ok = eig.info() == Eigen::Success;
  Eigen::PartialPivLU<MatrixC> vlu;
  if (eig_ok) vlu.compute(eig.eigenvectors());

  const MatrixC step = assembly.step_operator();

  std::vector<DrivenSolution> out;
  out.reserve(omega_grid.size());
  for (double w : omega_grid) {
    const Complex mu = std::exp(Complex(0, -w * L));
    AmplitudeVector rhs = AmplitudeVector::Zero(dim);
    rhs(in_slot) = -t * drive_phase(w, L) * A_in;

    DrivenSolution sol;
    bool solved = false;
    if (eig_ok) {
      AmplitudeVector y = vlu.solve(rhs);
      for (int i = 0; i < dim; ++i) y(i) /= (eig.eigenvalues()(i) - mu);
      sol.amplitudes = eig.eigenvectors() * y;
      const double resid = (B * sol.amplitudes - mu * sol.amplitudes - rhs).norm();
      solved = resid < 1e-9 * (1.0 + sol.amplitudes.norm());
    }
    if (!solved) {
      MatrixC M = B - mu * MatrixC::Identity(dim, dim);
      Eigen::PartialPivLU<MatrixC> lu(M);
      sol.amplitudes = lu.solve(rhs);
      sol.near_singular =
          !((M * sol.amplitudes - rhs).norm() < 1e-8 * (1.0 + sol.amplitudes.norm()));
    }
    sol.omega_d = w;
    sol.A_in = A_in;
    // Reflection through the injection mirror, transmission through the far
    // corner mirror; assembled from node outputs so r_BM = 0 stays finite.
    const Complex b_l10 = step.row(in_slot) * sol.amplitudes;
    const Complex b_rout = step.row(out_slot) * sol.amplitudes;
    const Complex up = std::exp(Complex(0, w * L / 2.0));
    sol.A_R = t * up * b_l10 + kI * r * A_in;
    sol.A_T = t * up * b_rout;
    out.push_back(std::move(sol));
  }
  return out;
}

}  // namespace optnet
