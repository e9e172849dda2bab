#include "optnet/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "optnet/parallel.hpp"

namespace optnet {

namespace {

// Distance of lambda from the branch cut of the principal log (negative
// real axis), relative to |lambda|.
bool near_branch_cut(Complex lambda, double tol = 1e-6) {
  const double a = std::abs(std::abs(std::arg(lambda)) - kPi);
  return a < tol;
}

}  // namespace

std::pair<double, double> edge_weight(const AmplitudeVector& v, const IndexMap& map, int rows) {
  if (rows < 1 || rows > map.ny()) throw std::domain_error("edge_weight: rows out of range");
  const double norm2 = v.squaredNorm();
  if (norm2 == 0.0) return {0.0, 0.0};
  double top = 0.0, bottom = 0.0;
  for (Dir s : kDirs)
    for (int m = 1; m <= map.nx(); ++m)
      for (int r = 1; r <= rows; ++r) {
        top += std::norm(v[map.at(s, r, m)]);
        bottom += std::norm(v[map.at(s, map.ny() + 1 - r, m)]);
      }
  return {top / norm2, bottom / norm2};
}

SpectrumResult closed_spectrum(const LinearAssembly& assembly, double L) {
  const MatrixC A = assembly.step_operator();
  Eigen::ComplexEigenSolver<MatrixC> solver(A, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("closed_spectrum: eigensolver failed");

  SpectrumResult out;
  const int n = assembly.dim();

  // Flag a (numerically) defective eigenvector basis via a cheap condition
  // estimate: ||V||_1 * ||V^{-1}||_1 from an LU factorization.
  {
    Eigen::PartialPivLU<MatrixC> lu(solver.eigenvectors());
    const MatrixC vinv = lu.inverse();
    const double norm_v = solver.eigenvectors().cwiseAbs().colwise().sum().maxCoeff();
    const double norm_vi = vinv.cwiseAbs().colwise().sum().maxCoeff();
    out.schur_fallback = !(norm_v * norm_vi < 1e10);
  }

  out.modes.reserve(n);
  const int edge_rows = std::min(2, assembly.map.ny());
  for (int j = 0; j < n; ++j) {
    const Complex lambda = solver.eigenvalues()(j);
    if (near_branch_cut(lambda)) out.branch_cut_warning = true;
    EigenMode mode;
    // lambda = e^{-i E L}: Re(E) = -arg(lambda)/L, Im(E) = ln|lambda|/L.
    mode.energy = fold_energy(kI * std::log(lambda) / L, L);
    mode.vector = solver.eigenvectors().col(j).normalized();
    mode.sector = assembly.sector;
    mode.kx = assembly.kx;
    const auto [top, bottom] = edge_weight(mode.vector, assembly.map, edge_rows);
    mode.edge_weight_top = top;
    mode.edge_weight_bottom = bottom;
    out.modes.push_back(std::move(mode));
  }
  std::sort(out.modes.begin(), out.modes.end(),
            [](const EigenMode& a, const EigenMode& b) { return a.energy.real() < b.energy.real(); });
  return out;
}

MatrixC effective_hamiltonian(const LinearAssembly& assembly, double L, bool* branch_warning) {
  if (assembly.lossy)
    throw std::domain_error("effective_hamiltonian: requires a lossless assembly");
  const MatrixC A = assembly.step_operator();
  Eigen::ComplexSchur<MatrixC> schur(A, /*computeU=*/true);
  if (schur.info() != Eigen::Success)
    throw std::runtime_error("effective_hamiltonian: Schur decomposition failed");

  const int n = assembly.dim();
  const MatrixC& Ts = schur.matrixT();
  // For unitary input the Schur factor is diagonal up to roundoff.
  double offdiag = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) offdiag = std::max(offdiag, std::abs(Ts(i, j)));
  if (offdiag > 1e-8)
    throw std::runtime_error("effective_hamiltonian: input is not normal (unitary) to tolerance");

  bool warn = false;
  Eigen::VectorXcd logdiag(n);
  for (int i = 0; i < n; ++i) {
    const Complex lambda = Ts(i, i);
    if (near_branch_cut(lambda)) warn = true;
    // i ln(lambda)/L with the same fold convention as closed_spectrum.
    logdiag(i) = fold_energy(kI * std::log(lambda) / L, L);
  }
  if (branch_warning) *branch_warning = warn;
  return schur.matrixU() * logdiag.asDiagonal() * schur.matrixU().adjoint();
}

std::vector<GapInterval> find_gaps(const std::vector<double>& energies, double L,
                                   double tolerance) {
  std::vector<GapInterval> gaps;
  if (energies.empty()) return gaps;
  std::vector<double> e = energies;
  std::sort(e.begin(), e.end());

  const double period = 2.0 * kPi / L;
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    const double w = e[i + 1] - e[i];
    if (w > tolerance) gaps.push_back({e[i], e[i + 1]});
  }
  // Wrap-around arc from the largest value through +pi/L to the smallest.
  const double wrap = (e.front() + period) - e.back();
  if (wrap > tolerance) gaps.push_back({e.back(), e.front() + period});
  return gaps;
}

std::vector<GapInterval> find_gaps(const BandStructure& band, double L, double tolerance,
                                   std::optional<double> edge_filter) {
  std::vector<double> all;
  for (const auto& per_kx : band.modes)
    for (const auto& mode : per_kx) {
      if (edge_filter &&
          std::max(mode.edge_weight_top, mode.edge_weight_bottom) > *edge_filter)
        continue;
      all.push_back(mode.energy.real());
    }
  return find_gaps(all, L, tolerance);
}

BandStructure band_structure(const NetworkConfig& config, Sigma sector,
                             const std::vector<double>& kx_values,
                             std::optional<double> edge_filter) {
  if (kx_values.empty()) throw std::domain_error("band_structure: empty kx grid");
  if (config.geometry == Geometry::Plane)
    throw std::domain_error("band_structure: requires torus or cylinder geometry");

  BandStructure band;
  band.kx_values = kx_values;
  band.sector = sector;
  band.modes.resize(kx_values.size());
  parallel_for(kx_values.size(), [&](std::size_t i) {
    LinearAssembly assembly = assemble_closed(config, sector, kx_values[i]);
    if (!config.ideal()) assembly = apply_imperfections(assembly, config);
    band.modes[i] = closed_spectrum(assembly, config.L).modes;
  });
  band.gaps = find_gaps(band, config.L, default_gap_tolerance(config.L), edge_filter);
  return band;
}

}  // namespace optnet
