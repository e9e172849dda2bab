#include "optnet/assembly.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace optnet {

namespace {

// Amplitude loss factor for one row of S0. Elements traversed per network
// step: 2 beamsplitters (node passage), 1 fiber segment, and on horizontal
// rows 1 birefringent triple. Each element transmits sqrt(loss_eta) in
// amplitude.
double row_loss(Dir s, double loss_eta) {
  if (loss_eta == 1.0) return 1.0;
  const int elements = (s == Dir::R || s == Dir::L) ? 4 : 3;
  return std::pow(loss_eta, 0.5 * elements);
}

// Cumulative birefringent phases per row so that the flux through the
// plaquette between rows n and n+1 is theta0 + delta_{n+1}. With zero
// disorder this is the uniform n*theta0 ladder.
std::vector<double> row_phases(int ny, double theta0, const std::vector<double>& delta) {
  std::vector<double> phi(ny + 1, 0.0);
  for (int n = 1; n <= ny; ++n)
    phi[n] = phi[n - 1] + theta0 + (delta.empty() ? 0.0 : delta[n - 1]);
  return phi;
}

struct Imperfections {
  // delta[f][j]: flux deviation of plaquette row-gap j in fiber column f.
  std::vector<std::vector<double>> delta;
  double loss_eta = 1.0;
};

Imperfections draw_imperfections(const NetworkConfig& config, int fiber_columns) {
  Imperfections imp;
  imp.loss_eta = config.loss_eta;
  imp.delta.assign(fiber_columns, std::vector<double>(config.Ny, 0.0));
  if (config.disorder_delta > 0.0) {
    std::mt19937_64 rng(config.rng_seed);
    std::uniform_real_distribution<double> u(-config.disorder_delta, config.disorder_delta);
    for (int f = 0; f < fiber_columns; ++f)
      for (int j = 0; j < config.Ny; ++j)
        imp.delta[f][j] = u(rng);
  }
  return imp;
}

LinearAssembly build_reduced(const NetworkConfig& config, Sigma sector, double kx,
                             const Imperfections& imp) {
  const int ny = config.Ny;
  const IndexMap map(ny);
  const int dim = map.size();
  const NodeSMatrix node = node_smatrix(config.r_bs);
  const double sg = sigma_value(sector);

  const std::vector<double> phi = row_phases(ny, config.theta0, imp.delta.empty()
                                                                    ? std::vector<double>{}
                                                                    : imp.delta[0]);

  MatrixC s0 = MatrixC::Zero(dim, dim);
  for (int n = 1; n <= ny; ++n) {
    Complex row_phase[4];
    row_phase[0] = std::exp(Complex(0, -kx - sg * phi[n])) * row_loss(Dir::R, imp.loss_eta);
    row_phase[1] = Complex(row_loss(Dir::U, imp.loss_eta));
    row_phase[2] = std::exp(Complex(0, kx + sg * phi[n])) * row_loss(Dir::L, imp.loss_eta);
    row_phase[3] = Complex(row_loss(Dir::D, imp.loss_eta));
    for (int si = 0; si < 4; ++si)
      for (int sj = 0; sj < 4; ++sj) {
        const Complex v = node.matrix(si, sj);
        if (v != Complex(0, 0))
          s0(map.at(kDirs[si], n), map.at(kDirs[sj], n)) = row_phase[si] * v;
      }
  }

  // Shift permutation: (T a)_{r,n} = a_{r,n}, (T a)_{l,n} = a_{l,n},
  // (T a)_{u,n} = a_{u,n-1}, (T a)_{d,n} = a_{d,n+1}, with edge closure.
  std::vector<int> src(dim);
  for (int n = 1; n <= ny; ++n) {
    src[map.at(Dir::R, n)] = map.at(Dir::R, n);
    src[map.at(Dir::L, n)] = map.at(Dir::L, n);
    if (n > 1) {
      src[map.at(Dir::U, n)] = map.at(Dir::U, n - 1);
    } else {
      src[map.at(Dir::U, 1)] = (config.geometry == Geometry::Torus) ? map.at(Dir::U, ny)
                                                                    : map.at(Dir::D, 1);
    }
    if (n < ny) {
      src[map.at(Dir::D, n)] = map.at(Dir::D, n + 1);
    } else {
      src[map.at(Dir::D, ny)] = (config.geometry == Geometry::Torus) ? map.at(Dir::D, 1)
                                                                     : map.at(Dir::U, ny);
    }
  }

  LinearAssembly out;
  out.S0 = std::move(s0);
  out.T = MatrixC::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) out.T(i, src[i]) = 1.0;
  out.shift_source = std::move(src);
  out.map = map;
  out.kx = kx;
  out.sector = sector;
  out.lossy = imp.loss_eta < 1.0;
  out.geometry = config.geometry;
  out.config = config;
  return out;
}

LinearAssembly build_plane(const NetworkConfig& config, Sigma sector, const Imperfections& imp) {
  const int ny = config.Ny;
  const int nx = config.Nx;
  const IndexMap map(ny, nx);
  const int dim = map.size();
  const NodeSMatrix node = node_smatrix(config.r_bs);
  const double sg = sigma_value(sector);

  // Fiber column f = 0..Nx: f = m is the fiber to the right of node column m
  // (f = 0 and f = Nx are the boundary mirror loops).
  std::vector<std::vector<double>> phi(nx + 1);
  for (int f = 0; f <= nx; ++f)
    phi[f] = row_phases(ny, config.theta0,
                        imp.delta.empty() ? std::vector<double>{} : imp.delta[f]);

  MatrixC s0 = MatrixC::Zero(dim, dim);
  for (int m = 1; m <= nx; ++m)
    for (int n = 1; n <= ny; ++n) {
      Complex row_phase[4];
      row_phase[0] = std::exp(Complex(0, -sg * phi[m][n])) * row_loss(Dir::R, imp.loss_eta);
      row_phase[1] = Complex(row_loss(Dir::U, imp.loss_eta));
      row_phase[2] = std::exp(Complex(0, sg * phi[m - 1][n])) * row_loss(Dir::L, imp.loss_eta);
      row_phase[3] = Complex(row_loss(Dir::D, imp.loss_eta));
      for (int si = 0; si < 4; ++si)
        for (int sj = 0; sj < 4; ++sj) {
          const Complex v = node.matrix(si, sj);
          if (v != Complex(0, 0))
            s0(map.at(kDirs[si], n, m), map.at(kDirs[sj], n, m)) = row_phase[si] * v;
        }
    }

  // Shifts with mirror closure: a_{r,n,Nx+1} = a_{l,n,Nx}, a_{l,n,0} = a_{r,n,1},
  // a_{u,0,m} = a_{d,1,m}, a_{d,Ny+1,m} = a_{u,Ny,m}.
  std::vector<int> src(dim);
  for (int m = 1; m <= nx; ++m)
    for (int n = 1; n <= ny; ++n) {
      src[map.at(Dir::R, n, m)] =
          (m < nx) ? map.at(Dir::R, n, m + 1) : map.at(Dir::L, n, nx);
      src[map.at(Dir::L, n, m)] =
          (m > 1) ? map.at(Dir::L, n, m - 1) : map.at(Dir::R, n, 1);
      src[map.at(Dir::U, n, m)] =
          (n > 1) ? map.at(Dir::U, n - 1, m) : map.at(Dir::D, 1, m);
      src[map.at(Dir::D, n, m)] =
          (n < ny) ? map.at(Dir::D, n + 1, m) : map.at(Dir::U, ny, m);
    }

  LinearAssembly out;
  out.S0 = std::move(s0);
  out.T = MatrixC::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) out.T(i, src[i]) = 1.0;
  out.shift_source = std::move(src);
  out.map = map;
  out.kx = 0.0;
  out.sector = sector;
  out.lossy = imp.loss_eta < 1.0;
  out.geometry = Geometry::Plane;
  out.config = config;
  return out;
}

}  // namespace

MatrixC LinearAssembly::step_operator() const {
  const int n = dim();
  std::vector<int> inv(n, -1);
  for (int i = 0; i < n; ++i) inv[shift_source[i]] = i;
  MatrixC out(n, n);
  for (int j = 0; j < n; ++j) out.row(j) = S0.row(inv[j]);
  return out;
}

LinearAssembly assemble_closed(const NetworkConfig& config, Sigma sector, double kx) {
  config.validate();
  if (config.geometry == Geometry::Plane)
    throw std::domain_error("assemble_closed: use assemble_plane for Plane geometry");
  return build_reduced(config, sector, kx, Imperfections{});
}

LinearAssembly assemble_plane(const NetworkConfig& config, Sigma sector) {
  config.validate();
  if (config.geometry != Geometry::Plane)
    throw std::domain_error("assemble_plane: geometry must be Plane");
  return build_plane(config, sector, Imperfections{});
}

LinearAssembly apply_imperfections(const LinearAssembly& assembly, const NetworkConfig& config) {
  config.validate();
  if (config.disorder_delta == 0.0 && config.loss_eta == 1.0) return assembly;

  if (assembly.geometry == Geometry::Plane) {
    const Imperfections imp = draw_imperfections(config, config.Nx + 1);
    return build_plane(config, assembly.sector, imp);
  }
  const Imperfections imp = draw_imperfections(config, 1);
  return build_reduced(config, assembly.sector, assembly.kx, imp);
}

std::vector<double> kx_grid(int nx) {
  std::vector<double> grid(nx);
  for (int j = 0; j < nx; ++j) grid[j] = -kPi + 2.0 * kPi * j / nx;
  return grid;
}

}  // namespace optnet
