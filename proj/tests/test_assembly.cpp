#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "optnet/assembly.hpp"
#include "support/oracles.hpp"

using namespace optnet;

namespace {

double unitarity_defect(const MatrixC& m) {
  return (m.adjoint() * m - MatrixC::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

NetworkConfig base_config(int nx, int ny, Geometry g, double theta0) {
  NetworkConfig c;
  c.Nx = nx;
  c.Ny = ny;
  c.geometry = g;
  c.theta0 = theta0;
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("assembly");

TEST_CASE("index map round trip") {
  const IndexMap map(5, 3);
  for (int flat = 0; flat < map.size(); ++flat) {
    const auto site = map.site(flat);
    CHECK(map.at(site.s, site.n, site.m) == flat);
  }
  // d-block first element in the cylinder basis sits at flat 3*Ny (0-based).
  const IndexMap cyl(7);
  CHECK(cyl.at(Dir::D, 1) == 3 * 7);
}

TEST_CASE("Ny=1 torus at kx=0 gives unitary S0 and T") {
  auto cfg = base_config(4, 1, Geometry::Torus, 0.0);
  const LinearAssembly a = assemble_closed(cfg, Sigma::Plus, 0.0);
  CHECK(unitarity_defect(a.S0) < 1e-15);
  CHECK(unitarity_defect(a.T) == 0.0);
}

TEST_CASE("cylinder 4-row assembly: eigenvalues on the unit circle") {
  auto cfg = base_config(8, 4, Geometry::Cylinder, kPi / 2);
  const LinearAssembly a = assemble_closed(cfg, Sigma::Plus, 0.26);
  CHECK(a.dim() == 16);
  Eigen::ComplexEigenSolver<MatrixC> eig(a.step_operator(), false);
  for (int i = 0; i < 16; ++i)
    CHECK(std::abs(std::abs(eig.eigenvalues()(i)) - 1.0) < 1e-12);
}

TEST_CASE("unitarity across geometries, sectors and kx") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int ny = 1 + static_cast<int>(u(rng) * 5);
    const int nx = 1 + static_cast<int>(u(rng) * 5);
    const double theta0 = u(rng) * 2 * kPi;
    const double kx = -kPi + 2 * kPi * u(rng);
    const Sigma sec = u(rng) < 0.5 ? Sigma::Plus : Sigma::Minus;
    const int geom = static_cast<int>(u(rng) * 3);
    NetworkConfig cfg = base_config(nx, ny,
                                    geom == 0   ? Geometry::Torus
                                    : geom == 1 ? Geometry::Cylinder
                                                : Geometry::Plane,
                                    theta0);
    cfg.r_bs = u(rng);
    const LinearAssembly a = cfg.geometry == Geometry::Plane
                                 ? assemble_plane(cfg, sec)
                                 : assemble_closed(cfg, sec, kx);
    CHECK(unitarity_defect(a.S0) < 1e-13);
    CHECK(unitarity_defect(a.T) == 0.0);
    CHECK(unitarity_defect(a.step_operator()) < 1e-13);
  }
}

TEST_CASE("Ny=2 torus matches the element-wise oracle") {
  auto cfg = base_config(6, 2, Geometry::Torus, kPi / 2);
  for (double kx : {0.0, 0.7, -1.9}) {
    for (Sigma sec : {Sigma::Plus, Sigma::Minus}) {
      const LinearAssembly a = assemble_closed(cfg, sec, kx);
      const MatrixC oracle =
          test::brute_force_step(2, cfg.theta0, kx, sigma_value(sec), cfg.r_bs, true);
      CHECK((a.step_operator() - oracle).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("closed cylinder matches the element-wise oracle") {
  auto cfg = base_config(6, 3, Geometry::Cylinder, 1.1);
  const LinearAssembly a = assemble_closed(cfg, Sigma::Minus, 0.4);
  const MatrixC oracle = test::brute_force_step(3, 1.1, 0.4, -1, cfg.r_bs, false);
  CHECK((a.step_operator() - oracle).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("plane 2x2 lossless step operator is unitary") {
  auto cfg = base_config(2, 2, Geometry::Plane, kPi / 2);
  const LinearAssembly a = assemble_plane(cfg, Sigma::Plus);
  CHECK(a.dim() == 16);
  CHECK(unitarity_defect(a.step_operator()) < 1e-12);
}

TEST_CASE("imperfections: identity when disabled") {
  auto cfg = base_config(4, 3, Geometry::Cylinder, kPi / 2);
  const LinearAssembly a = assemble_closed(cfg, Sigma::Plus, 0.3);
  const LinearAssembly b = apply_imperfections(a, cfg);
  CHECK((a.S0 - b.S0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.T - b.T).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("imperfections: loss pulls every eigenvalue inside the unit circle") {
  auto cfg = base_config(4, 3, Geometry::Cylinder, kPi / 2);
  cfg.loss_eta = 0.9;
  const LinearAssembly ideal = assemble_closed(cfg, Sigma::Plus, 0.3);
  const LinearAssembly lossy = apply_imperfections(ideal, cfg);
  CHECK(lossy.lossy);
  Eigen::ComplexEigenSolver<MatrixC> eig(lossy.step_operator(), false);
  for (int i = 0; i < lossy.dim(); ++i) CHECK(std::abs(eig.eigenvalues()(i)) < 1.0);
}

TEST_CASE("imperfections: same seed reproduces the assembly exactly") {
  auto cfg = base_config(4, 5, Geometry::Torus, kPi / 2);
  cfg.disorder_delta = 0.2;
  cfg.loss_eta = 0.95;
  cfg.rng_seed = 42;
  const LinearAssembly ideal = assemble_closed(cfg, Sigma::Plus, 0.3);
  const LinearAssembly d1 = apply_imperfections(ideal, cfg);
  const LinearAssembly d2 = apply_imperfections(ideal, cfg);
  CHECK((d1.S0 - d2.S0).cwiseAbs().maxCoeff() == 0.0);
  cfg.rng_seed = 43;
  const LinearAssembly d3 = apply_imperfections(ideal, cfg);
  CHECK((d1.S0 - d3.S0).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("disorder keeps S0 unitary, loss does not") {
  auto cfg = base_config(4, 5, Geometry::Torus, kPi / 2);
  cfg.disorder_delta = 0.2;
  cfg.rng_seed = 9;
  const LinearAssembly ideal = assemble_closed(cfg, Sigma::Plus, -0.4);
  const LinearAssembly dis = apply_imperfections(ideal, cfg);
  CHECK(unitarity_defect(dis.S0) < 1e-13);
}

TEST_CASE("plane geometry guards") {
  auto cfg = base_config(2, 2, Geometry::Plane, 0.0);
  CHECK_THROWS_AS(assemble_closed(cfg, Sigma::Plus, 0.0), std::domain_error);
  cfg.geometry = Geometry::Torus;
  CHECK_THROWS_AS(assemble_plane(cfg, Sigma::Plus), std::domain_error);
}

TEST_SUITE_END();
