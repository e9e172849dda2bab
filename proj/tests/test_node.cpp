#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "optnet/node.hpp"

using namespace optnet;

TEST_SUITE_BEGIN("node");

TEST_CASE("paper operating point gives r = t = 1/sqrt(2)") {
  const NodeSMatrix n = node_smatrix(kDefaultRbs);
  CHECK(n.r_node == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(n.t_node == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("limiting cases") {
  const NodeSMatrix pass = node_smatrix(0.0);
  CHECK(pass.r_node == 0.0);
  CHECK(pass.t_node == 1.0);
  CHECK(std::abs(pass.matrix(0, 3) - Complex(1, 0)) < 1e-15);  // b_r = a_d
  CHECK(std::abs(pass.matrix(1, 2) - Complex(1, 0)) < 1e-15);  // b_u = a_l

  const NodeSMatrix cross = node_smatrix(1.0);
  CHECK(cross.r_node == doctest::Approx(1.0));
  CHECK(cross.t_node == doctest::Approx(0.0));
  CHECK(std::abs(cross.matrix(0, 1) - Complex(0, 1)) < 1e-15);  // b_r = i a_u
}

TEST_CASE("unitarity and zero diagonal over an r_bs grid") {
  for (int i = 0; i <= 100; ++i) {
    const double r_bs = i / 100.0;
    const NodeSMatrix n = node_smatrix(r_bs);
    CHECK(n.r_node * n.r_node + n.t_node * n.t_node == doctest::Approx(1.0).epsilon(1e-13));
    const Eigen::Matrix4cd err =
        n.matrix.adjoint() * n.matrix - Eigen::Matrix4cd::Identity();
    CHECK(err.cwiseAbs().maxCoeff() < 1e-14);
    for (int d = 0; d < 4; ++d) CHECK(n.matrix(d, d) == Complex(0, 0));
  }
}

TEST_CASE("out of range r_bs throws") {
  CHECK_THROWS_AS(node_smatrix(-0.1), std::domain_error);
  CHECK_THROWS_AS(node_smatrix(1.1), std::domain_error);
}

// Build the two-polarization node from the beamsplitter relations with the
// sigma_z Jones factors, eliminate the inner-cavity amplitudes numerically,
// and check the result block-diagonalizes in the circular basis into two
// copies of the single-sector node matrix.
TEST_CASE("polarization sectors decouple at one node") {
  const double r = 0.37;
  const double t = std::sqrt(1.0 - r * r);
  const Complex ir(0, r);

  Eigen::Matrix2cd sz;
  sz << 1, 0, 0, -1;
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();

  // Unknowns: c = (c_r, c_u, c_l, c_d) in (H,V), 8 components. For a given
  // 8-component input a, solve the four 2x2-block equations:
  //   c_r = t sz a_r + i r sz c_u
  //   c_d = i r sz c_l + t a_d
  //   c_l = i r sz c_d + t sz a_u
  //   c_u = t a_l + i r sz c_r
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(8, 8);
  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(8, 8);  // coefficients on a
  const auto blk = [](int i) { return 2 * i; };
  // c_r row
  M.block<2, 2>(blk(0), blk(0)) = id;
  M.block<2, 2>(blk(0), blk(1)) = -ir * sz;
  rhs.block<2, 2>(blk(0), 2 * 0) = t * sz;  // a_r
  // c_u row
  M.block<2, 2>(blk(1), blk(1)) = id;
  M.block<2, 2>(blk(1), blk(0)) = -ir * sz;
  rhs.block<2, 2>(blk(1), 2 * 2) = t * id;  // a_l
  // c_l row
  M.block<2, 2>(blk(2), blk(2)) = id;
  M.block<2, 2>(blk(2), blk(3)) = -ir * sz;
  rhs.block<2, 2>(blk(2), 2 * 1) = t * sz;  // a_u
  // c_d row
  M.block<2, 2>(blk(3), blk(3)) = id;
  M.block<2, 2>(blk(3), blk(2)) = -ir * sz;
  rhs.block<2, 2>(blk(3), 2 * 3) = t * id;  // a_d

  const Eigen::MatrixXcd c_of_a = M.partialPivLu().solve(rhs);

  // Outputs: b_r = t c_d + i r a_u ; b_u = i r a_r + t c_u ;
  //          b_l = t sz c_l + i r a_d ; b_d = i r a_l + t sz c_r.
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(8, 8);
  S.block<2, 8>(0, 0) = t * c_of_a.block<2, 8>(blk(3), 0);
  S.block<2, 2>(0, 2 * 1) += ir * id;
  S.block<2, 8>(2, 0) = t * c_of_a.block<2, 8>(blk(1), 0);
  S.block<2, 2>(2, 2 * 0) += ir * id;
  S.block<2, 8>(4, 0) = t * sz * c_of_a.block<2, 8>(blk(2), 0);
  S.block<2, 2>(4, 2 * 3) += ir * id;
  S.block<2, 8>(6, 0) = t * sz * c_of_a.block<2, 8>(blk(0), 0);
  S.block<2, 2>(6, 2 * 2) += ir * id;

  // Circular basis per port: columns (|+>, |->) = ((1, i), (1, -i))/sqrt(2).
  Eigen::Matrix2cd u;
  u << 1, 1, Complex(0, 1), Complex(0, -1);
  u /= std::sqrt(2.0);
  Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(8, 8);
  for (int p = 0; p < 4; ++p) U.block<2, 2>(2 * p, 2 * p) = u;
  const Eigen::MatrixXcd Sc = U.inverse() * S * U;

  // No cross coupling between + and - components anywhere.
  double cross = 0.0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if ((i % 2) != (j % 2)) cross = std::max(cross, std::abs(Sc(i, j)));
  CHECK(cross < 1e-13);

  // Each sector equals the effective single-polarization node matrix.
  const NodeSMatrix node = node_smatrix(r);
  for (int sec = 0; sec < 2; ++sec) {
    Eigen::Matrix4cd block;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) block(i, j) = Sc(2 * i + sec, 2 * j + sec);
    CHECK((block - node.matrix).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_SUITE_END();
