#pragma once

#include <Eigen/Dense>

#include "optnet/types.hpp"

namespace optnet {

// 4x4 scattering matrix of one node in the (r,u,l,d) input basis.
// Zero diagonal: a node never reflects back into the port the light came from.
struct NodeSMatrix {
  double r_node = 0.0;
  double t_node = 0.0;
  Eigen::Matrix4cd matrix;
};

// Effective node coefficients from the beamsplitter reflection:
//   r_node = 2 r_bs / (1 + r_bs^2),  t_node = (1 - r_bs^2) / (1 + r_bs^2),
// so r_node^2 + t_node^2 = 1 for every r_bs in [0,1].
NodeSMatrix node_smatrix(double r_bs);

}  // namespace optnet
