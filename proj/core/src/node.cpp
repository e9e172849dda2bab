#include "optnet/node.hpp"

#include <stdexcept>

namespace optnet {

NodeSMatrix node_smatrix(double r_bs) {
  if (r_bs < 0.0 || r_bs > 1.0)
    throw std::domain_error("node_smatrix: r_bs must be in [0,1]");

  NodeSMatrix out;
  const double denom = 1.0 + r_bs * r_bs;
  out.r_node = 2.0 * r_bs / denom;
  out.t_node = (1.0 - r_bs * r_bs) / denom;

  const Complex ir = kI * out.r_node;
  const Complex t = out.t_node;
  // b_r = i r a_u + t a_d ; b_u = i r a_r + t a_l ;
  // b_l = t a_u + i r a_d ; b_d = t a_r + i r a_l
  out.matrix << 0, ir, 0, t,
               ir, 0, t, 0,
                0, t, 0, ir,
                t, 0, ir, 0;
  return out;
}

}  // namespace optnet
