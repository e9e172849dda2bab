#pragma once

#include <vector>

#include "optnet/index_map.hpp"
#include "optnet/node.hpp"
#include "optnet/types.hpp"

namespace optnet {

// Linear scattering operators of one network instance.
//
// The one-step relation is  S0 a = e^{-i E L} T a  for the closed network,
// where a holds the node input amplitudes, S0 applies the node scattering
// plus per-row birefringent and quasi-momentum phases, and T is the
// shift/boundary permutation mapping each input slot to the slot it is fed
// from. Both are unitary when loss_eta = 1.
struct LinearAssembly {
  MatrixC S0;
  MatrixC T;
  // shift_source[j] = i means (T a)_i = a_j, i.e. row i of T has its 1 in
  // column j. Used for exact application of T^{-1} (a permutation).
  std::vector<int> shift_source;
  IndexMap map{1, 1};
  double kx = 0.0;  // quasi-momentum; meaningful for torus/cylinder
  Sigma sector = Sigma::Plus;
  bool lossy = false;
  Geometry geometry = Geometry::Torus;
  NetworkConfig config;

  int dim() const { return static_cast<int>(S0.rows()); }

  // Rows of S0 permuted into the destination-slot arrangement: row j of the
  // result is the equation that determines amplitude j. T^{-1} S0, exactly.
  MatrixC step_operator() const;
};

// Torus / cylinder assembly at fixed quasi-momentum kx (4*Ny dimensional).
LinearAssembly assemble_closed(const NetworkConfig& config, Sigma sector, double kx);

// Full-plane assembly with mirror boundaries on all four sides (4*Nx*Ny).
LinearAssembly assemble_plane(const NetworkConfig& config, Sigma sector);

// Draws flux disorder (one uniform deviation per plaquette, seeded) and
// applies per-element amplitude loss factors to the rows of S0:
//   horizontal rows traverse 2 beamsplitters + 1 fiber + 1 birefringent
//   triple, vertical rows 2 beamsplitters + 1 fiber; each element
//   multiplies the amplitude by sqrt(loss_eta).
LinearAssembly apply_imperfections(const LinearAssembly& assembly, const NetworkConfig& config);

// The allowed quasi-momentum grid kx = -pi + 2 pi j / Nx, j = 0..Nx-1.
std::vector<double> kx_grid(int nx);

}  // namespace optnet
