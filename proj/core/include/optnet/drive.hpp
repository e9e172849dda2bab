#pragma once

#include <vector>

#include "optnet/assembly.hpp"
#include "optnet/types.hpp"

namespace optnet {

// Monochromatic linear (chi = 0) response of an open network.
struct DrivenSolution {
  AmplitudeVector amplitudes;
  Complex A_out{0, 0};  // cylinder reflection output
  Complex A_R{0, 0};    // plane reflection (upper-left mirror)
  Complex A_T{0, 0};    // plane transmission (lower-right mirror)
  double omega_d = 0.0;
  double kx = 0.0;
  Complex A_in{0, 0};
  bool near_singular = false;
};

struct PhaseScanPoint {
  double omega_d = 0.0;
  Complex A_out{0, 0};
  double delta = 0.0;           // unwrapped arg(A_out / A_in)
  double delta_windowed = 0.0;  // delta - (pi + 2 atan r_BM), folded to (-pi, pi]
  double ddelta_domega = 0.0;   // central difference of the unwrapped phase
};

struct PhaseScan {
  std::vector<PhaseScanPoint> points;
  bool unwrap_warning = false;  // a jump > pi/2 between neighbouring samples
};

// Reflection phase shift at resonance, arg((1 + i r) / (1 - i r)) = 2 atan r.
inline double resonance_phase_shift(double r_bm) { return 2.0 * std::atan(r_bm); }

// Driven top-boundary cylinder at fixed kx, chi = 0:
//   [R_BM T^{-1}S0 - e^{-i w L} I] a = -t_BM e^{-i w L/2} A_in e_(d,1).
DrivenSolution solve_driven_cylinder(const NetworkConfig& config, Sigma sector, double kx,
                                     double omega_d, Complex A_in);

// Reusable frequency sweeper: one eigendecomposition of the constant open
// operator, then O(dim^2) resolvent solves per frequency (dense LU fallback
// at points where the resolvent residual is poor).
class DrivenCylinderSolver {
 public:
  DrivenCylinderSolver(const NetworkConfig& config, Sigma sector, double kx);
  DrivenSolution solve(double omega_d, Complex A_in) const;
  const NetworkConfig& config() const { return config_; }

  // Complex resonances of the reflection coefficient (poles with Im < 0
  // and nonzero drive coupling), with periodic images covering
  // [lo, hi]. Used by the phase scan to track windings exactly.
  struct Resonance {
    double re = 0.0;
    double im = 0.0;  // < 0
  };
  std::vector<Resonance> resonances(double lo, double hi) const;

 private:
  NetworkConfig config_;
  double kx_ = 0.0;
  int slot_ = 0;
  double t_bm_ = 0.0;
  MatrixC B_;          // R_BM T^{-1} S0
  MatrixC step_;       // T^{-1} S0 (for the output amplitude)
  MatrixC vecs_;
  AmplitudeVector vals_;
  Eigen::PartialPivLU<MatrixC> vlu_;
  bool eig_ok_ = false;
};

// Same system solved for every omega on a grid (one eigendecomposition of
// the constant operator, resolvent applied per frequency; falls back to a
// dense LU at any point where the resolvent residual is poor).
std::vector<DrivenSolution> driven_cylinder_scan(const NetworkConfig& config, Sigma sector,
                                                 double kx, const std::vector<double>& omega_grid,
                                                 Complex A_in);

// Reflection phase spectroscopy: unwrapped phase and its derivative.
PhaseScan reflection_phase_scan(const NetworkConfig& config, Sigma sector, double kx,
                                const std::vector<double>& omega_grid, Complex A_in = 1.0);

// Driven plane: injection at the mirror next to node (1,1), detection at the
// mirror next to node (Ny,Nx).
DrivenSolution solve_driven_plane(const NetworkConfig& config, Sigma sector, double omega_d,
                                  Complex A_in);

std::vector<DrivenSolution> driven_plane_scan(const NetworkConfig& config, Sigma sector,
                                              const std::vector<double>& omega_grid, Complex A_in);

}  // namespace optnet
