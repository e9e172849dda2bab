#pragma once

#include <vector>

#include "optnet/rootfinding.hpp"
#include "optnet/types.hpp"

namespace optnet {

// Single Kerr cavity: partially transmissive mirror + phase plate on the
// left, perfect mirror on the right, counterpropagating fields in between.
// Serves as the closed-form oracle for the full network solvers.
struct FPParams {
  double omega_d = 0.0;
  double r_BM = 0.9;
  double theta0 = 0.0;  // plate phase; 0 mimics a vertical fiber
  double chi = 1.0;
  double L = 1.0;
};

struct FPState {
  Complex a_r{0, 0};  // intracavity right-moving amplitude at the right mirror
  double y = 0.0;     // chi |a_r|^2
  double x = 0.0;     // chi |A_in|^2
  Complex A_out{0, 0};
  bool stable = false;
};

// Closed-form drive intensity for a given intracavity intensity:
//   x = y / (1 - r^2) * [1 + r^2 + 2 r sin(2 w L - 6 y L)].
double fp_input_intensity(double y, const FPParams& params);

// All steady states at drive amplitude A_in: brackets the real roots y of
// x = fp_input_intensity(y) on a grid and polishes them, then reconstructs
// amplitudes and the output field. Stability is not filled here.
std::vector<FPState> fp_solve(Complex A_in, const FPParams& params);

// Good-cavity resonance frequency: E_n = n pi / L - pi/(4L) + 3 chi |a_r|^2.
double fp_closed_frequency(int n, double intensity, const FPParams& params);

// Stability of one steady state from the complex zeros of det D(omega_f)
// inside Re in (-pi/L, pi/L], Im in [-2/L, 2/L] (auto-widened if needed).
// stable iff every root has Im < 0.
struct FPStability {
  bool stable = false;
  std::vector<Complex> roots;
  bool consistent = true;
};
FPStability fp_stability(const FPState& state, const FPParams& params);

// det D(omega_f) of the linearized cavity in log form (exposed for the
// cross-checks against the generic network machinery).
LogValue fp_det_d(Complex omega_f, const FPState& state, const FPParams& params);

// Same determinant zeros from the unreduced 8x8 fluctuation system
// (fiber relation kept implicit, no 4x4 inversion). Used as an independent
// route in tests.
LogValue fp_det_d_unreduced(Complex omega_f, const FPState& state, const FPParams& params);

// Fluctuation coupling matrix of the cavity fiber (chi |a_r|^2 entries with
// e^{ikL} phases), in the (r, l, r*, l*) ordering.
Eigen::Matrix4cd fp_coupling_matrix(const FPState& state, const FPParams& params);

}  // namespace optnet
