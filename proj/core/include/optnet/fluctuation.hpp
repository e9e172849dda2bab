#pragma once

#include <vector>

#include "optnet/kerr.hpp"
#include "optnet/rootfinding.hpp"
#include "optnet/types.hpp"

namespace optnet {

// Linearized (Bogoliubov) fluctuations around a driven steady state of the
// cylinder. A probe at (+omega_f, p_x) couples to the conjugate component
// at (-omega_f, q_x = 2 kx - p_x); the paired fields (da_p, da_q*) obey
// D(omega_f) (da_p; da_q*) = drive.

// 4x4 coupling matrix of one fiber in the (forward, backward, forward*,
// backward*) ordering, prefactor chi/Nx. The Bogoliubov block structure is
// lower-right = -conj(upper-left), off-diagonals negative-conjugate pairs.
struct FiberBogMatrix {
  enum class Kind { Horizontal, Vertical, BottomMirror };
  Eigen::Matrix4cd Mbar;
  Kind kind = Kind::Horizontal;
  int row = 0;  // 1-based node row n (Vertical: fiber between n and n+1)
};

// Sigma = i diag(1,-1,1,-1), fixed by the counterpropagation directions.
Eigen::Matrix4cd bog_sigma();

// Per-fiber coupling matrices of a steady state at probe momentum p_x:
// Ny horizontal fibers, Ny-1 vertical fibers, one bottom-mirror fiber.
std::vector<FiberBogMatrix> fiber_bog_matrices(const SteadyState& state, double p_x);

// P = exp(Sigma (omega_f - Mbar) L), by eigendecomposition with a
// scaling-and-squaring series fallback for ill-conditioned eigenbases.
// disagree (optional) reports the two methods differing beyond 1e-8.
Eigen::Matrix4cd propagation_matrix(const Eigen::Matrix4cd& Mbar, Complex omega_f, double L,
                                    bool* disagree = nullptr);

struct DAssembly {
  MatrixC D;                      // 8 Ny x 8 Ny
  std::vector<int> flagged_rows;  // near-singular fiber rearrangements
};

// The fluctuation scattering matrix D(omega_f). Analytic in omega_f.
DAssembly assemble_D(const SteadyState& state, Complex omega_f, double p_x);

// det D in log form, for root finding.
LogValue det_D(const SteadyState& state, Complex omega_f, double p_x);

struct StabilityResult {
  std::vector<Complex> roots;
  bool stable = false;      // all roots below Im = -margin
  bool consistent = true;   // winding bookkeeping closed
  double margin = 1e-8;     // in units 1/L
  SearchBox region;
};

// Roots of det D inside the region (default Re in (-pi/L, pi/L], Im in
// [-2/L, 2/L], auto-enlarged when the boundary winding cannot be tracked).
StabilityResult stability_roots(const SteadyState& state, double p_x);
StabilityResult stability_roots(const SteadyState& state, double p_x, SearchBox region);

// Near-axis spectrum by continuation from the exact linear (chi = 0)
// resonances: every linear root in Re in (-3pi/L, 3pi/L], |Im| < im_band is
// tracked to the nonlinear state through an amplitude homotopy with Newton
// polish on det D. This resolves the tiny imaginary parts that decide the
// stability margin, which contour winding cannot do for roots hugging the
// real axis.
struct NearAxisSpectrum {
  std::vector<Complex> roots;
  double max_im = -1e9;    // largest imaginary part over the tracked roots
  int seeds = 0;           // linear seeds inside the window
  int lost = 0;            // seeds whose homotopy lost its root
  bool stable = false;     // max_im < -1e-8/L and no seed lost upward
};
NearAxisSpectrum near_axis_spectrum(const SteadyState& state, double p_x,
                                    double im_band = 0.25);

struct BogoliubovResponse {
  std::vector<double> omega_f;
  Eigen::VectorXd S_plus;    // |dA_out^+ / dA_in^+|
  Eigen::VectorXd S_minus;   // |dA_out^- / dA_in^+|
  std::vector<Eigen::Matrix2cd> M_io;
  MatrixC delta_a_p;         // 4 Ny x grid, probe-normalized fields
  MatrixC delta_a_q_conj;
  std::vector<bool> near_singular;
  double p_x = 0.0;
  double q_x = 0.0;
};

// Driven response on a real omega_f grid for probe amplitudes
// (dA_in^+, dA_in^-); squeezing spectra are reported for dA_in^- = 0.
BogoliubovResponse bogoliubov_response(const SteadyState& state, double p_x,
                                       Complex dA_in_plus, Complex dA_in_minus,
                                       const std::vector<double>& omega_grid);

}  // namespace optnet
