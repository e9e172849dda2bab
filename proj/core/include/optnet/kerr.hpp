#pragma once

#include <optional>
#include <vector>

#include "optnet/assembly.hpp"
#include "optnet/types.hpp"

namespace optnet {

// Parameters of the driven Kerr cylinder at fixed quasi-momentum.
// The network itself is ideal here: the nonlinear solver works on the
// disorder-free, lossless assembly.
struct SteadyParams {
  NetworkConfig config;  // geometry must be Cylinder; chi and r_BM are used
  Sigma sector = Sigma::Plus;
  double kx = 0.0;
  double omega_d = 0.0;
  Complex A_in{0, 0};
};

// Converged steady state of the driven nonlinear network.
struct SteadyState {
  AmplitudeVector amplitudes;
  NetworkConfig config;  // the network the state was solved on
  double omega_d = 0.0;
  double kx = 0.0;
  Complex A_in{0, 0};
  double r_BM = 0.0;
  double chi = 0.0;
  Sigma sector = Sigma::Plus;
  double N_p = 0.0;           // total intensity, sum |a_{s,n}|^2
  double residual_norm = 0.0;
  bool converged = false;
  bool fold_suspected = false;  // Jacobian near singular at the last iterate
  std::optional<bool> stable;   // filled by the fluctuation analysis
};

// Diagonal Kerr intensity entries N_j (destination-slot arrangement) and
// the phase prefactor chi L / Nx. Entry (d,1) is the linear mirror row.
struct KerrPhaseDiagonal {
  Eigen::VectorXd intensities;
  double prefactor = 0.0;
};
KerrPhaseDiagonal kerr_phase_diagonal(const AmplitudeVector& a, const SteadyParams& params);

// Residual of the nonlinear scattering equation, zero exactly on steady
// states:  R_BM T^{-1}S0 a - e^{-i w L} e^{i chi N L/Nx} a + t e^{-i w L/2} A_in e_(d,1).
AmplitudeVector steady_residual(const AmplitudeVector& a, const SteadyParams& params);

// Analytic Wirtinger blocks dF/da and dF/d(conj a).
void steady_jacobian(const AmplitudeVector& a, const SteadyParams& params, MatrixC& F_a,
                     MatrixC& F_abar);

// Real 8Ny x 8Ny Jacobian in the (Re a; Im a) splitting.
Eigen::MatrixXd steady_jacobian_real(const AmplitudeVector& a, const SteadyParams& params);

// Damped Newton from the given guess; converged means residual < 1e-10.
SteadyState solve_steady(const SteadyParams& params, const AmplitudeVector& guess);

// Steady state connected to the linear response: solve chi = 0, then ramp
// chi to its target value in adaptive homotopy steps.
SteadyState solve_steady_homotopy(const SteadyParams& params);

struct ContinuationPoint {
  double drive_intensity = 0.0;  // |chi| |A_in|^2
  double total_intensity = 0.0;  // |chi| N_p
  int branch_id = 0;             // increments at every fold
  bool fold = false;
  SteadyState state;
};

struct ContinuationCurve {
  std::vector<ContinuationPoint> points;
  std::vector<int> fold_indices;
  bool truncated = false;  // step control underflow before reaching the end
};

struct ContinuationOptions {
  double initial_step = 0.02;
  double max_step = 0.2;
  double min_step = 1e-10;
  int max_points = 40000;
  int newton_max_iter = 40;
  double tol = 1e-11;
};

// Pseudo-arclength continuation of steady states in (a, A_in), from
// drive_min up to drive_max in units of |chi||A_in|^2. Multivalued regions
// appear as folds of the traced branch.
ContinuationCurve continuation_sweep(const SteadyParams& params, double drive_min,
                                     double drive_max, const ContinuationOptions& opts = {});

// Locate a state on the curve with |chi| N_p = target (first crossing);
// refines the bracketing curve points with a constrained Newton solve.
std::optional<SteadyState> state_at_total_intensity(const ContinuationCurve& curve,
                                                    const SteadyParams& params, double target,
                                                    double rel_tol = 0.01);

struct IntensityTable {
  double N_p = 0.0;
  Eigen::MatrixXd intensity;  // (Ny rows) x 4 columns in (r,u,l,d) order
};
IntensityTable observables(const SteadyState& state);

}  // namespace optnet
