#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace optnet {

using Complex = std::complex<double>;
using AmplitudeVector = Eigen::VectorXcd;
using MatrixC = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

// Default beamsplitter reflection; gives r_node = t_node = 1/sqrt(2).
inline const double kDefaultRbs = std::numbers::sqrt2 - 1.0;

enum class Geometry { Torus, Cylinder, Plane };

// Circular polarization sector. The two sectors decouple in the linear
// network and see opposite plaquette fluxes +theta0 / -theta0.
enum class Sigma : int { Plus = +1, Minus = -1 };

inline int sigma_value(Sigma s) { return static_cast<int>(s); }
inline Sigma opposite(Sigma s) { return s == Sigma::Plus ? Sigma::Minus : Sigma::Plus; }

// All physical and numerical parameters of one network instance.
// Field names mirror the JSON config schema one to one.
struct NetworkConfig {
  int Nx = 0;
  int Ny = 0;
  double theta0 = 0.0;           // flux per plaquette, radians
  double L = 1.0;                // fiber length, c = 1 units
  Geometry geometry = Geometry::Torus;
  double r_bs = kDefaultRbs;     // beamsplitter reflection in [0,1]
  double chi = 0.0;              // Kerr coefficient, signed
  double r_BM = 0.9;             // boundary-mirror reflection in [0,1]
  double loss_eta = 1.0;         // per-element intensity transmission in (0,1]
  double disorder_delta = 0.0;   // max plaquette flux deviation, radians
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (Nx < 1) throw std::domain_error("NetworkConfig: Nx must be >= 1");
    if (Ny < 1) throw std::domain_error("NetworkConfig: Ny must be >= 1");
    if (r_bs < 0.0 || r_bs > 1.0) throw std::domain_error("NetworkConfig: r_bs must be in [0,1]");
    if (r_BM < 0.0 || r_BM > 1.0) throw std::domain_error("NetworkConfig: r_BM must be in [0,1]");
    if (!(loss_eta > 0.0) || loss_eta > 1.0)
      throw std::domain_error("NetworkConfig: loss_eta must be in (0,1]");
    if (disorder_delta < 0.0)
      throw std::domain_error("NetworkConfig: disorder_delta must be >= 0");
    if (L <= 0.0) throw std::domain_error("NetworkConfig: L must be > 0");
  }

  bool ideal() const { return disorder_delta == 0.0 && loss_eta == 1.0; }
};

// Fold a real frequency (times L) to the principal window (-pi, pi].
inline double fold_phase(double x) {
  double y = std::remainder(x, 2.0 * kPi);  // (-pi, pi] up to the -pi edge
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

// Fold Re(E) of a complex frequency to (-pi/L, pi/L], keeping Im(E).
inline Complex fold_energy(Complex e, double L) {
  return Complex(fold_phase(e.real() * L) / L, e.imag());
}

}  // namespace optnet
