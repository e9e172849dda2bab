#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "optnet/assembly.hpp"
#include "optnet/types.hpp"

namespace optnet {

// One eigenmode of the closed network. energy = i ln(lambda) / L with the
// real part folded to (-pi/L, pi/L]; Im(energy) <= 0 for lossy networks.
struct EigenMode {
  Complex energy;
  AmplitudeVector vector;  // unit norm
  Sigma sector = Sigma::Plus;
  double kx = 0.0;
  double edge_weight_top = 0.0;
  double edge_weight_bottom = 0.0;
};

struct SpectrumResult {
  std::vector<EigenMode> modes;           // sorted by Re(energy)
  bool schur_fallback = false;            // eigenvector basis was ill-conditioned
  bool branch_cut_warning = false;        // an eigenvalue sits near lambda = -1
};

// A gap on the energy circle (-pi/L, pi/L]. hi > lo always; a gap wrapping
// through +pi/L has hi > pi/L (hi - 2 pi/L is its folded upper edge).
struct GapInterval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

struct BandStructure {
  std::vector<double> kx_values;
  std::vector<std::vector<EigenMode>> modes;  // one list per kx
  std::vector<GapInterval> gaps;
  Sigma sector = Sigma::Plus;
};

// Eigendecomposition of T^{-1} S0; energies folded, vectors normalized,
// edge weights filled (top/bottom 2 rows).
SpectrumResult closed_spectrum(const LinearAssembly& assembly, double L);

// Spectra over a kx grid, with circular gap detection over all kx.
// edge_filter: when set, modes with max(edge weights) above the threshold
// are excluded from gap detection (used on the cylinder to find bulk gaps).
BandStructure band_structure(const NetworkConfig& config, Sigma sector,
                             const std::vector<double>& kx_values,
                             std::optional<double> edge_filter = std::nullopt);

// H = i ln(T^{-1} S0) / L via the principal matrix logarithm (Schur based).
// Requires a lossless assembly; Hermitian to ~1e-12 for unitary input.
// branch_warning is set when an eigenvalue is close to the log branch cut.
MatrixC effective_hamiltonian(const LinearAssembly& assembly, double L,
                              bool* branch_warning = nullptr);

// Fraction of squared norm in the top / bottom `rows` node rows, summed
// over all four direction blocks.
std::pair<double, double> edge_weight(const AmplitudeVector& v, const IndexMap& map, int rows);

// Maximal circular intervals of (-pi/L, pi/L] free of Re(energy) values,
// up to `tolerance`. Values within `tolerance` of each other merge.
std::vector<GapInterval> find_gaps(const std::vector<double>& energies, double L,
                                   double tolerance);
std::vector<GapInterval> find_gaps(const BandStructure& band, double L, double tolerance,
                                   std::optional<double> edge_filter = std::nullopt);

inline double default_gap_tolerance(double L) { return 1e-6 * (2.0 * kPi / L); }

}  // namespace optnet
