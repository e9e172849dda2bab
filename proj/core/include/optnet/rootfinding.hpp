#pragma once

#include <functional>
#include <string>
#include <vector>

#include "optnet/types.hpp"

namespace optnet {

// Value of an analytic function in log form, exp(log_abs + i phase).
// Determinants of ~100-dimensional matrices are kept in this form so the
// winding accumulation never overflows.
struct LogValue {
  double log_abs = 0.0;
  double phase = 0.0;
};

using AnalyticLogFn = std::function<LogValue(Complex)>;

struct SearchBox {
  double re_lo = 0.0, re_hi = 0.0;
  double im_lo = 0.0, im_hi = 0.0;
  double width() const { return re_hi - re_lo; }
  double height() const { return im_hi - im_lo; }
};

struct RootFindOptions {
  int samples_per_edge = 48;       // initial contour sampling per box edge
  int max_phase_depth = 26;        // per-segment bisection depth
  int max_subdivision_depth = 48;
  double newton_tol = 1e-12;
  int max_newton_iter = 60;
  int max_boundary_retries = 3;    // box jiggle attempts when a root sits on the contour
  // Upper bound on |d arg f / d z| along contours (rad per unit length).
  // Near-uniform root ladders alias badly when sampled below their Nyquist
  // rate; setting this from the function's known structure (e.g. the
  // determinant degree in e^{i w L}) makes the winding sampling safe.
  double phase_rate_bound = 0.0;
};

struct RootFindResult {
  std::vector<Complex> roots;
  bool consistent = true;      // winding counts matched the polished roots everywhere
  bool boundary_adjusted = false;  // the search box had to be enlarged/jiggled
  std::string diagnostic;
  SearchBox box_used;
};

// Total winding number of f along the rectangle boundary (counterclockwise),
// i.e. the number of zeros minus poles inside for a meromorphic f.
// Throws std::runtime_error when the phase cannot be tracked (zero on the
// contour that bisection cannot separate).
int winding_number(const AnalyticLogFn& f, const SearchBox& box,
                   const RootFindOptions& opts = {});

// All zeros of f inside the box via recursive subdivision of the winding
// count plus Newton polish on the rescaled function value.
RootFindResult find_roots(const AnalyticLogFn& f, SearchBox box,
                          const RootFindOptions& opts = {});

// Newton refinement of a single root starting from z0 (used standalone in
// tests); returns the polished location.
Complex polish_root(const AnalyticLogFn& f, Complex z0, const RootFindOptions& opts = {});

// log |det M| and accumulated phase via LU, safe against overflow for the
// ~100-dimensional fluctuation matrices.
LogValue log_det(const MatrixC& m);

}  // namespace optnet
