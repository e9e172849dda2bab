#include "optnet/rootfinding.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optnet {

LogValue log_det(const MatrixC& m) {
  // Equilibrate rows and columns first: fluctuation determinants mix
  // exponentially large propagation entries with O(1) boundary rows, and
  // the raw LU would lose the phase to cancellation.
  MatrixC a = m;
  const Eigen::Index n = a.rows();
  double log_scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = a.row(i).cwiseAbs().maxCoeff();
    if (s > 0.0 && std::isfinite(s)) {
      a.row(i) /= s;
      log_scale += std::log(s);
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = a.col(j).cwiseAbs().maxCoeff();
    if (s > 0.0 && std::isfinite(s) && (s > 4.0 || s < 0.25)) {
      a.col(j) /= s;
      log_scale += std::log(s);
    }
  }

  Eigen::PartialPivLU<MatrixC> lu(a);
  const auto& u = lu.matrixLU();
  double log_abs = log_scale;
  double phase = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex d = u(i, i);
    log_abs += std::log(std::abs(d));
    phase += std::arg(d);
  }
  if (lu.permutationP().determinant() < 0) phase += kPi;
  return LogValue{log_abs, phase};
}

namespace {

double wrap_pi(double x) {
  double y = std::remainder(x, 2.0 * kPi);
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

// Phase increment of f along the straight segment a -> b, accumulated so
// that every sub-step is below pi/2. Throws when refinement stalls, which
// signals a zero (or pole) on or very close to the segment.
double phase_increment(const AnalyticLogFn& f, Complex a, Complex b, LogValue fa, LogValue fb,
                       int depth, const RootFindOptions& opts) {
  const double d = wrap_pi(fb.phase - fa.phase);
  if (std::abs(d) < 0.5 * kPi) return d;
  if (depth >= opts.max_phase_depth)
    throw std::runtime_error("phase tracking stalled (zero on contour)");
  const Complex mid = 0.5 * (a + b);
  const LogValue fm = f(mid);
  if (!std::isfinite(fm.log_abs) || !std::isfinite(fm.phase))
    throw std::runtime_error("non-finite function value on contour");
  return phase_increment(f, a, mid, fa, fm, depth + 1, opts) +
         phase_increment(f, mid, b, fm, fb, depth + 1, opts);
}

double edge_phase(const AnalyticLogFn& f, Complex a, Complex b, int n,
                  const RootFindOptions& opts) {
  double total = 0.0;
  LogValue prev = f(a);
  Complex zprev = a;
  for (int i = 1; i <= n; ++i) {
    const Complex z = a + (b - a) * (static_cast<double>(i) / n);
    const LogValue cur = f(z);
    total += phase_increment(f, zprev, z, prev, cur, 0, opts);
    zprev = z;
    prev = cur;
  }
  return total;
}

}  // namespace

int winding_number(const AnalyticLogFn& f, const SearchBox& box, const RootFindOptions& opts) {
  const Complex c1(box.re_lo, box.im_lo), c2(box.re_hi, box.im_lo);
  const Complex c3(box.re_hi, box.im_hi), c4(box.re_lo, box.im_hi);
  // The bisection refinement only sees phase jumps mod 2 pi: a segment
  // whose true advance is close to a 2 pi multiple slips through silently.
  // Start above the Nyquist rate of the phase when a bound is known, then
  // recompute at increasing sample densities until two levels agree.
  int n0 = opts.samples_per_edge;
  if (opts.phase_rate_bound > 0.0) {
    const double len = std::max(box.width(), box.height());
    const int nyquist = static_cast<int>(std::ceil(len * opts.phase_rate_bound / 2.0));
    n0 = std::max(n0, nyquist);
  }
  double prev_total = 0.0;
  bool have_prev = false;
  for (int n = n0; n <= 64 * n0; n = (3 * n + 1) / 2) {
    const double total = edge_phase(f, c1, c2, n, opts) + edge_phase(f, c2, c3, n, opts) +
                         edge_phase(f, c3, c4, n, opts) + edge_phase(f, c4, c1, n, opts);
    if (have_prev && std::abs(total - prev_total) < 0.5 * kPi) {
      const double w = total / (2.0 * kPi);
      const int wi = static_cast<int>(std::lround(w));
      if (std::abs(w - wi) > 0.25) throw std::runtime_error("winding number is not integral");
      return wi;
    }
    prev_total = total;
    have_prev = true;
  }
  throw std::runtime_error("winding number did not stabilize under refinement");
}

Complex polish_root(const AnalyticLogFn& f, Complex z0, const RootFindOptions& opts) {
  Complex z = z0;
  // Work with f rescaled by its magnitude at the start point so the Newton
  // iteration never overflows; the scale cancels in f/f'.
  double scale = f(z0).log_abs;
  if (!std::isfinite(scale)) scale = 0.0;
  const auto value = [&](Complex w) -> Complex {
    const LogValue v = f(w);
    return std::polar(std::exp(v.log_abs - scale), v.phase);
  };
  double step_size = 1.0;
  for (int it = 0; it < opts.max_newton_iter; ++it) {
    const double h = std::max(1e-9, 1e-6 * std::max(1.0, std::abs(z)));
    const Complex fz = value(z);
    const Complex df = (value(z + h) - value(z - h)) / (2.0 * h);
    if (df == Complex(0, 0)) break;
    const Complex step = -fz / df;
    z += step;
    step_size = std::abs(step);
    if (step_size < opts.newton_tol) break;
  }
  return z;
}

namespace {

struct Driver {
  const AnalyticLogFn& f;
  const RootFindOptions& opts;
  RootFindResult& result;

  void solve_box(const SearchBox& box, int winding, int depth) {
    if (winding == 0) return;
    if (winding < 0) {
      result.consistent = false;
      result.diagnostic = "negative winding (pole inside search region)";
      return;
    }
    const double diag = std::hypot(box.width(), box.height());
    const bool cluster = diag < 1e-6;  // numerically coincident roots
    const bool depth_capped = depth >= opts.max_subdivision_depth;

    if (winding == 1 || cluster || depth_capped) {
      // A polished root must land in (or within a hair of) its own box;
      // Newton from a coarse box can escape into the large basin of a
      // distant near-double root, in which case we keep subdividing.
      const double slack = 0.05 * diag + 1e-6;
      const auto inside = [&](Complex r) {
        return r.real() > box.re_lo - slack && r.real() < box.re_hi + slack &&
               r.imag() > box.im_lo - slack && r.imag() < box.im_hi + slack;
      };
      Complex root;
      bool found = false;
      const double starts[5][2] = {
          {0.5, 0.5}, {0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
      for (const auto& s : starts) {
        const Complex cand = polish_root(
            f, Complex(box.re_lo + s[0] * box.width(), box.im_lo + s[1] * box.height()), opts);
        if (inside(cand)) {
          root = cand;
          found = true;
          break;
        }
        if (!found) root = cand;
      }
      if (found) {
        for (int k = 0; k < winding; ++k) result.roots.push_back(root);
        if (winding > 1 && depth_capped && !cluster) {
          result.consistent = false;
          result.diagnostic = "unresolved root cluster";
        }
        return;
      }
      if (cluster || depth_capped) {
        result.consistent = false;
        result.diagnostic = "polished root escaped its box";
        for (int k = 0; k < winding; ++k) result.roots.push_back(root);
        return;
      }
      // fall through to subdivision
    }

    // Split along the longer side. The fractions are chosen away from 1/2
    // so symmetric boxes never cut exactly through the real axis, where
    // undamped roots live; if a root still sits on a cut the next fraction
    // is tried, and as a last resort the whole box is nudged.
    const bool split_re = box.width() >= box.height();
    const double fracs[] = {0.53390271, 0.46862139, 0.57142857, 0.43081931};
    for (double frac : fracs) {
      SearchBox a = box, b = box;
      if (split_re) {
        const double cut = box.re_lo + frac * box.width();
        a.re_hi = cut;
        b.re_lo = cut;
      } else {
        const double cut = box.im_lo + frac * box.height();
        a.im_hi = cut;
        b.im_lo = cut;
      }
      int wa, wb;
      try {
        wa = winding_number(f, a, opts);
        wb = winding_number(f, b, opts);
      } catch (const std::runtime_error&) {
        continue;  // root on the cut, try another split fraction
      }
      if (wa + wb != winding) {
        result.consistent = false;
        result.diagnostic = "winding counts inconsistent across subdivision";
        return;
      }
      solve_box(a, wa, depth + 1);
      solve_box(b, wb, depth + 1);
      return;
    }
    // A root sits on this box's own boundary (inherited from an ancestor
    // cut): nudge the box outward and restart it.
    for (int jiggle = 1; jiggle <= 3; ++jiggle) {
      SearchBox nudged = box;
      const double dx = 3.1e-7 * jiggle * std::max(box.width(), 1e-3);
      const double dy = 2.3e-7 * jiggle * std::max(box.height(), 1e-3);
      nudged.re_lo -= dx;
      nudged.re_hi += 1.41 * dx;
      nudged.im_lo -= dy;
      nudged.im_hi += 1.73 * dy;
      try {
        const int wn = winding_number(f, nudged, opts);
        solve_box(nudged, wn, depth + 1);
        return;
      } catch (const std::runtime_error&) {
        continue;
      }
    }
    result.consistent = false;
    result.diagnostic = "could not find a clean subdivision cut";
  }
};

}  // namespace

RootFindResult find_roots(const AnalyticLogFn& f, SearchBox box, const RootFindOptions& opts) {
  RootFindResult result;

  int winding = 0;
  bool ok = false;
  for (int attempt = 0; attempt <= opts.max_boundary_retries && !ok; ++attempt) {
    try {
      winding = winding_number(f, box, opts);
      ok = true;
    } catch (const std::runtime_error&) {
      // A root sits on (or extremely near) the boundary: grow and shift.
      const double dw = 0.03 * box.width() * (attempt + 1);
      const double dh = 0.15 * box.height() * (attempt + 1);
      box.re_lo -= dw;
      box.re_hi += dw * 1.137;
      box.im_lo -= dh;
      box.im_hi += dh;
      result.boundary_adjusted = true;
    }
  }
  result.box_used = box;
  if (!ok) {
    result.consistent = false;
    result.diagnostic = "could not evaluate boundary winding after retries";
    return result;
  }

  Driver driver{f, opts, result};
  driver.solve_box(box, winding, 0);

  // Roots exactly on the box boundary can slip through the contour checks
  // yet poison the subdivision counts; retry once on a slightly grown box.
  if (!result.consistent) {
    SearchBox grown = box;
    grown.re_lo -= 1.7e-4 * std::max(box.width(), 1e-2);
    grown.re_hi += 2.9e-4 * std::max(box.width(), 1e-2);
    grown.im_lo -= 2.3e-4 * std::max(box.height(), 1e-2);
    grown.im_hi += 3.7e-4 * std::max(box.height(), 1e-2);
    try {
      const int wn = winding_number(f, grown, opts);
      RootFindResult retry;
      retry.boundary_adjusted = true;
      retry.box_used = grown;
      Driver d2{f, opts, retry};
      d2.solve_box(grown, wn, 0);
      if (retry.consistent) result = std::move(retry);
    } catch (const std::runtime_error&) {
      // keep the original diagnostics
    }
  }

  // Deduplicate identical roots polished out of adjacent boxes (keep
  // split near-degenerate pairs as distinct roots).
  std::sort(result.roots.begin(), result.roots.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  std::vector<Complex> unique;
  for (const Complex& r : result.roots) {
    if (unique.empty() || std::abs(r - unique.back()) > 1e-10) unique.push_back(r);
  }
  result.roots = std::move(unique);
  return result;
}

}  // namespace optnet
