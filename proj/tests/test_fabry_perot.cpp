#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "optnet/fabry_perot.hpp"
#include "optnet/rootfinding.hpp"

using namespace optnet;

namespace {

double curve_slope(double y, const FPParams& p, double h = 1e-7) {
  return (fp_input_intensity(y + h, p) - fp_input_intensity(y - h, p)) / (2 * h);
}

std::vector<Complex> sorted_roots(std::vector<Complex> v) {
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("fabry_perot");

TEST_CASE("closed-form curve basics") {
  FPParams p;
  p.omega_d = 3 * kPi / 4;
  p.r_BM = 0.9;
  CHECK(fp_input_intensity(0.0, p) == 0.0);

  // Small-signal slope (1-r)/(1+r) = 1/19 at this drive frequency.
  const double slope = fp_input_intensity(1e-9, p) / 1e-9;
  CHECK(slope == doctest::Approx(1.0 / 19.0).epsilon(1e-6));
}

TEST_CASE("curves become multivalued for strong mirrors") {
  for (double r : {0.85, 0.9, 0.95}) {
    FPParams p;
    p.omega_d = kPi / 2;
    p.r_BM = r;
    // x(y) loses monotonicity: its derivative changes sign on y in [0,3].
    bool negative_slope = false;
    for (double y = 0.01; y < 3.0; y += 0.01)
      if (curve_slope(y, p) < 0) negative_slope = true;
    CHECK(negative_slope);
  }
}

TEST_CASE("linear cavity: single root, unit reflection") {
  FPParams p;
  p.omega_d = 1.234;
  p.r_BM = 0.9;
  p.chi = 0.0;
  const auto states = fp_solve(Complex(2.0, 1.0), p);
  REQUIRE(states.size() == 1);
  CHECK(std::abs(states[0].A_out) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("output at the intensity-dependent resonance is -i A_in") {
  FPParams p;
  p.r_BM = 0.77;
  p.chi = 1.0;
  const double y = 0.37;
  p.omega_d = fp_closed_frequency(2, y / p.chi, p);  // k L = 2 pi - pi/4 at this y
  const double x = fp_input_intensity(y, p);
  REQUIRE(x > 0);
  const auto states = fp_solve(std::sqrt(x), p);
  bool found = false;
  for (const auto& s : states) {
    if (std::abs(s.y - y) < 1e-9) {
      found = true;
      CHECK(std::abs(s.A_out - Complex(0, -1) * std::sqrt(x)) < 1e-9);
    }
  }
  CHECK(found);
}

TEST_CASE("bistable drive point: three roots, middle on the negative slope") {
  FPParams p;
  p.omega_d = kPi / 2;
  p.r_BM = 0.9;
  p.chi = 1.0;
  const double x = 0.35;
  const auto states = fp_solve(std::sqrt(x), p);
  REQUIRE(states.size() >= 3);
  // Roots reproduce the drive intensity through the closed form.
  for (const auto& s : states)
    CHECK(fp_input_intensity(s.y, p) == doctest::Approx(x).epsilon(1e-10));
  CHECK(curve_slope(states[1].y, p) < 0.0);
  CHECK(curve_slope(states[0].y, p) > 0.0);
  CHECK(curve_slope(states[2].y, p) > 0.0);
}

TEST_CASE("closed-cavity frequency relation") {
  FPParams p;
  p.chi = 0.0;
  CHECK(fp_closed_frequency(1, 0.3, p) == doctest::Approx(3 * kPi / 4));
  p.chi = 1.0;
  CHECK(fp_closed_frequency(4, 1.0, p) - fp_closed_frequency(4, 0.0, p) ==
        doctest::Approx(3.0));
}

TEST_CASE("good-cavity Bogoliubov roots approach n pi") {
  FPParams p;
  p.omega_d = 3 * kPi / 4;
  p.r_BM = 0.999;
  p.chi = 1.0;
  FPState s;
  s.y = 1e-8;
  s.a_r = std::sqrt(s.y / p.chi);
  const auto st = fp_stability(s, p);
  CHECK(st.consistent);
  REQUIRE(!st.roots.empty());
  for (const Complex& r : st.roots) {
    const double n = std::round(r.real() / kPi);
    CHECK(std::abs(r.real() - n * kPi) < 5e-3);
    CHECK(r.imag() < 0.0);
    CHECK(r.imag() > -0.01);
  }
}

TEST_CASE("stable at x = 1, unstable at x = 5 (omega_d = 3 pi / 4)") {
  FPParams p;
  p.omega_d = 3 * kPi / 4;
  p.r_BM = 0.9;
  p.chi = 1.0;

  const auto states1 = fp_solve(1.0, p);  // chi |A_in|^2 = 1
  // The branch near y = 1.12.
  bool checked1 = false;
  for (const auto& s : states1)
    if (std::abs(s.y - 1.12) < 0.05) {
      const auto st = fp_stability(s, p);
      CHECK(st.consistent);
      CHECK(st.stable);
      checked1 = true;
    }
  CHECK(checked1);

  const auto states5 = fp_solve(std::sqrt(5.0), p);
  bool checked5 = false;
  for (const auto& s : states5)
    if (std::abs(s.y - 1.21) < 0.05) {
      const auto st = fp_stability(s, p);
      CHECK(st.consistent);
      CHECK_FALSE(st.stable);
      checked5 = true;
    }
  CHECK(checked5);
}

TEST_CASE("reduced and unreduced determinants share their zeros") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    FPParams p;
    p.omega_d = u(rng) * 2 * kPi;
    p.r_BM = 0.6 + 0.35 * u(rng);
    p.theta0 = u(rng) * kPi;
    p.chi = 1.0;
    FPState s;
    s.y = 0.8 * u(rng);
    s.a_r = std::polar(std::sqrt(s.y), u(rng) * 2 * kPi);

    const SearchBox box{-kPi, kPi, -1.5, 1.5};
    const auto unreduced =
        find_roots([&](Complex w) { return fp_det_d_unreduced(w, s, p); }, box);
    REQUIRE(unreduced.consistent);
    REQUIRE(!unreduced.roots.empty());

    // Every zero of the uninverted system is a zero of the transcendental
    // det D: Newton on det D from each root stays put.
    for (const Complex& r : sorted_roots(unreduced.roots)) {
      const Complex polished =
          polish_root([&](Complex w) { return fp_det_d(w, s, p); }, r);
      CHECK(std::abs(polished - r) < 1e-8);
    }
  }
}

TEST_CASE("positive-slope rule holds on the drive range of the bistability curves") {
  FPParams p;
  p.omega_d = 3 * kPi / 4;
  p.r_BM = 0.9;
  p.chi = 1.0;
  // Branch points of the plotted bistability loops: intracavity intensities
  // up to the first fold structures, drive intensities up to 5.
  int agree = 0, total = 0;
  for (int i = 1; i <= 140; ++i) {
    const double y = 1.5 * i / 140.0;
    FPState s;
    s.y = y;
    s.x = fp_input_intensity(y, p);
    if (s.x <= 0.0 || s.x > 5.0) continue;
    const double k = p.omega_d - 3.0 * y;
    const double t = std::sqrt(1 - p.r_BM * p.r_BM);
    s.a_r = t * std::sqrt(s.x) /
            (std::exp(Complex(0, -k)) - kI * p.r_BM * std::exp(Complex(0, k)));
    const auto st = fp_stability(s, p);
    if (!st.consistent) continue;
    ++total;
    const bool positive = curve_slope(y, p) > 0;
    if (positive == st.stable) ++agree;
    // Stability never appears on a negative-slope segment here.
    if (st.stable) CHECK(positive);
  }
  REQUIRE(total >= 25);
  // Parametric instabilities make parts of the positive-slope segments
  // unstable, so the two-sided rule is only statistical.
  CHECK(static_cast<double>(agree) / total >= 0.85);
}

TEST_SUITE_END();
