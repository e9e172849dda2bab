#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "optnet/rootfinding.hpp"

using namespace optnet;

namespace {

LogValue to_log(Complex v) { return LogValue{std::log(std::abs(v)), std::arg(v)}; }

AnalyticLogFn polynomial(std::vector<Complex> roots) {
  return [roots](Complex z) {
    Complex v(1.0, 0.0);
    double log_abs = 0.0;
    double phase = 0.0;
    for (const Complex& r : roots) {
      const Complex f = z - r;
      log_abs += std::log(std::abs(f));
      phase += std::arg(f);
    }
    (void)v;
    return LogValue{log_abs, phase};
  };
}

bool contains(const std::vector<Complex>& roots, Complex target, double tol = 1e-9) {
  return std::any_of(roots.begin(), roots.end(),
                     [&](Complex r) { return std::abs(r - target) < tol; });
}

}  // namespace

TEST_SUITE_BEGIN("rootfinding");

TEST_CASE("winding number counts enclosed zeros") {
  const auto f = polynomial({{0.3, 0.2}, {-0.8, -0.5}, {2.5, 0.0}});
  CHECK(winding_number(f, {-1.0, 1.0, -1.0, 1.0}) == 2);
  CHECK(winding_number(f, {-1.0, 3.0, -1.0, 1.0}) == 3);
  CHECK(winding_number(f, {1.0, 2.0, -0.5, 0.5}) == 0);
}

TEST_CASE("find_roots recovers polynomial zeros") {
  const std::vector<Complex> zeros = {
      {0.11, 0.4}, {-1.3, -0.77}, {0.115, 0.38}, {2.0, -1.5}};
  const auto res = find_roots(polynomial(zeros), {-2.0, 3.0, -2.0, 1.0});
  CHECK(res.consistent);
  REQUIRE(res.roots.size() == 4);
  for (const Complex& z : zeros) CHECK(contains(res.roots, z));
}

TEST_CASE("entire function with infinitely many zeros outside the box") {
  const AnalyticLogFn f = [](Complex z) { return to_log(std::sin(z)); };
  const auto res = find_roots(f, {-4.0, 4.5, -1.0, 1.0});
  CHECK(res.consistent);
  REQUIRE(res.roots.size() == 3);  // -pi, 0, pi inside after any boundary nudges
  CHECK(contains(res.roots, Complex(0, 0)));
  CHECK(contains(res.roots, Complex(kPi, 0)));
  CHECK(contains(res.roots, Complex(-kPi, 0)));
}

TEST_CASE("root sitting on the initial boundary is recovered by box adjustment") {
  const auto f = polynomial({{1.0, 0.0}, {0.0, 0.5}});
  const auto res = find_roots(f, {-1.0, 1.0, -0.5, 0.5});  // both roots on edges
  CHECK(res.boundary_adjusted);
  CHECK(res.consistent);
  CHECK(contains(res.roots, Complex(1.0, 0.0)));
  CHECK(contains(res.roots, Complex(0.0, 0.5)));
}

TEST_CASE("pole inside the region is reported, not silently miscounted") {
  const AnalyticLogFn f = [](Complex z) {
    const Complex v = (z - Complex(0.9, 0.8));
    const Complex p = (z - Complex(-0.4, -0.2));
    return LogValue{std::log(std::abs(v)) - std::log(std::abs(p)), std::arg(v) - std::arg(p)};
  };
  // Box holds only the pole: winding -1 must surface as an inconsistency.
  const auto res = find_roots(f, {-1.0, 0.2, -0.6, 0.3});
  CHECK_FALSE(res.consistent);
}

TEST_CASE("polish converges quadratically near a simple zero") {
  const auto f = polynomial({{0.7, -0.3}});
  const Complex z = polish_root(f, Complex(0.5, -0.1));
  CHECK(std::abs(z - Complex(0.7, -0.3)) < 1e-10);
}

TEST_SUITE_END();
