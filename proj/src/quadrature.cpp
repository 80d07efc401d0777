// SPDX-License-Identifier: MIT
#include "he/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace he {

namespace {

struct Panel {
  const std::function<double(double)>& f;
  QuadratureResult& out;
  long budget;

  double recurse(double a, double b, double fa, double fm, double fb, double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    out.evaluations += 2;
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (!std::isfinite(delta)) {
      out.converged = false;
      return left + right;
    }
    if (depth <= 0 || out.evaluations >= budget) {
      out.converged = false;
      out.error += std::abs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    if (std::abs(delta) <= 15.0 * eps) {
      out.error += std::abs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    return recurse(a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
  }
};

}  // namespace

QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  const SimpsonOptions& options) {
  QuadratureResult out;
  if (a == b) return out;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  out.evaluations = 3;
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double eps = std::max(options.abs_tol, options.rel_tol * std::abs(whole));
  Panel panel{f, out, options.max_evaluations};
  out.value = panel.recurse(a, b, fa, fm, fb, whole, eps, options.max_depth);
  if (!std::isfinite(out.value)) out.converged = false;
  return out;
}

}  // namespace he
