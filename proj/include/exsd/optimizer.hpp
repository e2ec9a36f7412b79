#pragma once

// Quasi-Newton (BFGS) maximizer with a strong-Wolfe line search.
//
// The objective callback has the shape
//   double f(const std::vector<double>& x, std::vector<double>& grad)
// and may return -inf for infeasible points; the line search backs off.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace exsd {

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // on the max-norm of the gradient
  int max_line_search = 40;
  double c1 = 1e-4;
  double c2 = 0.9;
};

struct BfgsResult {
  std::vector<double> x;
  double value = -std::numeric_limits<double>::infinity();
  std::vector<double> gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  double gradient_norm = std::numeric_limits<double>::infinity();
  std::vector<double> accepted_values;  // objective at every accepted iterate
};

namespace detail {

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Minimizer of the quadratic through (lo, f_lo) with slope d_lo and (hi, f_hi),
// clamped to the inner 80% of the bracket.
inline double safeguarded_step(double lo, double f_lo, double d_lo, double hi, double f_hi) {
  const double w = hi - lo;
  const double denom = 2.0 * (f_hi - f_lo - d_lo * w);
  double a = lo + 0.5 * w;
  if (std::isfinite(f_hi) && denom > 0.0) a = lo - d_lo * w * w / denom;
  const double a_min = std::min(lo, hi) + 0.1 * std::abs(w);
  const double a_max = std::max(lo, hi) - 0.1 * std::abs(w);
  if (!std::isfinite(a)) a = lo + 0.5 * w;
  return std::clamp(a, a_min, a_max);
}

}  // namespace detail

template <class Objective>
BfgsResult bfgs_maximize(Objective&& objective, std::vector<double> x0,
                         const BfgsOptions& opts = {}) {
  using detail::dot;
  const std::size_t n = x0.size();
  BfgsResult res;

  // Internally we minimize h = -f.
  std::vector<double> g(n), trial_g(n);
  auto eval = [&](const std::vector<double>& x, std::vector<double>& grad) {
    ++res.evaluations;
    const double f = objective(x, grad);
    for (auto& v : grad) v = -v;
    return std::isfinite(f) ? -f : std::numeric_limits<double>::infinity();
  };

  std::vector<double> x = std::move(x0);
  double h = eval(x, g);
  if (!std::isfinite(h)) {
    res.x = x;
    return res;
  }
  res.accepted_values.push_back(-h);

  std::vector<double> H(n * n, 0.0);
  auto reset_hessian = [&](double scale) {
    std::fill(H.begin(), H.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) H[i * n + i] = scale;
  };
  reset_hessian(1.0);
  bool scaled = false;

  std::vector<double> p(n), xt(n), s(n), y(n), Hy(n);
  double gnorm = detail::max_abs(g);
  bool fresh_hessian = true;

  while (gnorm > opts.gradient_tolerance && res.iterations < opts.max_iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc -= H[i * n + j] * g[j];
      p[i] = acc;
    }
    double d0 = dot(g, p);
    if (!(d0 < 0.0)) {
      reset_hessian(scaled ? H[0] : 1.0);
      for (std::size_t i = 0; i < n; ++i) p[i] = -g[i] * H[i * n + i];
      d0 = dot(g, p);
      fresh_hessian = true;
    }

    // Line search along p.
    double a = scaled ? 1.0 : 1.0 / std::max(1.0, detail::max_abs(p));
    double a_prev = 0.0, h_prev = h, d_prev = d0;
    double a_ok = 0.0, h_ok = h;
    std::vector<double> g_ok = g;
    bool found = false;

    auto try_step = [&](double step, double& hv, double& dv) {
      for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + step * p[i];
      hv = eval(xt, trial_g);
      dv = std::isfinite(hv) ? dot(trial_g, p) : 0.0;
    };
    auto accept_candidate = [&](double step, double hv) {
      a_ok = step;
      h_ok = hv;
      g_ok = trial_g;
    };

    auto zoom = [&](double lo, double h_lo, double d_lo, double hi, double h_hi) {
      for (int k = 0; k < opts.max_line_search; ++k) {
        const double at = detail::safeguarded_step(lo, h_lo, d_lo, hi, h_hi);
        double ht, dt;
        try_step(at, ht, dt);
        if (!std::isfinite(ht) || ht > h + opts.c1 * at * d0 || ht >= h_lo) {
          hi = at;
          h_hi = ht;
        } else {
          accept_candidate(at, ht);
          if (std::abs(dt) <= -opts.c2 * d0) return true;
          if (dt * (hi - lo) >= 0.0) {
            hi = lo;
            h_hi = h_lo;
          }
          lo = at;
          h_lo = ht;
          d_lo = dt;
        }
        if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
      }
      return false;
    };

    for (int k = 0; k < opts.max_line_search; ++k) {
      double ht, dt;
      try_step(a, ht, dt);
      if (!std::isfinite(ht)) {
        found = zoom(a_prev, h_prev, d_prev, a, ht);
        break;
      }
      if (ht > h + opts.c1 * a * d0 || (k > 0 && ht >= h_prev)) {
        found = zoom(a_prev, h_prev, d_prev, a, ht);
        break;
      }
      accept_candidate(a, ht);
      if (std::abs(dt) <= -opts.c2 * d0) {
        found = true;
        break;
      }
      if (dt >= 0.0) {
        found = zoom(a, ht, dt, a_prev, h_prev);
        break;
      }
      a_prev = a;
      h_prev = ht;
      d_prev = dt;
      a *= 2.0;
    }

    if (a_ok == 0.0 || !(h_ok < h)) {
      // No sufficient decrease along this direction.
      if (fresh_hessian) break;
      reset_hessian(1.0);
      scaled = false;
      fresh_hessian = true;
      continue;
    }
    (void)found;

    for (std::size_t i = 0; i < n; ++i) {
      s[i] = a_ok * p[i];
      x[i] += s[i];
      y[i] = g_ok[i] - g[i];
    }
    g = g_ok;
    h = h_ok;
    ++res.iterations;
    res.accepted_values.push_back(-h);
    gnorm = detail::max_abs(g);
    fresh_hessian = false;

    const double sy = dot(s, y);
    const double yy = dot(y, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * yy)) {
      if (!scaled) {
        reset_hessian(sy / yy);
        scaled = true;
      }
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += H[i * n + j] * y[j];
        Hy[i] = acc;
      }
      const double yHy = dot(y, Hy);
      const double rho = 1.0 / sy;
      const double coef = (1.0 + rho * yHy) * rho;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          H[i * n + j] += coef * s[i] * s[j] - rho * (Hy[i] * s[j] + s[i] * Hy[j]);
    }
  }

  res.x = std::move(x);
  res.value = -h;
  res.gradient.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.gradient[i] = -g[i];
  res.gradient_norm = gnorm;
  res.converged = gnorm <= opts.gradient_tolerance;
  return res;
}

}  // namespace exsd
