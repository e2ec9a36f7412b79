#pragma once

// Realized-variance signature plots from piecewise-constant mid-price paths.

#include <cmath>
#include <vector>

#include "exsd/core.hpp"
#include "exsd/simulate.hpp"

namespace exsd {

struct SignatureCurve {
  std::vector<double> deltas;
  std::vector<double> rv;      // mean realized variance per second, ticks^2 / s
  std::vector<double> std_error;  // across paths; 0 for a single path
  std::size_t n_paths = 0;
};

/// Logarithmic grid of `points` sampling intervals between lo and hi (inclusive).
inline std::vector<double> log_delta_grid(double lo = 0.1, double hi = 600.0, std::size_t points = 25) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw Error("delta grid: need 0 < lo < hi and >= 2 points");
  std::vector<double> out(points);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

/// Samples the path at 0, delta, 2 delta, ... <= horizon with previous-tick
/// values and returns the sum of squared increments divided by the horizon.
inline double realized_variance(const MidPricePath& path, double delta, double horizon) {
  if (!(delta > 0.0)) throw Error("realized variance: delta must be positive");
  if (!(horizon >= delta)) throw Error("realized variance: horizon shorter than delta");
  const auto& times = path.times;
  std::size_t next = 0;  // first event not yet applied
  double current = path.initial_price;
  double prev_sample = current;
  double sum = 0.0;
  for (std::size_t k = 1;; ++k) {
    const double t = static_cast<double>(k) * delta;
    if (t > horizon) break;
    while (next < times.size() && times[next] <= t) current = path.prices[next++];
    const double d = current - prev_sample;
    sum += d * d;
    prev_sample = current;
  }
  return sum / horizon;
}

inline SignatureCurve signature_curve(const std::vector<MidPricePath>& paths,
                                      const std::vector<double>& deltas, double horizon) {
  if (paths.empty()) throw Error("signature: no paths");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw Error("signature: deltas must be positive");
    if (i > 0 && !(deltas[i] > deltas[i - 1])) throw Error("signature: deltas must be strictly ascending");
  }
  SignatureCurve c;
  c.deltas = deltas;
  c.n_paths = paths.size();
  const double n = static_cast<double>(paths.size());
  for (double d : deltas) {
    double sum = 0.0, sq = 0.0;
    std::vector<double> vals;
    vals.reserve(paths.size());
    for (const auto& p : paths) vals.push_back(realized_variance(p, d, horizon));
    for (double v : vals) sum += v;
    const double mean = sum / n;
    for (double v : vals) sq += (v - mean) * (v - mean);
    c.rv.push_back(mean);
    c.std_error.push_back(paths.size() > 1 ? std::sqrt(sq / (n - 1.0) / n) : 0.0);
  }
  return c;
}

}  // namespace exsd
