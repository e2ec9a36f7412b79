#pragma once

// Time-change residuals (event-wise and per transition), distributional and
// serial-correlation checks against Exp(1), and stability summaries.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "exsd/core.hpp"
#include "exsd/dynamics.hpp"

namespace exsd {

struct ResidualSeries {
  std::string key;
  std::size_t event = 0;
  std::size_t state = 0;  // only meaningful for total residuals
  std::vector<double> values;
};

namespace detail {

// Walks the piecewise-constant state segments of a stream. For each segment
// calls on_segment(rec, state, dt) with the recursion at the segment start,
// then on_event(record) at its right end (not for the tail segment).
template <class OnSegment, class OnEvent>
void walk_segments(const EventStream& stream, const ModelSpec& model, double end_time,
                   OnSegment&& on_segment, OnEvent&& on_event) {
  RecursionState rec(model.num_events(), model.num_states());
  std::size_t state = stream.initial_state;
  for (std::size_t n = 0; n <= stream.records.size(); ++n) {
    const bool tail = n == stream.records.size() || stream.records[n].time > end_time;
    const double t = tail ? end_time : stream.records[n].time;
    if (t > rec.last_time) on_segment(rec, state, t - rec.last_time);
    if (tail) break;
    advance_in_place(rec, model.hawkes, t);
    const auto& r = stream.records[n];
    on_event(r);
    register_event_in_place(rec, model.hawkes, r.event, r.state_after);
    state = r.state_after;
  }
}

}  // namespace detail

/// Throws naming the first record (1-based) whose event has gate 0 in its pre-event state.
inline void require_admissible(const EventStream& stream, const ModelSpec& model) {
  const auto& gate = model.transition.gate;
  for (std::size_t n = 0; n < stream.records.size(); ++n) {
    const auto& r = stream.records[n];
    if (r.event >= gate.rows() || r.state_before >= gate.cols())
      throw Error("record " + std::to_string(n + 1) + ": index outside the model's taxonomy");
    if (gate(r.event, r.state_before) == 0.0)
      throw Error("record " + std::to_string(n + 1) + " (t=" + std::to_string(r.time) + ", " +
                  model.taxonomy.events()[r.event].code + " in state " +
                  model.taxonomy.states()[r.state_before].label + ") is inadmissible under the model");
  }
}

/// r[e][n] = integral of the gated intensity of e between consecutive type-e
/// arrivals; the first interval starts at t = 0.
inline std::vector<ResidualSeries> event_residuals(const EventStream& stream,
                                                   const ModelSpec& model) {
  require_admissible(stream, model);
  const std::size_t E = model.num_events();
  std::vector<ResidualSeries> out(E);
  for (std::size_t e = 0; e < E; ++e) {
    out[e].key = model.taxonomy.events()[e].code;
    out[e].event = e;
  }
  std::vector<double> acc(E, 0.0);
  const double end = stream.records.empty() ? 0.0 : stream.records.back().time;
  detail::walk_segments(
      stream, model, end,
      [&](const RecursionState& rec, std::size_t state, double dt) {
        const auto seg = compensator_segment(rec, model, state, dt);
        for (std::size_t e = 0; e < E; ++e) acc[e] += seg[e];
      },
      [&](const EventRecord& r) {
        out[r.event].values.push_back(acc[r.event]);
        acc[r.event] = 0.0;
      });
  return out;
}

/// Per (e, x) pair: integrals of phi_e(X(t), x) * raw_e(t) between consecutive
/// arrivals of e that moved the book to x. Indexed e * X + x.
inline std::vector<ResidualSeries> total_residuals(const EventStream& stream,
                                                   const ModelSpec& model) {
  require_admissible(stream, model);
  const std::size_t E = model.num_events();
  const std::size_t X = model.num_states();
  std::vector<ResidualSeries> out(E * X);
  for (std::size_t e = 0; e < E; ++e)
    for (std::size_t x = 0; x < X; ++x) {
      auto& s = out[e * X + x];
      // With a single state the total residuals coincide with the event-wise ones.
      s.key = X == 1 ? model.taxonomy.events()[e].code
                     : model.taxonomy.events()[e].code + "|" + model.taxonomy.states()[x].label;
      s.event = e;
      s.state = x;
    }
  std::vector<double> acc(E * X, 0.0);
  const double end = stream.records.empty() ? 0.0 : stream.records.back().time;
  detail::walk_segments(
      stream, model, end,
      [&](const RecursionState& rec, std::size_t state, double dt) {
        const auto raw = integrated_raw(rec, model.hawkes, dt);
        for (std::size_t e = 0; e < E; ++e)
          for (std::size_t x = 0; x < X; ++x)
            acc[e * X + x] += model.transition.phi(e, state, x) * raw[e];
      },
      [&](const EventRecord& r) {
        const std::size_t k = static_cast<std::size_t>(r.event) * X + r.state_after;
        out[k].values.push_back(acc[k]);
        acc[k] = 0.0;
      });
  return out;
}

/// Integral of the gated intensity of each type over [0, end_time].
inline std::vector<double> gated_compensator(const EventStream& stream, const ModelSpec& model,
                                             double end_time) {
  std::vector<double> acc(model.num_events(), 0.0);
  detail::walk_segments(
      stream, model, end_time,
      [&](const RecursionState& rec, std::size_t state, double dt) {
        const auto seg = compensator_segment(rec, model, state, dt);
        for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += seg[e];
      },
      [](const EventRecord&) {});
  return acc;
}

struct QQData {
  std::vector<double> empirical_quantiles;
  std::vector<double> theoretical_quantiles;
};

inline QQData qq_exp1(const std::vector<double>& values) {
  if (values.empty()) throw Error("qq: empty series");
  QQData qq;
  qq.empirical_quantiles = values;
  std::sort(qq.empirical_quantiles.begin(), qq.empirical_quantiles.end());
  const double n = static_cast<double>(values.size());
  qq.theoretical_quantiles.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / n;
    qq.theoretical_quantiles[i] = -std::log1p(-p);
  }
  return qq;
}

inline QQData qq_exp1(const ResidualSeries& s) { return qq_exp1(s.values); }

struct AcfResult {
  std::vector<double> acf;  // lags 0..max_lag; acf[0] == 1
  double band = 0.0;        // 1.96 / sqrt(n)

  /// Fraction of lags 1..max_lag with |acf| <= band.
  double fraction_inside() const {
    if (acf.size() <= 1) return 1.0;
    std::size_t inside = 0;
    for (std::size_t k = 1; k < acf.size(); ++k) inside += std::abs(acf[k]) <= band;
    return static_cast<double>(inside) / static_cast<double>(acf.size() - 1);
  }
};

inline AcfResult acf(const std::vector<double>& x, std::size_t max_lag) {
  const std::size_t n = x.size();
  if (n <= max_lag) throw Error("acf: series too short for requested lag");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  AcfResult r;
  r.band = 1.96 / std::sqrt(static_cast<double>(n));
  r.acf.assign(max_lag + 1, 0.0);
  r.acf[0] = 1.0;
  if (c0 == 0.0) return r;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double ck = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) ck += (x[i] - mean) * (x[i + k] - mean);
    r.acf[k] = ck / c0;
  }
  return r;
}

inline AcfResult acf(const ResidualSeries& s, std::size_t max_lag) { return acf(s.values, max_lag); }

/// corr(a[i], b[i + k]) for k = 0..max_lag, pairing the series by occurrence
/// index over their common length.
inline std::vector<double> cross_correlation(const std::vector<double>& a,
                                             const std::vector<double>& b, std::size_t max_lag) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n <= max_lag) throw Error("cross-correlation: series too short for requested lag");
  auto mean = [n](const std::vector<double>& v) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += v[i];
    return m / static_cast<double>(n);
  };
  const double ma = mean(a), mb = mean(b);
  double va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  std::vector<double> out(max_lag + 1, 0.0);
  if (va == 0.0 || vb == 0.0) return out;
  const double norm = std::sqrt(va * vb);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double c = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) c += (a[i] - ma) * (b[i + k] - mb);
    out[k] = c / norm;
  }
  return out;
}

/// P(K > lambda) for the limiting Kolmogorov distribution.
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Small-lambda form of the CDF converges fast here.
    constexpr double pi = std::numbers::pi;
    const double z = -pi * pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k <= 50; k += 2) s += std::exp(z * k * k);
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;  // asymptotic; reliable for n >= 35
};

inline KsResult ks_exp1(const std::vector<double>& values) {
  KsResult r;
  if (values.empty()) return r;
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double cdf = v[i] <= 0.0 ? 0.0 : -std::expm1(-v[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  r.statistic = d;
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

inline KsResult ks_exp1(const ResidualSeries& s) { return ks_exp1(s.values); }

enum class Regime { SUB_CRITICAL, CRITICAL, SUPER_CRITICAL };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::SUB_CRITICAL: return "SUB_CRITICAL";
    case Regime::CRITICAL: return "CRITICAL";
    case Regime::SUPER_CRITICAL: return "SUPER_CRITICAL";
  }
  return "?";
}

struct PowerIteration {
  double rho = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Perron root of a non-negative square matrix. Iterates on K + I so that
/// periodic matrices still have a unique dominant eigenvalue.
inline PowerIteration spectral_radius(const Matrix& K, double tol = 1e-10, int max_iter = 10'000) {
  const std::size_t n = K.rows();
  PowerIteration out;
  if (n == 0) {
    out.converged = true;
    return out;
  }
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), w(n);
  double prev = -1.0;
  for (int it = 1; it <= max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = v[i];
      for (std::size_t j = 0; j < n; ++j) acc += K(i, j) * v[j];
      w[i] = acc;
    }
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    const double est = norm - 1.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    out.rho = std::max(0.0, est);
    out.iterations = it;
    if (std::abs(est - prev) <= tol) {
      out.converged = true;
      break;
    }
    prev = est;
  }
  // Refine with the Rayleigh-type ratio on the converged vector.
  if (out.converged) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double kv = 0.0;
      for (std::size_t j = 0; j < n; ++j) kv += K(i, j) * v[j];
      num += v[i] * kv;
      den += v[i] * v[i];
    }
    if (den > 0.0 && std::abs(num / den - out.rho) <= 1e3 * tol) out.rho = std::max(0.0, num / den);
  }
  return out;
}

struct StabilityReport {
  Matrix branching;             // E x X
  std::vector<double> spectral;  // X
  std::vector<Regime> regime;    // X
};

struct StabilityError : Error {
  StabilityReport partial;
  StabilityError(const std::string& what, StabilityReport p) : Error(what), partial(std::move(p)) {}
};

inline StabilityReport stability_report(const ModelSpec& model) {
  StabilityReport rep;
  rep.branching = branching_ratio(model);
  const std::size_t X = model.num_states();
  bool ok = true;
  std::string failed;
  for (std::size_t x = 0; x < X; ++x) {
    const auto pi = spectral_radius(kernel_matrix(model, x));
    rep.spectral.push_back(pi.rho);
    rep.regime.push_back(pi.rho < 1.0   ? Regime::SUB_CRITICAL
                         : pi.rho > 1.0 ? Regime::SUPER_CRITICAL
                                        : Regime::CRITICAL);
    if (!pi.converged) {
      ok = false;
      failed += (failed.empty() ? "" : ", ") + model.taxonomy.states()[x].label;
    }
  }
  if (!ok) throw StabilityError("power iteration did not converge for state(s) " + failed, rep);
  return rep;
}

}  // namespace exsd
