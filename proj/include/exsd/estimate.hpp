#pragma once

// Two-step maximum likelihood. The transition weights come from a counting
// estimator; the Hawkes parameters maximize the gated point-process
// likelihood, which depends on the transition kernel only through its gates.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "exsd/core.hpp"
#include "exsd/dynamics.hpp"
#include "exsd/optimizer.hpp"

namespace exsd {

struct TransitionCounts {
  std::vector<std::uint64_t> n_exx;  // E x X x X, row-major
  std::vector<std::uint64_t> n_ex;   // E x X
  std::size_t E = 0, X = 0;

  TransitionCounts() = default;
  TransitionCounts(std::size_t e, std::size_t x) : n_exx(e * x * x, 0), n_ex(e * x, 0), E(e), X(x) {}

  std::uint64_t& at(std::size_t e, std::size_t from, std::size_t to) {
    return n_exx[(e * X + from) * X + to];
  }
  std::uint64_t at(std::size_t e, std::size_t from, std::size_t to) const {
    return n_exx[(e * X + from) * X + to];
  }
  std::uint64_t row(std::size_t e, std::size_t from) const { return n_ex[e * X + from]; }
  void add(std::size_t e, std::size_t from, std::size_t to, std::uint64_t n = 1) {
    at(e, from, to) += n;
    n_ex[e * X + from] += n;
  }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto v : n_exx) s += v;
    return s;
  }
};

inline void accumulate_transitions(TransitionCounts& counts, const EventStream& stream) {
  for (std::size_t n = 0; n < stream.records.size(); ++n) {
    const auto& r = stream.records[n];
    if (r.event >= counts.E || r.state_before >= counts.X || r.state_after >= counts.X)
      throw Error("record " + std::to_string(n + 1) + ": index outside taxonomy");
    counts.add(r.event, r.state_before, r.state_after);
  }
}

inline TransitionCounts count_transitions(const EventStream& stream, const Taxonomy& taxonomy) {
  TransitionCounts counts(taxonomy.num_events(), taxonomy.num_states());
  accumulate_transitions(counts, stream);
  return counts;
}

/// phi(e, x, x') = N_e(x, x') / N_e(x); rows with N_e(x) = 0 are all zero with gate 0.
inline TransitionKernel estimate_transition_kernel(const TransitionCounts& counts) {
  TransitionKernel tk(counts.E, counts.X);
  for (std::size_t e = 0; e < counts.E; ++e)
    for (std::size_t x = 0; x < counts.X; ++x) {
      const auto total = counts.row(e, x);
      if (total == 0) continue;
      for (std::size_t y = 0; y < counts.X; ++y)
        tk.phi(e, x, y) = static_cast<double>(counts.at(e, x, y)) / static_cast<double>(total);
      tk.normalize_row(e, x);
    }
  return tk;
}

/// Unconstrained baseline: unobserved rows are forced to sum to one (uniform).
inline TransitionKernel force_unit_rows(TransitionKernel tk) {
  const std::size_t X = tk.num_states();
  for (std::size_t e = 0; e < tk.num_events(); ++e)
    for (std::size_t x = 0; x < X; ++x)
      if (tk.gate(e, x) == 0.0) {
        for (std::size_t y = 0; y < X; ++y) tk.phi(e, x, y) = 1.0 / static_cast<double>(X);
        tk.normalize_row(e, x);
      }
  return tk;
}

inline double log_lik_tp(const TransitionCounts& counts, const TransitionKernel& tk) {
  long double acc = 0.0L;
  for (std::size_t e = 0; e < counts.E; ++e)
    for (std::size_t x = 0; x < counts.X; ++x)
      for (std::size_t y = 0; y < counts.X; ++y) {
        const auto n = counts.at(e, x, y);
        if (n == 0) continue;
        const double p = tk.phi(e, x, y);
        if (!(p > 0.0))
          throw Error("observed transition has zero probability under the kernel");
        acc += static_cast<long double>(n) * std::log(p);
      }
  return static_cast<double>(acc);
}

/// Gated Hawkes log-likelihood and its gradient with respect to (nu, alpha, beta)
/// over one or more independent streams.
class HawkesLikelihood {
 public:
  struct Gradient {
    std::vector<double> nu;
    std::vector<double> alpha;
    std::vector<double> beta;
  };

  HawkesLikelihood(std::vector<const EventStream*> streams, const Matrix& gate)
      : streams_(std::move(streams)), gate_(gate) {
    for (std::size_t s = 0; s < streams_.size(); ++s) {
      const auto& recs = streams_[s]->records;
      for (std::size_t n = 0; n < recs.size(); ++n)
        if (gate_(recs[n].event, recs[n].state_before) == 0.0)
          throw Error("record " + std::to_string(n + 1) + (streams_.size() > 1 ? " of stream " + std::to_string(s) : std::string()) +
                      ": event is inadmissible (gate 0) in its pre-event state");
      num_events_ += recs.size();
    }
  }

  std::size_t num_events() const { return num_events_; }

  double evaluate(const HawkesParams& hp, Gradient* grad = nullptr) const {
    const std::size_t E = hp.nu.size();
    const std::size_t M = hp.alpha.size();
    const std::size_t X = hp.alpha.dim1();
    const auto& alpha = hp.alpha.data();
    const auto& beta = hp.beta.data();
    if (grad) {
      grad->nu.assign(E, 0.0);
      grad->alpha.assign(M, 0.0);
      grad->beta.assign(M, 0.0);
    }

    long double total = 0.0L;
    std::vector<double> A(M), B(M), f(M), g(M);

    for (const EventStream* stream : streams_) {
      std::fill(A.begin(), A.end(), 0.0);
      std::fill(B.begin(), B.end(), 0.0);
      std::size_t state = stream->initial_state;
      double t_prev = 0.0;
      const auto& recs = stream->records;
      for (std::size_t n = 0; n <= recs.size(); ++n) {
        const bool tail = n == recs.size();
        const double t = tail ? stream->horizon : recs[n].time;
        const double d = t - t_prev;

        // Compensator over (t_prev, t] in the constant state.
        for (std::size_t e = 0; e < E; ++e)
          if (gate_(e, state) != 0.0) {
            total -= hp.nu[e] * d;
            if (grad) grad->nu[e] -= d;
          }
        for (std::size_t i = 0; i < M; ++i) {
          const double em1 = std::expm1(-beta[i] * d);
          f[i] = 1.0 + em1;
          g[i] = -em1 / beta[i];
          if (A[i] == 0.0) continue;
          if (gate_(i % E, state) == 0.0) continue;
          total -= alpha[i] * A[i] * g[i];
          if (grad) {
            const double dg = (d * f[i] - g[i]) / beta[i];
            grad->alpha[i] -= A[i] * g[i];
            grad->beta[i] -= alpha[i] * (A[i] * dg - B[i] * g[i]);
          }
        }
        for (std::size_t i = 0; i < M; ++i) {
          if (A[i] == 0.0) continue;
          B[i] = (B[i] + d * A[i]) * f[i];
          A[i] *= f[i];
        }
        if (tail) break;

        // Left-continuous intensity of the observed type.
        const auto& r = recs[n];
        const std::size_t target = r.event;
        double l = hp.nu[target];
        for (std::size_t src = target; src < M; src += E) l += alpha[src] * A[src];
        if (!(l > 0.0)) return -std::numeric_limits<double>::infinity();
        total += std::log(l);
        if (grad) {
          const double inv = 1.0 / l;
          grad->nu[target] += inv;
          for (std::size_t src = target; src < M; src += E) {
            grad->alpha[src] += A[src] * inv;
            grad->beta[src] -= alpha[src] * B[src] * inv;
          }
        }

        const std::size_t base = (static_cast<std::size_t>(r.event) * X + r.state_after) * E;
        for (std::size_t e = 0; e < E; ++e) A[base + e] += 1.0;
        state = r.state_after;
        t_prev = t;
      }
    }
    return static_cast<double>(total);
  }

 private:
  std::vector<const EventStream*> streams_;
  Matrix gate_;
  std::size_t num_events_ = 0;
};

inline double log_lik_hawkes(const std::vector<EventStream>& streams, const ModelSpec& model) {
  std::vector<const EventStream*> ptrs;
  for (const auto& s : streams) ptrs.push_back(&s);
  return HawkesLikelihood(ptrs, model.transition.gate).evaluate(model.hawkes);
}

inline double log_lik_hawkes(const EventStream& stream, const ModelSpec& model) {
  return HawkesLikelihood({&stream}, model.transition.gate).evaluate(model.hawkes);
}

/// Joint likelihood of arrivals and transitions evaluated directly from the
/// per-transition intensities, without using the decomposition.
inline double log_lik_full(const EventStream& stream, const ModelSpec& model) {
  const std::size_t E = model.num_events();
  const std::size_t X = model.num_states();
  RecursionState rec(E, X);
  long double total = 0.0L;
  std::size_t state = stream.initial_state;
  for (std::size_t n = 0; n <= stream.records.size(); ++n) {
    const bool tail = n == stream.records.size();
    const double t = tail ? stream.horizon : stream.records[n].time;
    const auto integral = integrated_raw(rec, model.hawkes, t - rec.last_time);
    for (std::size_t e = 0; e < E; ++e)
      for (std::size_t x = 0; x < X; ++x)
        total -= model.transition.phi(e, state, x) * integral[e];
    advance_in_place(rec, model.hawkes, t);
    if (tail) break;
    const auto& r = stream.records[n];
    const auto iv = intensity(rec, model, state);
    total += std::log(iv.lambda_tilde(r.event, r.state_after));
    register_event_in_place(rec, model.hawkes, r.event, r.state_after);
    state = r.state_after;
  }
  return static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Fitting

struct FitOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  int restarts = 1;
  std::uint64_t seed = 0;
  std::optional<double> init_nu;
  std::optional<double> init_alpha;
  std::optional<double> init_beta;
};

struct FitReport {
  ModelSpec model;
  double log_lik_tp = 0.0;
  double log_lik_hawkes = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::size_t num_events = 0;
  std::vector<double> accepted_values;  // mean log-likelihood per event along the best run
};

inline constexpr double kAlphaFloor = 1e-12;
inline constexpr double kAlphaReportZero = 1e-8;

/// Maps unconstrained log-parameters to (nu, alpha, beta) for a variant.
/// CONST_HAWKES ties kernels across the state mark; POISSON fits nu only.
class ParamLayout {
 public:
  ParamLayout(Variant v, std::size_t E, std::size_t X) : variant_(v), E_(E), X_(X) {}

  std::size_t kernels() const {
    switch (variant_) {
      case Variant::POISSON: return 0;
      case Variant::CONST_HAWKES: return E_ * E_;
      default: return E_ * X_ * E_;
    }
  }
  std::size_t size() const { return E_ + 2 * kernels(); }

  // Kernel slot for the full-tensor entry (src, x, e).
  std::size_t slot(std::size_t src, std::size_t x, std::size_t e) const {
    return variant_ == Variant::CONST_HAWKES ? src * E_ + e : (src * X_ + x) * E_ + e;
  }

  HawkesParams unpack(const std::vector<double>& theta) const {
    HawkesParams hp(E_, X_);
    for (std::size_t e = 0; e < E_; ++e) hp.nu[e] = std::exp(theta[e]);
    if (kernels() == 0) return hp;
    for (std::size_t src = 0; src < E_; ++src)
      for (std::size_t x = 0; x < X_; ++x)
        for (std::size_t e = 0; e < E_; ++e) {
          const std::size_t k = slot(src, x, e);
          hp.alpha(src, x, e) = std::max(std::exp(theta[E_ + k]), kAlphaFloor);
          hp.beta(src, x, e) = std::exp(theta[E_ + kernels() + k]);
        }
    return hp;
  }

  std::vector<double> pack(const HawkesParams& hp) const {
    std::vector<double> theta(size());
    for (std::size_t e = 0; e < E_; ++e) theta[e] = std::log(hp.nu[e]);
    if (kernels() == 0) return theta;
    for (std::size_t src = 0; src < E_; ++src)
      for (std::size_t x = 0; x < X_; ++x)
        for (std::size_t e = 0; e < E_; ++e) {
          const std::size_t k = slot(src, x, e);
          theta[E_ + k] = std::log(std::max(hp.alpha(src, x, e), kAlphaFloor));
          theta[E_ + kernels() + k] = std::log(hp.beta(src, x, e));
        }
    return theta;
  }

  // Chain rule from (nu, alpha, beta) gradients to log-parameter gradients.
  std::vector<double> chain(const std::vector<double>& theta, const HawkesParams& hp,
                            const HawkesLikelihood::Gradient& g) const {
    std::vector<double> out(size(), 0.0);
    for (std::size_t e = 0; e < E_; ++e) out[e] = hp.nu[e] * g.nu[e];
    if (kernels() == 0) return out;
    for (std::size_t src = 0; src < E_; ++src)
      for (std::size_t x = 0; x < X_; ++x)
        for (std::size_t e = 0; e < E_; ++e) {
          const std::size_t k = slot(src, x, e);
          const std::size_t i = hp.alpha.index(src, x, e);
          const double a = std::exp(theta[E_ + k]);
          if (a > kAlphaFloor) out[E_ + k] += a * g.alpha[i];
          out[E_ + kernels() + k] += hp.beta.data()[i] * g.beta[i];
        }
    return out;
  }

 private:
  Variant variant_;
  std::size_t E_, X_;
};

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Per-run seed for run i of an ensemble: splitmix64(master ^ (i * golden)).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t i) {
  return splitmix64(master ^ (i * 0x9E3779B97F4A7C15ULL));
}

inline TransitionKernel transition_for_variant(const TransitionCounts& counts, Variant variant) {
  auto tk = estimate_transition_kernel(counts);
  if (variant == Variant::SD_HAWKES) tk = force_unit_rows(std::move(tk));
  return tk;
}

inline FitReport fit(const std::vector<EventStream>& streams, const Taxonomy& taxonomy,
                     Variant variant, const FitOptions& opts = {}) {
  const std::size_t E = taxonomy.num_events();
  const std::size_t X = taxonomy.num_states();
  std::size_t total_events = 0;
  double last_time_sum = 0.0;
  TransitionCounts counts(E, X);
  for (const auto& s : streams) {
    require_valid(s, taxonomy);
    accumulate_transitions(counts, s);
    total_events += s.records.size();
    if (!s.records.empty()) last_time_sum += s.records.back().time;
  }
  if (total_events == 0) throw Error("cannot fit: no events");

  // Step 1: transition kernel from counts.
  FitReport report;
  report.model.taxonomy = taxonomy;
  report.model.variant = variant;
  report.model.transition = transition_for_variant(counts, variant);
  report.log_lik_tp = log_lik_tp(counts, report.model.transition);
  report.num_events = total_events;

  // Step 2: Hawkes parameters on the gated likelihood.
  std::vector<const EventStream*> ptrs;
  for (const auto& s : streams) ptrs.push_back(&s);
  const Matrix& gate = report.model.transition.gate;
  HawkesLikelihood lik(ptrs, gate);

  std::vector<double> admissible(E, 0.0), per_type(E, 0.0);
  for (const auto& s : streams) {
    std::size_t state = s.initial_state;
    double t_prev = 0.0;
    for (std::size_t n = 0; n <= s.records.size(); ++n) {
      const double t = n == s.records.size() ? s.horizon : s.records[n].time;
      for (std::size_t e = 0; e < E; ++e)
        if (gate(e, state) != 0.0) admissible[e] += t - t_prev;
      if (n == s.records.size()) break;
      per_type[s.records[n].event] += 1.0;
      state = s.records[n].state_after;
      t_prev = t;
    }
  }

  HawkesParams init(E, X);
  const double mean_gap = last_time_sum / static_cast<double>(total_events);
  const double beta0 = opts.init_beta.value_or(mean_gap > 0.0 ? 1.0 / mean_gap : 1.0);
  const double alpha0 = opts.init_alpha.value_or(0.1 * beta0 / static_cast<double>(E * X));
  for (std::size_t e = 0; e < E; ++e) {
    if (opts.init_nu) init.nu[e] = *opts.init_nu;
    else if (admissible[e] > 0.0) init.nu[e] = std::max(per_type[e], 0.5) / admissible[e];
    else init.nu[e] = 1.0;
  }
  if (variant != Variant::POISSON) {
    std::fill(init.alpha.data().begin(), init.alpha.data().end(), alpha0);
    std::fill(init.beta.data().begin(), init.beta.data().end(), beta0);
  }

  const ParamLayout layout(variant, E, X);
  const double scale = 1.0 / static_cast<double>(total_events);
  auto objective = [&](const std::vector<double>& theta, std::vector<double>& grad) {
    const HawkesParams hp = layout.unpack(theta);
    HawkesLikelihood::Gradient g;
    const double v = lik.evaluate(hp, &g);
    if (!std::isfinite(v)) return -std::numeric_limits<double>::infinity();
    grad = layout.chain(theta, hp, g);
    for (auto& x : grad) x *= scale;
    return v * scale;
  };

  BfgsOptions bo;
  bo.max_iterations = opts.max_iterations;
  bo.gradient_tolerance = opts.gradient_tolerance;

  const std::vector<double> theta0 = layout.pack(init);
  std::optional<BfgsResult> best;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    std::vector<double> start = theta0;
    if (r > 0) {
      std::mt19937_64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
      std::normal_distribution<double> jitter(0.0, 0.5);
      for (auto& v : start) v += jitter(rng);
    }
    auto res = bfgs_maximize(objective, start, bo);
    if (!best || res.value > best->value) best = std::move(res);
  }

  HawkesParams fitted = layout.unpack(best->x);
  for (auto& a : fitted.alpha.data())
    if (a < kAlphaReportZero) a = 0.0;
  if (variant == Variant::POISSON) {
    std::fill(fitted.alpha.data().begin(), fitted.alpha.data().end(), 0.0);
    std::fill(fitted.beta.data().begin(), fitted.beta.data().end(), 1.0);
  }
  report.model.hawkes = std::move(fitted);
  report.log_lik_hawkes = lik.evaluate(report.model.hawkes);
  report.iterations = best->iterations;
  report.converged = best->converged;
  report.gradient_norm = best->gradient_norm;
  report.accepted_values = std::move(best->accepted_values);
  return report;
}

inline FitReport fit(const EventStream& stream, const Taxonomy& taxonomy, Variant variant,
                     const FitOptions& opts = {}) {
  return fit(std::vector<EventStream>{stream}, taxonomy, variant, opts);
}

}  // namespace exsd
