#pragma once

// Ogata thinning for the gated state-dependent Hawkes process, with the
// mid-price driven by an event/state impact table.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "exsd/core.hpp"
#include "exsd/dynamics.hpp"
#include "exsd/estimate.hpp"

namespace exsd {

/// delta_m(e, x): mid-price shift in ticks when e arrives in pre-event state x.
struct ImpactTable {
  Matrix delta_m;
  bool operator==(const ImpactTable&) const = default;
};

struct MidPricePath {
  std::vector<double> times;
  std::vector<double> prices;
  double initial_price = 0.0;
  bool operator==(const MidPricePath&) const = default;

  /// Last price at or before t (previous-tick sampling).
  double price_at(double t) const;
};

inline double MidPricePath::price_at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return initial_price;
  return prices[static_cast<std::size_t>(it - times.begin()) - 1];
}

struct ThinningStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  bool operator==(const ThinningStats&) const = default;
};

struct SimResult {
  EventStream stream;
  MidPricePath path;
  ThinningStats thinning_stats;
  bool truncated = false;
  bool operator==(const SimResult&) const = default;
};

struct SimOptions {
  double horizon = 0.0;
  std::size_t initial_state = 0;
  std::uint64_t seed = 0;
  std::uint64_t max_events = 10'000'000;
  double burn_in = 0.0;
  double initial_price = 0.0;
  bool strict_dead_state = true;  // throw, rather than return no events, when nothing is admissible initially
};

namespace detail {

// 53-bit uniform in [0, 1) from a 64-bit engine, independent of the
// standard library's distribution implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

inline SimResult simulate(const ModelSpec& model, const ImpactTable& impact,
                          const SimOptions& opts) {
  require_valid(model);
  const std::size_t E = model.num_events();
  const std::size_t X = model.num_states();
  if (!(opts.horizon > 0.0)) throw Error("simulate: horizon must be positive");
  if (!(opts.burn_in >= 0.0)) throw Error("simulate: burn-in must be non-negative");
  if (opts.initial_state >= X) throw Error("simulate: initial state out of range");
  if (impact.delta_m.rows() != E || impact.delta_m.cols() != X)
    throw Error("simulate: impact table shape does not match taxonomy");

  const auto& gate = model.transition.gate;
  const auto& phi = model.transition.phi;
  {
    bool any = false;
    for (std::size_t e = 0; e < E; ++e) any = any || gate(e, opts.initial_state) != 0.0;
    if (!any && opts.strict_dead_state)
      throw Error("absorbing dead state: no event is admissible in the initial state");
  }

  std::mt19937_64 rng(opts.seed);
  ExcitationTracker exc(model.hawkes);

  SimResult res;
  const double t_end = opts.burn_in + opts.horizon;
  std::size_t state = opts.initial_state;
  double price = opts.initial_price;
  double t = 0.0;
  bool recording = opts.burn_in == 0.0;
  std::uint64_t simulated = 0;
  std::vector<double> dag(E);

  auto start_recording = [&] {
    recording = true;
    res.stream.initial_state = static_cast<StateIndex>(state);
    res.path.initial_price = price;
  };
  if (recording) start_recording();

  auto gated_total = [&] {
    double total = 0.0;
    const auto& raw = exc.raw();
    for (std::size_t e = 0; e < E; ++e) {
      dag[e] = gate(e, state) * raw[e];
      total += dag[e];
    }
    return total;
  };

  double bound = gated_total();
  while (true) {
    if (!(bound > 0.0)) break;  // nothing admissible and no excitation can arrive
    const double u = detail::uniform01(rng);
    const double w = -std::log1p(-u) / bound;
    const double cand = t + w;
    if (!recording && cand > opts.burn_in) start_recording();
    if (cand > t_end) break;
    exc.decay(cand - t);
    t = cand;
    if (recording) ++res.thinning_stats.proposals;
    const double total = gated_total();
    if (detail::uniform01(rng) * bound > total) {
      if (recording) ++res.thinning_stats.rejected;
      bound = total;
      continue;
    }

    double pick = detail::uniform01(rng) * total;
    std::size_t e = 0;
    for (; e + 1 < E; ++e) {
      if (pick < dag[e]) break;
      pick -= dag[e];
    }
    while (dag[e] == 0.0 && e > 0) --e;  // rounding guard

    double v = detail::uniform01(rng);
    std::size_t next = X - 1;
    for (std::size_t y = 0; y < X; ++y) {
      const double p = phi(e, state, y);
      if (v < p) {
        next = y;
        break;
      }
      v -= p;
    }
    while (phi(e, state, next) == 0.0 && next > 0) --next;

    price += impact.delta_m(e, state);
    if (recording) {
      ++res.thinning_stats.accepted;
      const double rt = t - opts.burn_in;
      res.stream.records.push_back({rt, static_cast<EventIndex>(e), static_cast<StateIndex>(state),
                                    static_cast<StateIndex>(next)});
      res.path.times.push_back(rt);
      res.path.prices.push_back(price);
    }
    exc.add(e, next);
    state = next;
    bound = gated_total();
    if (++simulated >= opts.max_events && t < t_end) {
      res.truncated = true;
      break;
    }
  }
  if (!recording) start_recording();
  res.stream.horizon = res.truncated && !res.stream.records.empty()
                           ? res.stream.records.back().time
                           : opts.horizon;
  return res;
}

inline SimResult simulate(const ModelSpec& model, const ImpactTable& impact, double horizon,
                          std::size_t initial_state, std::uint64_t seed,
                          std::uint64_t max_events = 10'000'000) {
  SimOptions o;
  o.horizon = horizon;
  o.initial_state = initial_state;
  o.seed = seed;
  o.max_events = max_events;
  return simulate(model, impact, o);
}

/// Runs `runs` independent simulations with seeds derive_seed(master, i) on
/// `jobs` threads. `sink(i, result)` is called from worker threads, once per
/// index; results do not depend on the job count.
inline void run_ensemble(const ModelSpec& model, const ImpactTable& impact, SimOptions base,
                         std::uint64_t master_seed, std::size_t runs, std::size_t jobs,
                         const std::function<void(std::size_t, SimResult&&)>& sink) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs) return;
      try {
        SimOptions o = base;
        o.seed = derive_seed(master_seed, i);
        sink(i, simulate(model, impact, o));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = runs;
        return;
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, runs));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

inline MidPricePath replay_midprice(const EventStream& stream, const ImpactTable& impact,
                                    double initial_price) {
  MidPricePath path;
  path.initial_price = initial_price;
  double price = initial_price;
  for (const auto& r : stream.records) {
    price += impact.delta_m(r.event, r.state_before);
    path.times.push_back(r.time);
    path.prices.push_back(price);
  }
  return path;
}

}  // namespace exsd
