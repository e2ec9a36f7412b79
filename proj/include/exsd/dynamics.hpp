#pragma once

// Gated intensities of the state-dependent exponential Hawkes process, the
// O(N) excitation recursion, closed-form compensator segments and the
// integrated-kernel summaries (branching ratios, kernel matrices).

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "exsd/core.hpp"

namespace exsd {

/// Accumulated excitation R[e', x, e]: influence of past events of type e'
/// that left the book in state x on the current intensity of type e.
struct RecursionState {
  Tensor3 R;
  double last_time = 0.0;

  RecursionState() = default;
  RecursionState(std::size_t E, std::size_t X, double t0 = 0.0) : R(E, X, E), last_time(t0) {}
};

struct IntensityVector {
  std::vector<double> lambda_dag;  // gate[e, state] * raw[e]
  Matrix lambda_tilde;             // phi_e(state, x) * raw[e]
  std::vector<double> raw;         // nu[e] + sum R[., ., e]
};

inline void advance_in_place(RecursionState& rec, const HawkesParams& hp, double to_time) {
  const double dt = to_time - rec.last_time;
  if (!(dt >= 0.0)) throw Error("advance: negative time step");
  if (dt > 0.0) {
    auto& R = rec.R.data();
    const auto& B = hp.beta.data();
    for (std::size_t i = 0; i < R.size(); ++i)
      if (R[i] != 0.0) R[i] *= std::exp(-B[i] * dt);
  }
  rec.last_time = to_time;
}

inline RecursionState advance(RecursionState rec, const HawkesParams& hp, double to_time) {
  advance_in_place(rec, hp, to_time);
  return rec;
}

inline void register_event_in_place(RecursionState& rec, const HawkesParams& hp,
                                    std::size_t event, std::size_t post_state) {
  const std::size_t E = rec.R.dim2();
  for (std::size_t e = 0; e < E; ++e) rec.R(event, post_state, e) += hp.alpha(event, post_state, e);
}

inline RecursionState register_event(RecursionState rec, const HawkesParams& hp,
                                     std::size_t event, std::size_t post_state) {
  register_event_in_place(rec, hp, event, post_state);
  return rec;
}

inline std::vector<double> raw_intensity(const RecursionState& rec, const HawkesParams& hp) {
  const std::size_t E = hp.nu.size();
  std::vector<double> raw(hp.nu);
  const auto& R = rec.R.data();
  for (std::size_t src = 0; src < R.size() / E; ++src)
    for (std::size_t e = 0; e < E; ++e) raw[e] += R[src * E + e];
  return raw;
}

inline IntensityVector intensity(const RecursionState& rec, const ModelSpec& model,
                                 std::size_t current_state) {
  const std::size_t E = model.num_events();
  const std::size_t X = model.num_states();
  IntensityVector iv;
  iv.raw = raw_intensity(rec, model.hawkes);
  iv.lambda_dag.resize(E);
  iv.lambda_tilde = Matrix(E, X);
  for (std::size_t e = 0; e < E; ++e) {
    iv.lambda_dag[e] = model.transition.gate(e, current_state) * iv.raw[e];
    for (std::size_t x = 0; x < X; ++x)
      iv.lambda_tilde(e, x) = model.transition.phi(e, current_state, x) * iv.raw[e];
  }
  return iv;
}

/// Ungated integral of the raw intensity over [last_time, last_time + dt]
/// with no events inside the segment.
inline std::vector<double> integrated_raw(const RecursionState& rec, const HawkesParams& hp,
                                          double dt) {
  if (!(dt >= 0.0)) throw Error("compensator: negative segment length");
  const std::size_t E = hp.nu.size();
  std::vector<double> out(E);
  for (std::size_t e = 0; e < E; ++e) out[e] = hp.nu[e] * dt;
  const auto& R = rec.R.data();
  const auto& B = hp.beta.data();
  for (std::size_t i = 0; i < R.size(); ++i) {
    if (R[i] == 0.0) continue;
    out[i % E] += R[i] * (-std::expm1(-B[i] * dt)) / B[i];
  }
  return out;
}

inline std::vector<double> compensator_segment(const RecursionState& rec, const ModelSpec& model,
                                               std::size_t state, double dt) {
  auto out = integrated_raw(rec, model.hawkes, dt);
  for (std::size_t e = 0; e < out.size(); ++e)
    out[e] = model.transition.gate(e, state) == 0.0 ? 0.0 : out[e];
  return out;
}

/// n[e, x] = sum over source types of alpha/beta for kernels marked with x.
inline Matrix branching_ratio(const ModelSpec& model) {
  const std::size_t E = model.num_events();
  const std::size_t X = model.num_states();
  Matrix n(E, X);
  for (std::size_t src = 0; src < E; ++src)
    for (std::size_t x = 0; x < X; ++x)
      for (std::size_t e = 0; e < E; ++e)
        n(e, x) += model.hawkes.alpha(src, x, e) / model.hawkes.beta(src, x, e);
  return n;
}

/// K(x)[e', e] = alpha[e', x, e] / beta[e', x, e].
inline Matrix kernel_matrix(const ModelSpec& model, std::size_t x) {
  const std::size_t E = model.num_events();
  Matrix K(E, E);
  for (std::size_t src = 0; src < E; ++src)
    for (std::size_t e = 0; e < E; ++e)
      K(src, e) = model.hawkes.alpha(src, x, e) / model.hawkes.beta(src, x, e);
  return K;
}

/// Hot-loop variant of the recursion used by simulation and likelihood
/// evaluation. Decay factors are computed once per distinct beta value.
class ExcitationTracker {
 public:
  explicit ExcitationTracker(const HawkesParams& hp)
      : hp_(&hp), E_(hp.nu.size()), R_(hp.alpha.size(), 0.0), group_of_(hp.beta.size()) {
    std::map<double, std::size_t> groups;
    for (std::size_t i = 0; i < hp.beta.size(); ++i) {
      auto [it, inserted] = groups.try_emplace(hp.beta.data()[i], distinct_beta_.size());
      if (inserted) distinct_beta_.push_back(hp.beta.data()[i]);
      group_of_[i] = it->second;
    }
    factor_.resize(distinct_beta_.size());
    raw_.assign(hp.nu.begin(), hp.nu.end());
  }

  void decay(double dt) {
    if (dt <= 0.0) return;
    for (std::size_t g = 0; g < distinct_beta_.size(); ++g)
      factor_[g] = std::exp(-distinct_beta_[g] * dt);
    std::copy(hp_->nu.begin(), hp_->nu.end(), raw_.begin());
    for (std::size_t i = 0; i < R_.size(); ++i) {
      R_[i] *= factor_[group_of_[i]];
      raw_[i % E_] += R_[i];
    }
  }

  void add(std::size_t event, std::size_t post_state) {
    const std::size_t X = hp_->alpha.dim1();
    const std::size_t base = (event * X + post_state) * E_;
    for (std::size_t e = 0; e < E_; ++e) {
      R_[base + e] += hp_->alpha.data()[base + e];
      raw_[e] += hp_->alpha.data()[base + e];
    }
  }

  /// Raw intensities nu + sum R at the current time.
  const std::vector<double>& raw() const { return raw_; }
  const std::vector<double>& excitation() const { return R_; }

 private:
  const HawkesParams* hp_;
  std::size_t E_;
  std::vector<double> R_;
  std::vector<double> distinct_beta_;
  std::vector<std::size_t> group_of_;
  std::vector<double> factor_;
  std::vector<double> raw_;
};

}  // namespace exsd
