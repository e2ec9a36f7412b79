#pragma once

// Domain types shared by every module: alphabets, event streams, the gated
// transition kernel and the exponential Hawkes parameter tensors.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace exsd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major tensors. Shapes are fixed at construction.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t d0, std::size_t d1, std::size_t d2, double fill = 0.0)
      : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, fill) {}

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * d1_ + j) * d2_ + k;
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[index(i, j, k)]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[index(i, j, k)];
  }

  std::size_t dim0() const { return d0_; }
  std::size_t dim1() const { return d1_; }
  std::size_t dim2() const { return d2_; }
  std::size_t size() const { return data_.size(); }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t d0_ = 0, d1_ = 0, d2_ = 0;
  std::vector<double> data_;
};

using EventIndex = std::uint16_t;
using StateIndex = std::uint16_t;

struct EventType {
  std::string code;
  std::size_t index = 0;
  bool operator==(const EventType&) const = default;
};

struct SpreadState {
  std::string label;
  std::size_t index = 0;
  bool operator==(const SpreadState&) const = default;
};

class Taxonomy {
 public:
  Taxonomy() = default;
  Taxonomy(std::vector<std::string> event_codes, std::vector<std::string> state_labels) {
    if (event_codes.empty()) throw Error("taxonomy needs at least one event type");
    if (state_labels.empty()) throw Error("taxonomy needs at least one state");
    if (event_codes.size() > 65535 || state_labels.size() > 65535)
      throw Error("taxonomy too large");
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < event_codes.size(); ++i) {
      if (event_codes[i].empty()) throw Error("empty event code");
      if (!seen.insert(event_codes[i]).second)
        throw Error("duplicate event code '" + event_codes[i] + "'");
      events_.push_back({std::move(event_codes[i]), i});
    }
    seen.clear();
    for (std::size_t i = 0; i < state_labels.size(); ++i) {
      if (state_labels[i].empty()) throw Error("empty state label");
      if (!seen.insert(state_labels[i]).second)
        throw Error("duplicate state label '" + state_labels[i] + "'");
      states_.push_back({std::move(state_labels[i]), i});
    }
  }

  std::size_t num_events() const { return events_.size(); }
  std::size_t num_states() const { return states_.size(); }
  const std::vector<EventType>& events() const { return events_; }
  const std::vector<SpreadState>& states() const { return states_; }

  std::size_t event_index(std::string_view code) const {
    for (const auto& e : events_)
      if (e.code == code) return e.index;
    throw Error("unknown event code '" + std::string(code) + "'");
  }
  std::size_t state_index(std::string_view label) const {
    for (const auto& s : states_)
      if (s.label == label) return s.index;
    throw Error("unknown state label '" + std::string(label) + "'");
  }

  bool operator==(const Taxonomy&) const = default;

 private:
  std::vector<EventType> events_;
  std::vector<SpreadState> states_;
};

/// Default shipped alphabet: 14 event codes and the {1, 2+} spread states.
/// Only ALB/ALS/AMB/AMS/MLB/MLS are named after known order classes; the
/// rest are placeholders for passive, cancellation and market flow.
inline Taxonomy default_taxonomy() {
  return Taxonomy({"MLB", "MLS", "ALB", "ALS", "AMB", "AMS", "MB", "MS", "LB", "LS", "CB", "CS",
                   "OB", "OS"},
                  {"1", "2+"});
}

struct EventRecord {
  double time = 0.0;  // seconds since session start
  EventIndex event = 0;
  StateIndex state_before = 0;
  StateIndex state_after = 0;
  bool operator==(const EventRecord&) const = default;
};

struct EventStream {
  std::vector<EventRecord> records;
  StateIndex initial_state = 0;
  double horizon = 0.0;
  bool operator==(const EventStream&) const = default;
};

struct Violation {
  std::string kind;
  std::size_t position = 0;  // record number / flat tensor offset, when meaningful
  std::string message;
};

inline std::vector<Violation> validate_stream(const EventStream& stream, const Taxonomy& taxonomy) {
  std::vector<Violation> out;
  const auto E = taxonomy.num_events();
  const auto X = taxonomy.num_states();
  if (!(stream.horizon >= 0.0) || !std::isfinite(stream.horizon))
    out.push_back({"horizon", 0, "horizon must be finite and non-negative"});
  if (stream.initial_state >= X)
    out.push_back({"index-range", 0, "initial state out of range"});
  std::size_t prev_state = stream.initial_state;
  double prev_time = 0.0;
  for (std::size_t n = 0; n < stream.records.size(); ++n) {
    const auto& r = stream.records[n];
    if (!std::isfinite(r.time) || r.time <= 0.0)
      out.push_back({"time-range", n, "time must be finite and positive"});
    else if (n > 0 && !(r.time > prev_time))
      out.push_back({"non-increasing-time", n, "times must be strictly increasing"});
    if (std::isfinite(r.time) && r.time > stream.horizon)
      out.push_back({"time-range", n, "time beyond horizon"});
    if (r.event >= E) out.push_back({"index-range", n, "event index out of range"});
    if (r.state_before >= X || r.state_after >= X)
      out.push_back({"index-range", n, "state index out of range"});
    if (r.state_before != prev_state)
      out.push_back({"state-chain", n, "state_before does not match previous state_after"});
    prev_state = r.state_after;
    prev_time = r.time;
  }
  return out;
}

struct TransitionKernel {
  Tensor3 phi;  // E x X x X
  Matrix gate;  // E x X, entries 0 or 1

  TransitionKernel() = default;
  TransitionKernel(std::size_t E, std::size_t X) : phi(E, X, X), gate(E, X) {}

  std::size_t num_events() const { return phi.dim0(); }
  std::size_t num_states() const { return phi.dim1(); }

  /// Left-to-right row sum; the binary row-sum invariant is checked on this value.
  double row_sum(std::size_t e, std::size_t x) const {
    double s = 0.0;
    for (std::size_t y = 0; y < phi.dim2(); ++y) s += phi(e, x, y);
    return s;
  }

  /// Rewrites the last non-zero entry of a row so its left-to-right sum is
  /// exactly 1 (or zeroes the row), and sets the gate accordingly.
  void normalize_row(std::size_t e, std::size_t x) {
    const std::size_t X = phi.dim2();
    std::size_t last = X;
    for (std::size_t y = 0; y < X; ++y)
      if (phi(e, x, y) != 0.0) last = y;
    if (last == X) {
      gate(e, x) = 0.0;
      return;
    }
    double head = 0.0;
    for (std::size_t y = 0; y < last; ++y) head += phi(e, x, y);
    phi(e, x, last) = 1.0 - head;
    gate(e, x) = 1.0;
  }

  bool operator==(const TransitionKernel&) const = default;
};

struct HawkesParams {
  std::vector<double> nu;  // E
  Tensor3 alpha;           // E' x X x E : source type, source post-state, target
  Tensor3 beta;            // E' x X x E

  HawkesParams() = default;
  HawkesParams(std::size_t E, std::size_t X)
      : nu(E, 1.0), alpha(E, X, E, 0.0), beta(E, X, E, 1.0) {}

  bool operator==(const HawkesParams&) const = default;
};

enum class Variant { POISSON, CONST_HAWKES, SD_HAWKES, EXSD_HAWKES };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::POISSON: return "POISSON";
    case Variant::CONST_HAWKES: return "CONST_HAWKES";
    case Variant::SD_HAWKES: return "SD_HAWKES";
    case Variant::EXSD_HAWKES: return "EXSD_HAWKES";
  }
  return "?";
}

/// Accepts both the canonical names and the short CLI spellings.
inline Variant parse_variant(std::string_view s) {
  if (s == "POISSON" || s == "poisson") return Variant::POISSON;
  if (s == "CONST_HAWKES" || s == "const") return Variant::CONST_HAWKES;
  if (s == "SD_HAWKES" || s == "sd") return Variant::SD_HAWKES;
  if (s == "EXSD_HAWKES" || s == "exsd") return Variant::EXSD_HAWKES;
  throw Error("unknown variant '" + std::string(s) + "'");
}

struct ModelSpec {
  Taxonomy taxonomy;
  Variant variant = Variant::EXSD_HAWKES;
  TransitionKernel transition;
  HawkesParams hawkes;

  std::size_t num_events() const { return taxonomy.num_events(); }
  std::size_t num_states() const { return taxonomy.num_states(); }

  bool operator==(const ModelSpec&) const = default;
};

inline std::vector<Violation> validate_model(const ModelSpec& spec) {
  std::vector<Violation> out;
  const auto E = spec.num_events();
  const auto X = spec.num_states();
  const auto& tk = spec.transition;
  const auto& hp = spec.hawkes;

  bool shapes_ok = true;
  auto shape = [&](bool ok, const char* what) {
    if (!ok) {
      out.push_back({"shape", 0, std::string(what) + " does not match taxonomy"});
      shapes_ok = false;
    }
  };
  shape(tk.phi.dim0() == E && tk.phi.dim1() == X && tk.phi.dim2() == X, "phi");
  shape(tk.gate.rows() == E && tk.gate.cols() == X, "gate");
  shape(hp.nu.size() == E, "nu");
  shape(hp.alpha.dim0() == E && hp.alpha.dim1() == X && hp.alpha.dim2() == E, "alpha");
  shape(hp.beta.dim0() == E && hp.beta.dim1() == X && hp.beta.dim2() == E, "beta");
  if (!shapes_ok) return out;

  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t x = 0; x < X; ++x) {
      const std::size_t pos = e * X + x;
      for (std::size_t y = 0; y < X; ++y) {
        const double p = tk.phi(e, x, y);
        if (!(p >= 0.0 && p <= 1.0))
          out.push_back({"phi-range", pos, "phi entry outside [0,1]"});
      }
      const double g = tk.gate(e, x);
      if (g != 0.0 && g != 1.0) out.push_back({"gate-value", pos, "gate must be 0 or 1"});
      const double s = tk.row_sum(e, x);
      if (s != 0.0 && s != 1.0)
        out.push_back({"row-sum", pos, "phi row sum " + std::to_string(s) + " is not 0 or 1"});
      else if (s != g)
        out.push_back({"gate-mismatch", pos, "gate disagrees with phi row sum"});
      if (spec.variant == Variant::SD_HAWKES && s == 0.0)
        out.push_back({"variant", pos, "SD_HAWKES requires every row sum to be 1"});
    }
    if (!(hp.nu[e] > 0.0) || !std::isfinite(hp.nu[e]))
      out.push_back({"nu", e, "baseline must be finite and positive"});
  }
  for (std::size_t i = 0; i < hp.alpha.size(); ++i) {
    const double a = hp.alpha.data()[i];
    const double b = hp.beta.data()[i];
    if (!(a >= 0.0) || !std::isfinite(a)) out.push_back({"alpha", i, "alpha must be >= 0"});
    if (!(b > 0.0) || !std::isfinite(b)) out.push_back({"beta", i, "beta must be > 0"});
  }
  if (spec.variant == Variant::POISSON) {
    for (std::size_t i = 0; i < hp.alpha.size(); ++i)
      if (hp.alpha.data()[i] != 0.0) {
        out.push_back({"variant", i, "POISSON requires alpha == 0"});
        break;
      }
  }
  if (spec.variant == Variant::CONST_HAWKES) {
    for (std::size_t a = 0; a < E; ++a)
      for (std::size_t x = 1; x < X; ++x)
        for (std::size_t e = 0; e < E; ++e)
          if (hp.alpha(a, x, e) != hp.alpha(a, 0, e) || hp.beta(a, x, e) != hp.beta(a, 0, e))
            out.push_back({"variant", hp.alpha.index(a, x, e),
                           "CONST_HAWKES requires state-independent kernels"});
  }
  return out;
}

inline void require_valid(const ModelSpec& spec) {
  auto v = validate_model(spec);
  if (!v.empty()) throw Error("invalid model: " + v.front().kind + ": " + v.front().message);
}

inline void require_valid(const EventStream& stream, const Taxonomy& taxonomy) {
  auto v = validate_stream(stream, taxonomy);
  if (!v.empty())
    throw Error("invalid stream at record " + std::to_string(v.front().position) + ": " +
                v.front().kind + ": " + v.front().message);
}

}  // namespace exsd
