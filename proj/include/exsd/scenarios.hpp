#pragma once

// Reference synthetic scenarios on a four-type book: marketable limit orders
// (MLB/MLS) and price-improving limit orders (ALB/ALS) over the {1, 2+}
// spread states. Price improvement is inadmissible at the one-tick spread.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "exsd/core.hpp"
#include "exsd/diagnostics.hpp"
#include "exsd/simulate.hpp"

namespace exsd {

struct Scenario {
  ModelSpec model;
  ImpactTable impact;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"poisson", "subcritical", "dual-regime", "sd-leaky"};
  return names;
}

/// Target spectral radii of the dual-regime scenario per spread state.
inline constexpr double kDualRegimeRhoEquilibrium = 0.19;
inline constexpr double kDualRegimeRhoDisequilibrium = 2.67;

namespace scenario_detail {

enum : std::size_t { MLB = 0, MLS = 1, ALB = 2, ALS = 3 };
enum : std::size_t { ONE = 0, WIDE = 1 };

inline Taxonomy book_taxonomy() { return Taxonomy({"MLB", "MLS", "ALB", "ALS"}, {"1", "2+"}); }

inline bool buy_side(std::size_t e) { return e == MLB || e == ALB; }

inline TransitionKernel book_transitions() {
  TransitionKernel tk(4, 2);
  auto set = [&](std::size_t e, std::size_t x, double to_one, double to_wide) {
    tk.phi(e, x, ONE) = to_one;
    tk.phi(e, x, WIDE) = to_wide;
    tk.normalize_row(e, x);
  };
  for (std::size_t e : {MLB, MLS}) {
    set(e, ONE, 0.3, 0.7);   // an MLO usually opens the spread
    set(e, WIDE, 0.2, 0.8);  // and rarely closes it
  }
  for (std::size_t e : {ALB, ALS}) {
    tk.gate(e, ONE) = 0.0;    // no price improvement at the minimum spread
    set(e, WIDE, 0.8, 0.2);   // improvement usually closes the spread
  }
  return tk;
}

// +-0.5 ticks at the one-tick spread, +-1 tick when the spread is wide.
inline ImpactTable book_impact() {
  ImpactTable t{Matrix(4, 2)};
  for (std::size_t e = 0; e < 4; ++e) {
    const double sign = buy_side(e) ? 1.0 : -1.0;
    t.delta_m(e, ONE) = 0.5 * sign;
    t.delta_m(e, WIDE) = 1.0 * sign;
  }
  return t;
}

// Kernel matrix with mirrored buy/sell structure: a buy-side source excites
// targets (MLB, MLS, ALB, ALS) by `buy_row`; a sell-side source by its mirror.
// Its Perron root is the sum of the row entries.
inline void set_mirrored(HawkesParams& hp, std::size_t x, std::array<double, 4> buy_row,
                         double beta) {
  const std::array<double, 4> sell_row{buy_row[1], buy_row[0], buy_row[3], buy_row[2]};
  for (std::size_t src = 0; src < 4; ++src) {
    const auto& row = buy_side(src) ? buy_row : sell_row;
    for (std::size_t e = 0; e < 4; ++e) {
      hp.alpha(src, x, e) = row[e] * beta;
      hp.beta(src, x, e) = beta;
    }
  }
}

inline double row_total(const std::array<double, 4>& r) { return r[0] + r[1] + r[2] + r[3]; }

inline std::array<double, 4> scaled(std::array<double, 4> r, double target) {
  const double s = target / row_total(r);
  for (auto& v : r) v *= s;
  return r;
}

inline Scenario dual_regime(Variant variant) {
  Scenario sc;
  sc.model.taxonomy = book_taxonomy();
  sc.model.variant = variant;
  sc.model.transition = book_transitions();
  HawkesParams hp(4, 2);
  hp.nu = {0.5, 0.5, 0.2, 0.2};
  // Equilibrium: sparse, mostly MLO-on-MLO excitation.
  set_mirrored(hp, ONE, scaled({0.03, 0.12, 0.03, 0.01}, kDualRegimeRhoEquilibrium), 1.0);
  // Disequilibrium: opposite-side improvement dominates, i.e. the spread is
  // refilled against the MLO that opened it.
  set_mirrored(hp, WIDE, scaled({0.1, 0.07, 0.2, 2.3}, kDualRegimeRhoDisequilibrium), 1.0);
  sc.model.hawkes = std::move(hp);
  sc.impact = book_impact();
  if (variant == Variant::SD_HAWKES) sc.model.transition = force_unit_rows(sc.model.transition);
  return sc;
}

}  // namespace scenario_detail

inline Scenario make_scenario(std::string_view name) {
  using namespace scenario_detail;
  if (name == "poisson") {
    Scenario sc;
    sc.model.taxonomy = book_taxonomy();
    sc.model.variant = Variant::POISSON;
    sc.model.transition = book_transitions();
    sc.model.hawkes = HawkesParams(4, 2);
    sc.model.hawkes.nu = {0.5, 0.5, 2.0, 2.0};
    sc.impact = book_impact();
    return sc;
  }
  if (name == "subcritical") {
    Scenario sc;
    sc.model.taxonomy = book_taxonomy();
    sc.model.variant = Variant::EXSD_HAWKES;
    sc.model.transition = book_transitions();
    // Frequent spread changes keep every (source, post-state) mark well populated.
    auto& tk = sc.model.transition;
    for (std::size_t e : {MLB, MLS}) {
      tk.phi(e, ONE, ONE) = 0.05;
      tk.phi(e, ONE, WIDE) = 0.95;
      tk.phi(e, WIDE, ONE) = 0.5;
      tk.phi(e, WIDE, WIDE) = 0.5;
    }
    for (std::size_t e : {ALB, ALS}) {
      tk.phi(e, WIDE, ONE) = 0.7;
      tk.phi(e, WIDE, WIDE) = 0.3;
    }
    for (std::size_t e = 0; e < 4; ++e)
      for (std::size_t x = 0; x < 2; ++x) tk.normalize_row(e, x);
    HawkesParams hp(4, 2);
    for (std::size_t e = 0; e < 4; ++e) hp.nu[e] = 0.15 * (1.0 + 0.2 * static_cast<double>(e));
    for (std::size_t src = 0; src < 4; ++src)
      for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t e = 0; e < 4; ++e) {
          // Kernels into the gated types from the one-tick state only fire after a
          // widening event, so they get a slower decay and more mass.
          const bool gated_target = x == ONE && (e == ALB || e == ALS);
          const double ratio = 0.2 * (0.8 + 0.15 * static_cast<double>((src + 2 * x + 3 * e) % 3)) *
                               (gated_target ? 1.5 : 1.0);
          const double beta = gated_target ? 4.0 : 20.0 * (1.0 + 0.25 * static_cast<double>((src + x + e) % 3));
          hp.alpha(src, x, e) = ratio * beta;
          hp.beta(src, x, e) = beta;
        }
    sc.model.hawkes = std::move(hp);
    sc.impact = book_impact();
    return sc;
  }
  if (name == "dual-regime") return dual_regime(Variant::EXSD_HAWKES);
  if (name == "sd-leaky") return dual_regime(Variant::SD_HAWKES);
  throw Error("unknown scenario '" + std::string(name) + "'");
}

/// Default impact for the shipped 14-type taxonomy: aggressive order classes
/// move the mid by +-0.5 ticks at the one-tick spread and +-1 tick otherwise.
inline ImpactTable default_impact(const Taxonomy& taxonomy) {
  ImpactTable t{Matrix(taxonomy.num_events(), taxonomy.num_states())};
  for (const auto& ev : taxonomy.events()) {
    const auto& c = ev.code;
    const bool aggressive = c.rfind("ML", 0) == 0 || c.rfind("AL", 0) == 0 || c.rfind("AM", 0) == 0 ||
                            c == "MB" || c == "MS";
    if (!aggressive) continue;
    const double sign = c.back() == 'B' ? 1.0 : -1.0;
    for (const auto& st : taxonomy.states())
      t.delta_m(ev.index, st.index) = (st.index == 0 ? 0.5 : 1.0) * sign;
  }
  return t;
}

}  // namespace exsd
