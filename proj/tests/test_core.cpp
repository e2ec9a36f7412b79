#include <gtest/gtest.h>

#include "exsd/core.hpp"
#include "test_support.hpp"

using namespace exsd;

namespace {

bool has_kind(const std::vector<Violation>& v, const std::string& kind) {
  for (const auto& x : v)
    if (x.kind == kind) return true;
  return false;
}

}  // namespace

TEST(Taxonomy, DefaultHasFourteenEventsAndTwoStates) {
  const auto t = default_taxonomy();
  EXPECT_EQ(t.num_events(), 14u);
  EXPECT_EQ(t.num_states(), 2u);
  EXPECT_EQ(t.event_index("MLB"), 0u);
  EXPECT_EQ(t.state_index("2+"), 1u);
}

TEST(Taxonomy, RejectsDuplicatesAndUnknownCodes) {
  EXPECT_THROW(Taxonomy({"A", "A"}, {"1"}), Error);
  EXPECT_THROW(Taxonomy({"A"}, {"1", "1"}), Error);
  EXPECT_THROW(Taxonomy({}, {"1"}), Error);
  const Taxonomy t({"A", "B"}, {"1"});
  EXPECT_THROW(t.event_index("C"), Error);
  EXPECT_THROW(t.state_index("2"), Error);
}

TEST(ValidateStream, EmptyStreamIsValid) {
  EventStream s;
  s.horizon = 10.0;
  EXPECT_TRUE(validate_stream(s, default_taxonomy()).empty());
}

TEST(ValidateStream, EqualTimesAreNonIncreasing) {
  EventStream s;
  s.horizon = 10.0;
  s.records = {{1.0, 0, 0, 0}, {1.0, 0, 0, 0}};
  const auto v = validate_stream(s, default_taxonomy());
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v.front().kind, "non-increasing-time");
  EXPECT_EQ(v.front().position, 1u);
}

TEST(ValidateStream, BrokenStateChain) {
  EventStream s;
  s.horizon = 10.0;
  s.records = {{1.0, 0, 0, 1}, {2.0, 0, 0, 0}};
  EXPECT_TRUE(has_kind(validate_stream(s, default_taxonomy()), "state-chain"));
}

TEST(ValidateStream, InitialStateMustMatchFirstRecord) {
  EventStream s;
  s.horizon = 10.0;
  s.initial_state = 1;
  s.records = {{1.0, 0, 0, 1}};
  EXPECT_TRUE(has_kind(validate_stream(s, default_taxonomy()), "state-chain"));
}

TEST(ValidateStream, IndexAndTimeRange) {
  EventStream s;
  s.horizon = 1.0;
  s.records = {{2.0, 20, 0, 0}};
  const auto v = validate_stream(s, default_taxonomy());
  EXPECT_TRUE(has_kind(v, "index-range"));
  EXPECT_TRUE(has_kind(v, "time-range"));
}

TEST(ValidateStream, FoldedStateChainMatchesRecords) {
  // Property: for a valid stream the chain rebuilt from state_after agrees.
  const auto m = testing_support::random_model(4, 2, 11, Variant::EXSD_HAWKES);
  const auto s = testing_support::random_stream(m, 300, 50.0, 12);
  ASSERT_TRUE(validate_stream(s, m.taxonomy).empty());
  std::size_t state = s.initial_state;
  for (const auto& r : s.records) {
    EXPECT_EQ(r.state_before, state);
    state = r.state_after;
  }
}

TEST(ValidateModel, RowSumMustBeExactlyZeroOrOne) {
  auto m = testing_support::random_model(2, 2, 1, Variant::EXSD_HAWKES);
  m.transition.phi(0, 0, 0) = 0.3;
  m.transition.phi(0, 0, 1) = 0.4;
  EXPECT_TRUE(has_kind(validate_model(m), "row-sum"));
}

TEST(ValidateModel, SdVariantRejectsZeroRows) {
  auto m = testing_support::random_model(2, 2, 1, Variant::SD_HAWKES);
  m.transition.phi(1, 0, 0) = 0.0;
  m.transition.phi(1, 0, 1) = 0.0;
  m.transition.gate(1, 0) = 0.0;
  EXPECT_TRUE(has_kind(validate_model(m), "variant"));
}

TEST(ValidateModel, PoissonWithZeroAlphaIsValid) {
  auto m = testing_support::random_model(3, 2, 5, Variant::POISSON);
  EXPECT_TRUE(validate_model(m).empty());
  m.hawkes.alpha(0, 0, 0) = 0.1;
  EXPECT_TRUE(has_kind(validate_model(m), "variant"));
}

TEST(ValidateModel, GateMustMatchRowSum) {
  auto m = testing_support::random_model(2, 2, 3, Variant::EXSD_HAWKES);
  m.transition.gate(0, 0) = 1.0 - m.transition.gate(0, 0);
  EXPECT_FALSE(validate_model(m).empty());
}

TEST(ValidateModel, ParameterDomains) {
  auto m = testing_support::random_model(2, 2, 3, Variant::EXSD_HAWKES);
  m.hawkes.nu[0] = 0.0;
  m.hawkes.alpha(0, 0, 0) = -1.0;
  m.hawkes.beta(0, 0, 0) = 0.0;
  const auto v = validate_model(m);
  EXPECT_TRUE(has_kind(v, "nu"));
  EXPECT_TRUE(has_kind(v, "alpha"));
  EXPECT_TRUE(has_kind(v, "beta"));
}

TEST(ValidateModel, ConstVariantRejectsStateDependence) {
  auto m = testing_support::random_model(2, 2, 3, Variant::CONST_HAWKES);
  EXPECT_TRUE(validate_model(m).empty());
  m.hawkes.alpha(0, 1, 0) += 0.01;
  EXPECT_TRUE(has_kind(validate_model(m), "variant"));
}

TEST(TransitionKernel, NormalizeRowMakesLeftToRightSumExact) {
  TransitionKernel tk(1, 3);
  tk.phi(0, 0, 0) = 0.1;
  tk.phi(0, 0, 1) = 0.2;
  tk.phi(0, 0, 2) = 0.7000000001;
  tk.normalize_row(0, 0);
  EXPECT_EQ(tk.row_sum(0, 0), 1.0);
  EXPECT_EQ(tk.gate(0, 0), 1.0);
  TransitionKernel z(1, 2);
  z.normalize_row(0, 1);
  EXPECT_EQ(z.gate(0, 1), 0.0);
}

TEST(Variant, ParseAndPrint) {
  for (auto v : {Variant::POISSON, Variant::CONST_HAWKES, Variant::SD_HAWKES, Variant::EXSD_HAWKES})
    EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("hawkes"), Error);
}
