#include <gtest/gtest.h>

#include <random>

#include "exsd/io.hpp"
#include "exsd/scenarios.hpp"
#include "test_support.hpp"

using namespace exsd;
using testing_support::letters;
using testing_support::random_model;
using testing_support::random_stream;
using testing_support::temp_dir;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

ModelSpec default_taxonomy_model(std::uint64_t seed) {
  auto m = random_model(14, 2, seed, Variant::EXSD_HAWKES);
  const auto t = default_taxonomy();
  m.taxonomy = t;
  return m;
}

}  // namespace

TEST(Numbers, ShortestRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10'000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(*parse_double(format_double(v)), v);
    EXPECT_EQ(*parse_double(format_fixed(std::abs(v))), std::abs(v));
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_fixed(1.5), "1.5");
  EXPECT_EQ(format_fixed(1e-7), "0.0000001");
  EXPECT_FALSE(parse_double("1.0x").has_value());
  EXPECT_FALSE(parse_double("").has_value());
}

TEST(StreamFile, ThreeRecordRoundTrip) {
  const auto t = letters(2, 2);
  EventStream s;
  s.horizon = 10.0;
  s.records = {{0.5, 0, 0, 1}, {1.25, 1, 1, 1}, {7.000000001, 0, 1, 0}};
  const auto text = serialize_stream(s, t);
  const auto f = parse_stream(text);
  EXPECT_EQ(f.stream, s);
  EXPECT_EQ(f.taxonomy, t);
  EXPECT_EQ(serialize_stream(f.stream, f.taxonomy), text);
}

TEST(StreamFile, RandomRoundTripIsExact) {
  const auto m = random_model(4, 3, 2, Variant::EXSD_HAWKES);
  const auto s = random_stream(m, 2'000, 23'400.0, 3);
  const auto f = parse_stream(serialize_stream(s, m.taxonomy));
  EXPECT_EQ(f.stream, s);
}

TEST(StreamFile, FileRoundTrip) {
  const auto dir = temp_dir("io_stream");
  const auto m = random_model(3, 2, 4, Variant::EXSD_HAWKES);
  const auto s = random_stream(m, 50, 100.0, 5);
  write_stream(s, m.taxonomy, dir + "/s.csv");
  const auto f = read_stream_file(dir + "/s.csv");
  EXPECT_EQ(f.stream, s);
  EXPECT_EQ(f.taxonomy, m.taxonomy);
}

TEST(StreamFile, HeaderOnlyUsesHorizonComment) {
  const auto f = parse_stream("# horizon=3600\ntime_s,event,state_before,state_after\n",
                              {default_taxonomy(), std::nullopt});
  EXPECT_TRUE(f.stream.records.empty());
  EXPECT_EQ(f.stream.horizon, 3600.0);
}

TEST(StreamFile, HeaderOnlyUsesHorizonFlag) {
  const auto f = parse_stream("time_s,event,state_before,state_after\n", {default_taxonomy(), 12.5});
  EXPECT_TRUE(f.stream.records.empty());
  EXPECT_EQ(f.stream.horizon, 12.5);
}

TEST(StreamFile, FlagOverridesComment) {
  const auto f = parse_stream("# horizon=3600\ntime_s,event,state_before,state_after\n", {default_taxonomy(), 60.0});
  EXPECT_EQ(f.stream.horizon, 60.0);
}

TEST(StreamFile, MissingHorizonIsAnError) {
  EXPECT_NE(error_of([] { parse_stream("time_s,event,state_before,state_after\n", {default_taxonomy(), std::nullopt}); }),
            "");
}

TEST(StreamFile, OutOfOrderTimeCitesLine) {
  // Line 1 is the comment, line 2 the header, records start on line 3.
  std::string text = "# horizon=1000\ntime_s,event,state_before,state_after\n";
  for (int i = 0; i < 39; ++i) text += std::to_string(i + 1) + ",LB,1,1\n";
  text += "5,LB,1,1\n";
  const auto msg = error_of([&] { parse_stream(text, {default_taxonomy(), std::nullopt}); });
  EXPECT_NE(msg.find("line 42"), std::string::npos) << msg;
}

TEST(StreamFile, UnknownCodeIsNamed) {
  const std::string text = "# horizon=10\ntime_s,event,state_before,state_after\n1,ZZZ,1,1\n";
  const auto msg = error_of([&] { parse_stream(text, {default_taxonomy(), std::nullopt}); });
  EXPECT_NE(msg.find("ZZZ"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(StreamFile, MalformedLinesRejected) {
  const std::string head = "# horizon=10\ntime_s,event,state_before,state_after\n";
  const StreamReadOptions o{default_taxonomy(), std::nullopt};
  EXPECT_NE(error_of([&] { parse_stream(head + "1,LB,1\n", o); }).find("line 3"), std::string::npos);
  EXPECT_NE(error_of([&] { parse_stream(head + "abc,LB,1,1\n", o); }).find("line 3"), std::string::npos);
  EXPECT_NE(error_of([&] { parse_stream(head + "1,LB,1,2+\n2,LB,1,1\n", o); }).find("line 4"), std::string::npos);
  EXPECT_NE(error_of([&] { parse_stream(head + "11,LB,1,1\n", o); }), "");
  EXPECT_NE(error_of([&] { parse_stream("time,event\n", o); }), "");
}

TEST(ModelFile, DefaultTaxonomyRoundTrip) {
  const auto m = default_taxonomy_model(6);
  ASSERT_TRUE(validate_model(m).empty());
  const auto text = serialize_model(m);
  const auto back = parse_model(text);
  EXPECT_EQ(back, m);
  EXPECT_EQ(serialize_model(back), text);
}

TEST(ModelFile, FileRoundTripAllVariants) {
  const auto dir = temp_dir("io_model");
  for (auto v : {Variant::POISSON, Variant::CONST_HAWKES, Variant::SD_HAWKES, Variant::EXSD_HAWKES}) {
    const auto m = random_model(3, 2, 7, v);
    write_model(m, dir + "/m.json");
    EXPECT_EQ(read_model(dir + "/m.json"), m) << to_string(v);
  }
}

TEST(ModelFile, NearlyUnitRowRejected) {
  auto j = model_to_json(default_taxonomy_model(8));
  j["phi"][0][0][0] = j["phi"][0][0][0].get<double>() - 0.001;
  const auto msg = error_of([&] { model_from_json(j); });
  EXPECT_NE(msg, "");
}

TEST(ModelFile, TinyRowSumDriftIsRenormalized) {
  const auto m = default_taxonomy_model(9);
  auto j = model_to_json(m);
  j["phi"][0][0][0] = j["phi"][0][0][0].get<double>() + 1e-14;
  const auto back = model_from_json(j);
  EXPECT_EQ(back.transition.row_sum(0, 0), 1.0);
  EXPECT_TRUE(validate_model(back).empty());
}

TEST(ModelFile, UnsupportedVersionRejected) {
  auto j = model_to_json(default_taxonomy_model(10));
  j["version"] = "v2";
  const auto msg = error_of([&] { model_from_json(j); });
  EXPECT_NE(msg.find("v2"), std::string::npos) << msg;
}

TEST(ModelFile, ShapeMismatchRejected) {
  auto j = model_to_json(random_model(3, 2, 11, Variant::EXSD_HAWKES));
  j["nu"].push_back(1.0);
  EXPECT_NE(error_of([&] { model_from_json(j); }), "");
  auto k = model_to_json(random_model(3, 2, 11, Variant::EXSD_HAWKES));
  k["alpha"].erase(0);
  EXPECT_NE(error_of([&] { model_from_json(k); }), "");
}

TEST(ModelFile, GateMustMatchRows) {
  auto j = model_to_json(random_model(3, 2, 12, Variant::EXSD_HAWKES));
  j["gate"][1][0] = 1.0;  // row (1, 0) is all zeros in this model
  EXPECT_NE(error_of([&] { model_from_json(j); }), "");
}

TEST(ImpactFile, RoundTripAndTaxonomyCheck) {
  const auto dir = temp_dir("io_impact");
  const auto sc = make_scenario("dual-regime");
  write_impact(sc.impact, sc.model.taxonomy, dir + "/i.json");
  EXPECT_EQ(read_impact(dir + "/i.json", sc.model.taxonomy), sc.impact);
  EXPECT_THROW(read_impact(dir + "/i.json", default_taxonomy()), Error);
}

TEST(MidPriceFile, RoundTrip) {
  MidPricePath p;
  p.initial_price = 100.0;
  p.times = {0.1, 0.30000000000000004, 5.0};
  p.prices = {100.5, 101.0, 99.5};
  const auto f = parse_midprice(serialize_midprice(p, 6.0));
  EXPECT_EQ(f.path, p);
  EXPECT_EQ(f.horizon, 6.0);
}

TEST(Manifest, RoundTrip) {
  SimManifest m;
  m.model = "model.json";
  m.impact = "impact.json";
  m.master_seed = 0xFFFFFFFFFFFFFFFFull;
  m.horizon = 7200.0;
  m.max_events = 10'000'000;
  for (std::size_t i = 0; i < 3; ++i)
    m.runs.push_back({i, derive_seed(1, i), "stream.csv", "mid.csv", 10 * i, i == 1, 7200.0});
  const auto text = serialize_manifest(m);
  const auto back = parse_manifest(text);
  EXPECT_EQ(serialize_manifest(back), text);
  EXPECT_EQ(back.master_seed, m.master_seed);
  EXPECT_EQ(back.truncated_count(), 1u);
  ASSERT_EQ(back.runs.size(), 3u);
  EXPECT_EQ(back.runs[2].seed, derive_seed(1, 2));
}

TEST(Taxonomy, JsonRoundTrip) {
  const auto t = default_taxonomy();
  EXPECT_EQ(taxonomy_from_json(taxonomy_to_json(t), "t"), t);
}

TEST(Exports, CsvShapes) {
  ResidualSeries s;
  s.key = "LB";
  s.values = {0.5, 1.5, 1.0};
  const auto r = residuals_csv({s});
  EXPECT_EQ(r, "key,index,value\nLB,0,0.5\nLB,1,1.5\nLB,2,1\n");
  const auto q = qq_csv({s});
  EXPECT_EQ(q.substr(0, q.find('\n')), "key,theoretical,empirical");
  EXPECT_EQ(std::count(q.begin(), q.end(), '\n'), 4);
  // Series shorter than the lag are skipped, the header remains.
  EXPECT_EQ(acf_csv({s}, 5), "key,lag,acf,band\n");
  SignatureCurve c;
  c.deltas = {1.0};
  c.rv = {0.25};
  c.std_error = {0.0};
  c.n_paths = 1;
  EXPECT_EQ(signature_csv(c), "delta,rv_mean,rv_stderr,n_paths\n1,0.25,0,1\n");
}
