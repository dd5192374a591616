#include <gtest/gtest.h>

#include <set>

#include "v2xslice/rng.hpp"
#include "v2xslice/scenario.hpp"
#include "v2xslice/types.hpp"

namespace v2xslice {
namespace {

TEST(ActionSpace, SingletonGrid) {
  const std::vector<SliceGrid> g{{{2}, {1'000'000}, {10}}};
  const auto space = build_action_space(g, 10'000'000);
  ASSERT_EQ(space.size(), 1u);
  EXPECT_EQ(space.at(0).slices[0], (SliceParams{2, 1'000'000, 10}));
}

TEST(ActionSpace, InfeasibleGridThrows) {
  const std::vector<SliceGrid> g{{{4}, {2'160'000}, {10}}, {{4}, {2'160'000}, {10}}};
  EXPECT_THROW(build_action_space(g, 10'000'000), ConfigError);
}

TEST(ActionSpace, DefaultGridMatchesBruteForceCount) {
  const Scenario s = default_scenario();
  std::size_t expected = 0;
  const auto& a = s.slices[0].grid;
  const auto& b = s.slices[1].grid;
  for (int f1 : a.subchannels)
    for (Hz b1 : a.bandwidths)
      for (std::size_t w1 = 0; w1 < a.selection_windows.size(); ++w1)
        for (int f2 : b.subchannels)
          for (Hz b2 : b.bandwidths)
            for (std::size_t w2 = 0; w2 < b.selection_windows.size(); ++w2)
              if (f1 * b1 + f2 * b2 <= s.total_bandwidth) ++expected;
  const auto space = s.action_space();
  EXPECT_EQ(space.size(), expected);
  EXPECT_EQ(space.size(), 88u);
  std::set<std::string> distinct;
  for (const auto& c : space.configs()) {
    EXPECT_LE(c.total_bandwidth(), s.total_bandwidth);
    distinct.insert(c.to_string());
  }
  EXPECT_EQ(distinct.size(), space.size());
}

TEST(ActionSpace, OutOfRangeIndexIsContractViolation) {
  const auto space = default_scenario().action_space();
  EXPECT_THROW(space.at(space.size()), ContractViolation);
  EXPECT_EQ(space.max_subchannels(0), 4);
}

TEST(Observation, TwoSliceNormalization) {
  const Observation o{{{10, 0.5}, {20, 1.0}}};
  const auto v = observation_to_vector(o, ObservationNorm{20});
  EXPECT_EQ(v.values, (std::vector<double>{0.5, 0.5, 1.0, 1.0}));
  EXPECT_FALSE(v.clamped);
}

TEST(Observation, ZeroObservation) {
  const Observation o{{{0, 0.0}, {0, 0.0}}};
  EXPECT_EQ(observation_to_vector(o, ObservationNorm{20}).values, (std::vector<double>(4, 0.0)));
}

TEST(Observation, SingleSliceHandArithmetic) {
  const auto v = observation_to_vector(Observation{{{7, 0.25}}}, ObservationNorm{10});
  ASSERT_EQ(v.values.size(), 2u);
  EXPECT_DOUBLE_EQ(v.values[0], 0.7);
  EXPECT_DOUBLE_EQ(v.values[1], 0.25);
}

TEST(Observation, CountAboveCapIsClampedAndFlagged) {
  const auto v = observation_to_vector(Observation{{{30, 0.1}}}, ObservationNorm{20});
  EXPECT_DOUBLE_EQ(v.values[0], 1.0);
  EXPECT_TRUE(v.clamped);
}

TEST(HistoryWindow, ZeroPaddedThenSliding) {
  HistoryWindow w(3, 2);
  EXPECT_EQ(w.data(), std::vector<double>(6, 0.0));
  const std::vector<double> a{1, 2}, b{3, 4}, c{5, 6}, d{7, 8};
  w.push(a);
  EXPECT_EQ(w.data(), (std::vector<double>{0, 0, 0, 0, 1, 2}));
  w.push(b);
  w.push(c);
  w.push(d);
  EXPECT_EQ(w.data(), (std::vector<double>{3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(w.row(0)[0], 3);
  EXPECT_THROW(w.push(std::vector<double>{1}), ContractViolation);
}

TEST(SliceSpec, RejectsInvertedThresholds) {
  SliceSpec s;
  s.pdr_min = 0.2;
  s.pdr_max = 0.1;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Seeds, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(1, "a"), derive_seed(1, "a"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
  EXPECT_NE(derive_seed(1, "a", {0}), derive_seed(1, "a", {1}));
  EXPECT_NE(derive_seed(1, "a", {0, 1}), derive_seed(1, "a", {1, 0}));
  static_assert(derive_seed(3, "x") == derive_seed(3, "x"));
}

TEST(Rng, UniformIndexFrequencies) {
  Engine e = make_engine(11);
  std::vector<int> counts(5, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[uniform_index(e, 5)];
  for (int c : counts) EXPECT_NEAR(c / static_cast<double>(n), 0.2, 0.01);
}

TEST(Rng, CounterRngIsAPureFunction) {
  const CounterRng r(42);
  EXPECT_EQ(r.bits(1, 2, 3, 4), CounterRng(42).bits(1, 2, 3, 4));
  EXPECT_NE(r.bits(1, 2, 3, 4), r.bits(1, 2, 3, 5));
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += r.exponential(static_cast<std::uint64_t>(i));
  EXPECT_NEAR(sum / n, 1.0, 0.01);
}

}  // namespace
}  // namespace v2xslice
