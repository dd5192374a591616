#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "v2xslice/mac.hpp"

namespace v2xslice {
namespace {

TEST(SensingMemory, ConstantPowerAveragesToItself) {
  SensingMemory mem(100, 3);
  const std::vector<double> p(3, 1.0);
  for (Slot t = 0; t < 100; ++t) mem.push(t, p);
  for (int m = 0; m < 3; ++m) EXPECT_DOUBLE_EQ(mem.average(m), 1.0);
}

TEST(SensingMemory, HalfOnHalfOffAveragesToMidpoint) {
  SensingMemory mem(100, 1);
  for (Slot t = 0; t < 100; ++t) mem.push(t, std::vector<double>{t < 50 ? 2.0 : 0.0});
  EXPECT_DOUBLE_EQ(mem.average(0), 1.0);
}

TEST(SensingMemory, RandomWindowMatchesResummation) {
  Engine rng = make_engine(4);
  SensingMemory mem(100, 2);
  std::vector<std::vector<double>> all;
  for (Slot t = 0; t < 250; ++t) {
    std::vector<double> p{uniform01(rng), uniform01(rng)};
    all.push_back(p);
    mem.push(t, p);
  }
  for (int m = 0; m < 2; ++m) {
    double s = 0.0;
    for (std::size_t t = 150; t < 250; ++t) s += all[t][static_cast<std::size_t>(m)];
    EXPECT_NEAR(mem.average(m), s / 100.0, 1e-12);
  }
  EXPECT_EQ(mem.size(), 100);
  EXPECT_FALSE(mem.sample(0, 149).has_value());
  EXPECT_EQ(*mem.sample(1, 200), all[200][1]);
}

TEST(SensingMemory, HistoryWalksBackByPeriod) {
  SensingMemory mem(100, 1);
  for (Slot t = 0; t < 100; ++t) mem.push(t, std::vector<double>{static_cast<double>(t)});
  // Resource at slot 130 with period 50: samples at 80 and 30, newest first.
  EXPECT_EQ(mem.history(0, 130, 50), (std::vector<double>{80.0, 30.0}));
  EXPECT_DOUBLE_EQ(mem.predicted(0, 130, 50), 55.0);
  EXPECT_DOUBLE_EQ(mem.predicted(0, 130, 50, 1), 80.0);
}

TEST(SensingMemory, SlotsMustIncrease) {
  SensingMemory mem(4, 1);
  mem.push(5, std::vector<double>{1.0});
  EXPECT_THROW(mem.push(5, std::vector<double>{1.0}), ContractViolation);
}

TEST(Candidates, CountUsesCeilingWithFloorOfOne) {
  EXPECT_EQ(candidate_count(10, 20), 2u);
  EXPECT_EQ(candidate_count(11, 20), 3u);
  EXPECT_EQ(candidate_count(1, 20), 1u);
  EXPECT_EQ(candidate_count(100, 20), 20u);
}

TEST(Candidates, DistinctRssiReturnsTheLowestTwoOfTen) {
  Engine rng = make_engine(8);
  std::vector<RankedResource> r;
  for (int m = 0; m < 2; ++m)
    for (Slot t = 1; t <= 5; ++t) r.push_back({{m, t}, uniform01(rng)});
  auto sorted = r;
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.rssi < b.rssi; });
  const auto c = bottom_candidates(r, 20);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], sorted[0].resource);
  EXPECT_EQ(c[1], sorted[1].resource);
}

TEST(Candidates, TiesFollowIndexOrder) {
  std::vector<RankedResource> r;
  for (int m = 1; m >= 0; --m)
    for (Slot t = 5; t >= 1; --t) r.push_back({{m, t}, 1.0});
  const auto c = bottom_candidates(r, 20);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (Resource{0, 1}));
  EXPECT_EQ(c[1], (Resource{0, 2}));
}

TEST(Candidates, SingleResourceWindow) {
  SensingMemory mem(100, 1);
  const auto c = candidate_list(mem, 1, 7, 7, 50, 20);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], (Resource{0, 7}));
}

TEST(Candidates, ListPrefersQuietResourcesOverTheWindow) {
  SensingMemory mem(100, 2);
  // Subchannel 1 was busy 50 slots before slots 103 and 104.
  for (Slot t = 0; t < 100; ++t) {
    const bool busy = t == 53 || t == 54;
    mem.push(t, std::vector<double>{1.0, busy ? 0.0 : 1.0});
  }
  const auto c = candidate_list(mem, 2, 101, 110, 50, 10);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (Resource{1, 103}));
  EXPECT_EQ(c[1], (Resource{1, 104}));
}

TEST(Selection, SingletonAlwaysChosen) {
  Engine rng = make_engine(1);
  const std::vector<Resource> one{{3, 9}};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(select_resource(one, rng), one[0]);
}

TEST(Selection, UniformOverFourCandidates) {
  Engine rng = make_engine(2);
  const std::vector<Resource> four{{0, 1}, {0, 2}, {1, 1}, {1, 2}};
  std::map<Slot, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto r = select_resource(four, rng);
    ++counts[r.subchannel * 10 + r.slot];
  }
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [k, c] : counts) EXPECT_NEAR(c / static_cast<double>(n), 0.25, 0.01) << k;
}

TEST(Selection, SameSeedSameChoice) {
  const std::vector<Resource> cands{{0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 5}};
  Engine a = make_engine(99), b = make_engine(99);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(select_resource(cands, a), select_resource(cands, b));
  EXPECT_THROW(select_resource(std::vector<Resource>{}, a), ContractViolation);
}

TEST(Reservation, CounterDrawnInRange) {
  Engine rng = make_engine(5);
  MacParams p;
  std::vector<int> seen(16, 0);
  for (int i = 0; i < 20000; ++i) {
    const auto r = make_reservation({1, 120}, 100, p, rng);
    EXPECT_EQ(r.offset, 20);
    ASSERT_GE(r.counter, 5);
    ASSERT_LE(r.counter, 15);
    ++seen[static_cast<std::size_t>(r.counter)];
  }
  for (int c = 5; c <= 15; ++c) EXPECT_GT(seen[static_cast<std::size_t>(c)], 0);
  EXPECT_THROW(make_reservation({0, 100}, 100, p, rng), ContractViolation);
}

TEST(Reselection, BoundaryProbabilities) {
  Engine rng = make_engine(6);
  MacParams always, never;
  always.p_res = 1.0;
  never.p_res = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Reservation r{0, 5, 0};
    EXPECT_EQ(maybe_reselect(r, always, rng), ReselectDecision::kReselect);
    Reservation k{0, 5, 0};
    EXPECT_EQ(maybe_reselect(k, never, rng), ReselectDecision::kKeep);
    EXPECT_GE(k.counter, never.counter_min);
  }
}

TEST(Reselection, FrequencyMatchesPres) {
  Engine rng = make_engine(7);
  MacParams p;
  int reselected = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    Reservation r{0, 5, 0};
    reselected += maybe_reselect(r, p, rng) == ReselectDecision::kReselect;
  }
  EXPECT_NEAR(reselected / static_cast<double>(n), 0.2, 0.01);
}

TEST(Reselection, EarlyCallIsAContractViolation) {
  Engine rng = make_engine(7);
  Reservation r{0, 5, 3};
  EXPECT_THROW(maybe_reselect(r, MacParams{}, rng), ContractViolation);
}

TEST(Occupancy, TwoOfFourUsed) {
  const std::vector<SubchannelUse> u{{1, 1}, {2, 3}};
  EXPECT_DOUBLE_EQ(occupancy(4, u), 0.5);
}

TEST(Occupancy, EmptyIsZero) { EXPECT_DOUBLE_EQ(occupancy(4, {}), 0.0); }

TEST(Occupancy, IndicatorSaturates) {
  std::vector<SubchannelUse> u;
  for (int m = 0; m < 3; ++m)
    for (VueId v = 0; v < 2; ++v) u.push_back({v, m});
  EXPECT_DOUBLE_EQ(occupancy(3, u), 1.0);
}

TEST(Occupancy, IncrementalGridMatchesDirectCount) {
  Engine rng = make_engine(12);
  UsageGrid grid({6});
  for (int trial = 0; trial < 500; ++trial) {
    grid.clear();
    std::vector<SubchannelUse> uses;
    const int f = 1 + static_cast<int>(uniform_index(rng, 6));
    const int n = static_cast<int>(uniform_index(rng, 8));
    for (int i = 0; i < n; ++i) {
      const int m = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(f)));
      grid.add(0, m);
      uses.push_back({static_cast<VueId>(i), m});
    }
    std::vector<bool> hit(static_cast<std::size_t>(f), false);
    for (const auto& u : uses) hit[static_cast<std::size_t>(u.subchannel)] = true;
    const double expected = static_cast<double>(std::count(hit.begin(), hit.end(), true)) / f;
    EXPECT_EQ(grid.occupancy(0, f), expected);
  }
}

}  // namespace
}  // namespace v2xslice
