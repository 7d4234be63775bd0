#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lifeadd/des.hpp"

using namespace lifeadd;

namespace {

double ks_p_value(std::vector<double> x, double rate) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = 1 - std::exp(-rate * x[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double q = 0;
  for (int k = 1; k < 100; ++k) q += 2 * ((k % 2) ? 1 : -1) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace

TEST(SimTime, RoundsHalfUpToNanoseconds) {
  EXPECT_EQ(SimTime::from_seconds(1.4e-9).ns, 1u);
  EXPECT_EQ(SimTime::from_seconds(2.5e-9).ns, 3u);
  EXPECT_EQ(SimTime::from_seconds(900e-6).ns, 900000u);
  EXPECT_EQ(SimTime::from_seconds(4e-6).ns, 4000u);
  EXPECT_EQ(SimTime::from_seconds(0.0).ns, 0u);
  EXPECT_NEAR(SimTime{1500}.seconds(), 1.5e-6, 1e-18);
}

TEST(SimTime, AdditionSaturates) {
  EXPECT_EQ((SimTime::max() + SimTime{5}).ns, SimTime::max().ns);
  EXPECT_EQ(SimTime::from_seconds(1e30).ns, SimTime::max().ns);
}

TEST(EventQueue, TieBreakBySequence) {
  EventQueue q;
  q.schedule(SimTime{5}, EventKind::Wake, 1);
  q.schedule(SimTime{5}, EventKind::Wake, 2);
  EXPECT_EQ(q.next().device, 1);
  EXPECT_EQ(q.next().device, 2);
}

TEST(EventQueue, TimeOrder) {
  EventQueue q;
  q.schedule(SimTime{5}, EventKind::TxEnd, 1);
  q.schedule(SimTime{3}, EventKind::TxEnd, 2);
  const auto b = q.next();
  EXPECT_EQ(b.device, 2);
  EXPECT_EQ(q.now().ns, 3u);
  EXPECT_EQ(q.next().device, 1);
}

TEST(EventQueue, EmptyYieldsEndOfSim) {
  EventQueue q;
  EXPECT_EQ(q.next().kind, EventKind::EndOfSim);
}

TEST(EventQueue, PastSchedulingIsCausalityViolation) {
  EventQueue q;
  q.schedule(SimTime{10}, EventKind::Wake, 0);
  q.next();
  EXPECT_THROW(q.schedule(SimTime{9}, EventKind::Wake, 0), CausalityViolation);
  EXPECT_NO_THROW(q.schedule(SimTime{10}, EventKind::Wake, 0));
}

TEST(EventQueue, ManyEventsDequeueInOrder) {
  EventQueue q;
  RandomStream rng(3, 0);
  for (int i = 0; i < 10000; ++i) q.schedule(SimTime{rng.uniform_below(1000)}, EventKind::Wake, i);
  SimTime last{};
  std::uint64_t last_seq = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto e = q.next();
    ASSERT_TRUE(e.time > last || (e.time == last && (i == 0 || e.sequence > last_seq)));
    last = e.time;
    last_seq = e.sequence;
  }
  EXPECT_EQ(q.processed(), 10000u);
}

TEST(RandomStream, DeterministicAndIndependentOfOtherStreams) {
  RandomStream a(42, 7), b(42, 7);
  RandomStream other(42, 8);
  for (int i = 0; i < 1000; ++i) {
    other();  // consumption elsewhere has no effect
    EXPECT_EQ(a(), b());
  }
  RandomStream c(42, 7), d(42, 9), e(43, 7);
  int same_d = 0, same_e = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = c();
    same_d += x == d();
    same_e += x == e();
  }
  EXPECT_EQ(same_d, 0);
  EXPECT_EQ(same_e, 0);
  EXPECT_EQ(kPrngId, "xoshiro256**/splitmix64(seed,stream)");
}

TEST(RandomStream, UniformRanges) {
  RandomStream r(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform_open_closed();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
    ASSERT_LT(r.uniform_below(7), 7u);
  }
}

TEST(Exponential, SampleMean) {
  RandomStream r(2024, 0);
  const int n = 1000000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += sample_exponential(r, 1000.0);
  EXPECT_NEAR(s / n, 1e-3, 0.003 * 1e-3);
}

TEST(Exponential, UnitUniformMapsToZero) {
  EXPECT_EQ(exponential_from_uniform(1.0, 1000.0), 0.0);
  EXPECT_TRUE(std::isfinite(exponential_from_uniform(0x1.0p-53, 1000.0)));
  EXPECT_THROW(exponential_from_uniform(0.0, 1.0), InvalidArgument);
  RandomStream r(1, 0);
  EXPECT_THROW(sample_exponential(r, 0.0), InvalidArgument);
}

TEST(Exponential, Memoryless) {
  RandomStream r(99, 3);
  const double rate = 500.0, t = 1.0 / rate;
  std::vector<double> residual, fresh;
  while (residual.size() < 100000) {
    const double x = sample_exponential(r, rate);
    if (x > t) residual.push_back(x - t);
  }
  for (int i = 0; i < 100000; ++i) fresh.push_back(sample_exponential(r, rate));
  EXPECT_GT(ks_p_value(residual, rate), 0.01);
  EXPECT_GT(ks_p_value(fresh, rate), 0.01);
}

TEST(EventKind, Names) {
  EXPECT_EQ(to_string(EventKind::Wake), "wake");
  EXPECT_EQ(to_string(EventKind::AckEnd), "ack_end");
  EXPECT_EQ(to_string(EventKind::EndOfSim), "end_of_sim");
}
