#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "layercast/galois.hpp"
#include "layercast/recovery.hpp"

namespace lc = layercast;
namespace gf = layercast::galois;

namespace {

constexpr double tol = lc::probability_tolerance;

double choose(std::size_t n, std::size_t r) {
  double c = 1.0;
  for (std::size_t i = 1; i <= r; ++i) c = c * static_cast<double>(n - r + i) / static_cast<double>(i);
  return c;
}

// Direct nested summation of the EW model: every r_1..r_l outcome is
// enumerated, r_min,l is taken from r_min_sequence and the decoding term is
// prob_decode(K_l, sum r).
double ew_nested_sum(const lc::LayeredMessage& msg, const std::vector<std::size_t>& N, double p,
                     lc::FieldSize q, std::size_t layers) {
  if (N[layers - 1] == 0) return 0.0;
  std::vector<std::size_t> r(msg.layers(), 0);
  double total = 0.0;
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double weight) {
    if (i == layers) {
      const auto rmin = lc::r_min_sequence(msg, r);
      for (std::size_t last = rmin[layers - 1]; last <= N[layers - 1]; ++last) {
        std::size_t sum = last;
        for (std::size_t j = 0; j + 1 < layers; ++j) sum += r[j];
        const double w = choose(N[layers - 1], last) * std::pow(p, double(N[layers - 1] - last)) *
                         std::pow(1.0 - p, double(last));
        total += weight * w * lc::prob_decode(msg.window_size(layers), sum, q);
      }
      return;
    }
    if (i + 1 == layers) {
      rec(i + 1, weight);
      return;
    }
    for (std::size_t ri = 0; ri <= N[i]; ++ri) {
      r[i] = ri;
      const double w =
          choose(N[i], ri) * std::pow(p, double(N[i] - ri)) * std::pow(1.0 - p, double(ri));
      rec(i + 1, weight * w);
    }
    r[i] = 0;
  };
  rec(0, 1.0);
  return total;
}

}  // namespace

TEST(ProbDecodeTest, ClosedFormValues) {
  EXPECT_NEAR(lc::prob_decode(1, 1, lc::FieldSize{2}), 0.5, tol);
  EXPECT_NEAR(lc::prob_decode(2, 2, lc::FieldSize{2}), 0.375, tol);
  EXPECT_EQ(lc::prob_decode(5, 4, lc::FieldSize{256}), 0.0);
  EXPECT_EQ(lc::prob_decode(3, 0, lc::FieldSize{2}), 0.0);
}

TEST(ProbDecodeTest, AgreesWithRankFrequency) {
  for (auto [k, r] : {std::pair<std::size_t, std::size_t>{1, 1}, {2, 2}}) {
    const auto emp = gf::simulate_full_rank(k, r, lc::FieldSize{2}, {100000, 5, 0});
    const double exact = lc::prob_decode(k, r, lc::FieldSize{2});
    EXPECT_NEAR(emp.value(), exact, 3.0 * std::sqrt(exact * (1 - exact) / 100000.0));
  }
}

TEST(ProbDecodeTest, NonDecreasingInReceivedCountAndFieldSize) {
  const unsigned qs[] = {2, 4, 16, 256};
  for (std::size_t k = 1; k <= 10; ++k) {
    for (std::size_t r = 0; r <= 20; ++r) {
      for (std::size_t i = 0; i < 4; ++i) {
        const lc::FieldSize q{qs[i]};
        const double v = lc::prob_decode(k, r, q);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_LE(v, lc::prob_decode(k, r + 1, q) + tol);
        if (i + 1 < 4) {
          EXPECT_LE(v, lc::prob_decode(k, r, lc::FieldSize{qs[i + 1]}) + tol);
        }
      }
    }
  }
}

TEST(ProbReceiveTest, BinomialValues) {
  EXPECT_NEAR(lc::prob_receive(5, 5, lc::ErasureRate{0.0}), 1.0, tol);
  EXPECT_NEAR(lc::prob_receive(5, 4, lc::ErasureRate{0.0}), 0.0, tol);
  EXPECT_NEAR(lc::prob_receive(2, 1, lc::ErasureRate{0.5}), 0.5, tol);
  EXPECT_NEAR(lc::prob_receive(4, 0, lc::ErasureRate{1.0}), 1.0, tol);
  EXPECT_THROW(lc::prob_receive(3, 4, lc::ErasureRate{0.1}), std::invalid_argument);
  EXPECT_THROW(lc::ErasureRate{-0.1}, std::invalid_argument);
}

TEST(ProbReceiveTest, SumsToOne) {
  for (std::size_t n : {1u, 10u, 57u, 400u}) {
    for (double p : {0.0, 0.1, 0.5, 0.93, 1.0}) {
      double sum = 0.0;
      for (std::size_t r = 0; r <= n; ++r) sum += lc::prob_receive(n, r, lc::ErasureRate{p});
      EXPECT_NEAR(sum, 1.0, 1e-9) << "n=" << n << " p=" << p;
    }
  }
  // n=10, r=8, p=0.1 by hand: 45 * 0.01 * 0.9^8.
  EXPECT_NEAR(lc::prob_receive(10, 8, lc::ErasureRate{0.1}), 45 * 0.01 * std::pow(0.9, 8), tol);
}

TEST(ProbNowTest, LayerValues) {
  const double lossless = lc::prob_now_layer(5, 5, lc::ErasureRate{0.0}, lc::FieldSize{256});
  EXPECT_NEAR(lossless, lc::prob_decode(5, 5, lc::FieldSize{256}), tol);
  EXPECT_NEAR(lossless, 0.99607843, 1e-6);
  EXPECT_EQ(lc::prob_now_layer(5, 9, lc::ErasureRate{1.0}, lc::FieldSize{2}), 0.0);
  EXPECT_EQ(lc::prob_now_layer(5, 4, lc::ErasureRate{0.0}, lc::FieldSize{256}), 0.0);
}

TEST(ProbNowTest, LayerMatchesMonteCarlo) {
  const lc::LayeredMessage msg{{5}};
  const std::vector<std::size_t> n{7};
  const auto c = gf::simulate_now_recovery(msg, n, 0.1, lc::FieldSize{2}, {100000, 2, 0});
  const double exact = lc::prob_now_layer(5, 7, lc::ErasureRate{0.1}, lc::FieldSize{2});
  EXPECT_NEAR(c.at(1).value(), exact, 3.0 * std::sqrt(exact * (1 - exact) / 1e5));
}

TEST(ProbNowTest, JointIsProductOfLayers) {
  const lc::LayeredMessage msg{{3, 2, 4}};
  const std::vector<std::size_t> n{5, 4, 7};
  const lc::ErasureRate p{0.15};
  const lc::FieldSize q{4};
  EXPECT_NEAR(lc::prob_now_joint(msg, n, p, q, 1), lc::prob_now_layer(3, 5, p, q), tol);
  EXPECT_NEAR(lc::prob_now_joint(msg, n, p, q, 3),
              lc::prob_now_layer(3, 5, p, q) * lc::prob_now_layer(2, 4, p, q) *
                  lc::prob_now_layer(4, 7, p, q),
              tol);
  const std::vector<std::size_t> starved{5, 1, 7};
  EXPECT_EQ(lc::prob_now_joint(msg, starved, p, q, 2), 0.0);
  EXPECT_EQ(lc::prob_now_joint(msg, starved, p, q, 3), 0.0);
  EXPECT_GT(lc::prob_now_joint(msg, starved, p, q, 1), 0.0);
  EXPECT_THROW(lc::prob_now_joint(msg, n, p, q, 4), std::out_of_range);
  EXPECT_THROW(lc::prob_now_joint(msg, n, p, q, 0), std::out_of_range);
}

TEST(ProbNowTest, JointMatchesErasurePatternEnumeration) {
  // Enumerate all 2^(n1+n2) erasure patterns of two independent layers.
  const lc::LayeredMessage msg{{2, 3}};
  const std::vector<std::size_t> n{4, 5};
  for (unsigned qv : {2u, 16u}) {
    const lc::FieldSize q{qv};
    for (double p : {0.05, 0.3}) {
      double total = 0.0;
      const unsigned bits = 9;
      for (unsigned mask = 0; mask < (1u << bits); ++mask) {
        std::size_t r1 = 0;
        std::size_t r2 = 0;
        for (unsigned b = 0; b < bits; ++b) {
          if (mask & (1u << b)) (b < 4 ? r1 : r2) += 1;
        }
        const double w = std::pow(1 - p, double(r1 + r2)) * std::pow(p, double(bits - r1 - r2));
        total += w * lc::prob_decode(2, r1, q) * lc::prob_decode(3, r2, q);
      }
      EXPECT_NEAR(lc::prob_now_joint(msg, n, lc::ErasureRate{p}, q, 2), total, tol);
    }
  }
}

TEST(ProbNowTest, MonotoneInLayersAndCounts) {
  std::mt19937_64 rng{9};
  for (int i = 0; i < 200; ++i) {
    const lc::LayeredMessage msg{{1 + rng() % 5, 1 + rng() % 5, 1 + rng() % 5}};
    std::vector<std::size_t> n{rng() % 10, rng() % 10, rng() % 10};
    const lc::ErasureRate p{double(rng() % 50) / 100.0};
    const lc::FieldSize q{(rng() % 2) ? 2u : 16u};
    for (std::size_t l = 1; l < 3; ++l) {
      EXPECT_GE(lc::prob_now_joint(msg, n, p, q, l) + tol, lc::prob_now_joint(msg, n, p, q, l + 1));
    }
    for (std::size_t j = 0; j < 3; ++j) {
      auto more = n;
      ++more[j];
      for (std::size_t l = 1; l <= 3; ++l) {
        EXPECT_LE(lc::prob_now_joint(msg, n, p, q, l), lc::prob_now_joint(msg, more, p, q, l) + tol);
      }
    }
  }
}

TEST(RMinTest, Recursion) {
  const auto msg = lc::LayeredMessage::from_windows(std::vector<std::size_t>{5, 10, 15});
  EXPECT_EQ(lc::r_min_sequence(msg, std::vector<std::size_t>{0, 0, 0})[0], 5u);
  EXPECT_EQ(lc::r_min_sequence(msg, std::vector<std::size_t>{5, 0, 0})[1], 5u);
  EXPECT_EQ(lc::r_min_sequence(msg, std::vector<std::size_t>{0, 0, 0}),
            (std::vector<std::size_t>{5, 10, 15}));
  // Surplus in window 1 is not carried forward.
  EXPECT_EQ(lc::r_min_sequence(msg, std::vector<std::size_t>{9, 2, 0}),
            (std::vector<std::size_t>{5, 5, 8}));
  EXPECT_THROW(lc::r_min_sequence(msg, std::vector<std::size_t>{1, 2}), std::invalid_argument);
}

TEST(ProbEwTest, SingleWindowIsNowLayer) {
  const lc::LayeredMessage msg{{6}};
  for (std::size_t n = 0; n < 14; ++n) {
    for (double p : {0.0, 0.1, 0.3}) {
      for (unsigned q : {2u, 256u}) {
        const std::vector<std::size_t> N{n};
        EXPECT_NEAR(lc::prob_ew_joint(msg, N, lc::ErasureRate{p}, lc::FieldSize{q}, 1),
                    lc::prob_now_layer(6, n, lc::ErasureRate{p}, lc::FieldSize{q}), tol);
      }
    }
  }
}

TEST(ProbEwTest, DynamicProgramMatchesNestedSum) {
  std::mt19937_64 rng{21};
  for (int i = 0; i < 60; ++i) {
    const std::size_t L = 1 + rng() % 3;
    std::vector<std::size_t> k;
    std::vector<std::size_t> N;
    for (std::size_t l = 0; l < L; ++l) {
      k.push_back(1 + rng() % 4);
      N.push_back(rng() % 8);
    }
    const lc::LayeredMessage msg{k};
    const double p = double(rng() % 60) / 100.0;
    const lc::FieldSize q{(rng() % 2) ? 2u : 4u};
    const auto profile = lc::prob_ew_profile(msg, N, lc::ErasureRate{p}, q, L);
    for (std::size_t l = 1; l <= L; ++l) {
      EXPECT_NEAR(profile[l - 1], ew_nested_sum(msg, N, p, q, l), 1e-12);
      EXPECT_NEAR(lc::prob_ew_joint(msg, N, lc::ErasureRate{p}, q, l), profile[l - 1], tol);
    }
  }
}

TEST(ProbEwTest, LosslessCollapsesToSingleOutcome) {
  const auto msg = lc::LayeredMessage::from_windows(std::vector<std::size_t>{5, 10, 15});
  for (unsigned q : {2u, 256u}) {
    const std::vector<std::size_t> N{7, 6, 5};
    const auto profile = lc::prob_ew_profile(msg, N, lc::ErasureRate{0.0}, lc::FieldSize{q}, 3);
    EXPECT_NEAR(profile[0], lc::prob_decode(5, 7, lc::FieldSize{q}), tol);
    EXPECT_NEAR(profile[1], lc::prob_decode(10, 13, lc::FieldSize{q}), tol);
    EXPECT_NEAR(profile[2], lc::prob_decode(15, 18, lc::FieldSize{q}), tol);
    // Surplus from window 1 does not cover window 3: r_3 = 4 < r_min,3 = 5.
    const std::vector<std::size_t> short3{7, 6, 4};
    EXPECT_EQ(lc::prob_ew_joint(msg, short3, lc::ErasureRate{0.0}, lc::FieldSize{q}, 3), 0.0);
  }
}

TEST(ProbEwTest, EmptyWindowHasZeroProbability) {
  const auto msg = lc::LayeredMessage::from_windows(std::vector<std::size_t>{2, 4});
  const std::vector<std::size_t> N{10, 0};
  EXPECT_EQ(lc::prob_ew_joint(msg, N, lc::ErasureRate{0.1}, lc::FieldSize{2}, 2), 0.0);
}

TEST(ProbEwTest, MonotoneInEachCount) {
  std::mt19937_64 rng{33};
  for (int i = 0; i < 150; ++i) {
    const lc::LayeredMessage msg{{1 + rng() % 4, 1 + rng() % 4, 1 + rng() % 4}};
    std::vector<std::size_t> N{rng() % 8, 1 + rng() % 8, 1 + rng() % 8};
    const lc::ErasureRate p{double(rng() % 40) / 100.0};
    const lc::FieldSize q{(rng() % 2) ? 2u : 16u};
    const auto base = lc::prob_ew_profile(msg, N, p, q, 3);
    for (std::size_t j = 0; j < 3; ++j) {
      auto more = N;
      ++more[j];
      const auto grown = lc::prob_ew_profile(msg, more, p, q, 3);
      for (std::size_t l = 0; l < 3; ++l) {
        EXPECT_LE(base[l], grown[l] + tol) << "i=" << i << " j=" << j << " l=" << l;
        EXPECT_GE(base[l], 0.0);
        EXPECT_LE(base[l], 1.0);
      }
    }
  }
}

TEST(ProbEwTest, UpperBoundsSimulatedDecoding) {
  std::mt19937_64 rng{55};
  for (int i = 0; i < 25; ++i) {
    const std::size_t k1 = 1 + rng() % 4;
    const std::size_t k2 = 1 + rng() % 4;
    const lc::LayeredMessage msg{{k1, k2}};
    const std::vector<std::size_t> N{k1 + rng() % 4, k2 + rng() % 5};
    const double p = double(rng() % 40) / 100.0;
    const lc::FieldSize q{(rng() % 2) ? 2u : 256u};
    const auto sim = gf::simulate_ew_recovery(msg, N, p, q, {20000, 100u + i, 0});
    const auto profile = lc::prob_ew_profile(msg, N, lc::ErasureRate{p}, q, 2);
    for (std::size_t l = 1; l <= 2; ++l) {
      const double v = profile[l - 1];
      const double sigma = std::sqrt(v * (1 - v) / 20000.0);
      EXPECT_LE(sim.window.at(l).value(), v + 3.0 * sigma + 1.0 / 20000.0)
          << "case " << i << " l=" << l;
    }
  }
}

TEST(QosIndicatorTest, NowThresholds) {
  const lc::LayeredMessage msg{{3, 3}};
  const std::vector<std::size_t> n{6, 6};
  const lc::ErasureRate p{0.1};
  const lc::FieldSize q{2};
  EXPECT_TRUE(lc::qos_indicator_now(msg, n, p, q, 2, 0.0));
  const double exact = lc::prob_now_joint(msg, n, p, q, 2);
  EXPECT_TRUE(lc::qos_indicator_now(msg, n, p, q, 2, exact));
  EXPECT_FALSE(lc::qos_indicator_now(msg, n, p, q, 2, std::nextafter(exact, 1.0)));
  const std::vector<std::size_t> gap{6, 0};
  EXPECT_FALSE(lc::qos_indicator_now(msg, gap, p, q, 2, 0.01));
}

TEST(QosIndicatorTest, EwUsesLargerWindows) {
  const auto msg = lc::LayeredMessage::from_windows(std::vector<std::size_t>{3, 6, 9});
  const std::vector<std::size_t> N{0, 0, 40};
  const lc::ErasureRate p{0.1};
  const lc::FieldSize q{2};
  EXPECT_EQ(lc::prob_ew_joint(msg, N, p, q, 1), 0.0);
  EXPECT_GT(lc::prob_ew_joint(msg, N, p, q, 3), 0.99);
  EXPECT_TRUE(lc::qos_indicator_ew(msg, N, p, q, 1, 0.99));
  EXPECT_TRUE(lc::qos_indicator_ew(msg, N, p, q, 2, 0.99));
  EXPECT_TRUE(lc::qos_indicator_ew(msg, N, p, q, 3, 0.99));
}

TEST(QosIndicatorTest, EwSingleWindowEqualsNow) {
  const lc::LayeredMessage msg{{4}};
  for (std::size_t n = 3; n < 12; ++n) {
    const std::vector<std::size_t> N{n};
    EXPECT_EQ(lc::qos_indicator_ew(msg, N, lc::ErasureRate{0.2}, lc::FieldSize{2}, 1, 0.9),
              lc::qos_indicator_now(msg, N, lc::ErasureRate{0.2}, lc::FieldSize{2}, 1, 0.9));
  }
}

TEST(QosIndicatorTest, EwIndicatorIsMonotoneInLayer) {
  std::mt19937_64 rng{71};
  for (int i = 0; i < 300; ++i) {
    const lc::LayeredMessage msg{{1 + rng() % 4, 1 + rng() % 4, 1 + rng() % 4}};
    const std::vector<std::size_t> N{rng() % 9, rng() % 9, rng() % 12};
    const auto profile = lc::prob_ew_profile(msg, N, lc::ErasureRate{0.1}, lc::FieldSize{4}, 3);
    const auto mu = lc::ew_indicators(profile, 0.9);
    for (std::size_t l = 1; l < 3; ++l) {
      if (mu[l]) {
        EXPECT_TRUE(mu[l - 1]);
      }
    }
  }
}
