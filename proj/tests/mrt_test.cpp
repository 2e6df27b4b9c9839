#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "layercast/mrt.hpp"

namespace lc = layercast;

namespace {

const lc::McsRange range{4, 15};

lc::UserPopulation cqi_population(const std::vector<int>& cqis) {
  lc::UserPopulation pop{range, {}};
  for (int c : cqis) {
    lc::User u;
    u.cqi = c;
    for (int m = range.min; m <= range.max; ++m) u.per.push_back(m <= c ? 0.1 : 1.0);
    pop.users.push_back(u);
  }
  return pop;
}

const lc::VideoStreamSpec news{"news", {2.45e6, 2.45e6, 7.35e6}, {31.6, 37.4, 43.7}, 16, 30.0};

// Re-evaluates every tuple from scratch, summing PSNR user by user.
std::vector<int> brute_force(const lc::VideoStreamSpec& s, const std::vector<int>& cqis,
                             const std::vector<std::size_t>& k, double p_hat) {
  std::vector<int> best;
  double best_v = -1;
  for (int a = range.min; a <= range.max; ++a) {
    for (int b = a + 1; b <= range.max; ++b) {
      for (int c = b + 1; c <= range.max; ++c) {
        const int m[3] = {a, b, c};
        double v = 0;
        for (int cqi : cqis) {
          if (cqi < range.min) continue;
          double joint = 1.0;
          double rho = 0.0;
          for (int l = 0; l < 3; ++l) {
            joint *= cqi >= m[l] ? std::pow(1 - p_hat, double(k[l])) : 0.0;
            rho = std::max(rho, s.psnr[l] * joint);
          }
          v += rho;
        }
        if (v > best_v + 1e-9) {
          best_v = v;
          best = {a, b, c};
        } else if (std::abs(v - best_v) <= 1e-9) {
          best = {a, b, c};
        }
      }
    }
  }
  return best;
}

}  // namespace

TEST(MrtProbabilityTest, ProductOfLayers) {
  const std::vector<std::size_t> k{1, 2};
  const std::vector<double> per{0.2, 0.1};
  EXPECT_NEAR(lc::prob_mrt_joint(k, per, 1), 0.8, 1e-15);
  EXPECT_NEAR(lc::prob_mrt_joint(k, per, 2), 0.8 * 0.81, 1e-15);
  const std::vector<std::size_t> k3{1, 1, 3};
  const std::vector<double> p3{0.1, 0.1, 0.2};
  EXPECT_NEAR(lc::prob_mrt_joint(k3, p3, 3), 0.41472, 1e-12);
  EXPECT_THROW(lc::prob_mrt_joint(k3, p3, 0), std::out_of_range);
  EXPECT_THROW(lc::prob_mrt_joint(k3, p3, 4), std::out_of_range);
}

TEST(MrtProbabilityTest, PsnrTakesBestLayer) {
  const std::vector<double> probs{0.9, 0.8, 0.5};
  EXPECT_NEAR(lc::psnr_user(news, probs), std::max({31.6 * 0.9, 37.4 * 0.8, 43.7 * 0.5}), 1e-12);
  EXPECT_NEAR(lc::psnr_user(news, probs), 29.92, 1e-12);
  const std::vector<double> later{0.95, 0.9, 0.84};
  EXPECT_NEAR(lc::psnr_user(news, later), 43.7 * 0.84, 1e-12);
  EXPECT_DOUBLE_EQ(lc::psnr_user(news, std::vector<double>{0, 0, 0}), 0.0);
  EXPECT_THROW(lc::psnr_user(news, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(MrtOptimizeTest, LoneUserGetsOwnCqi) {
  const lc::VideoStreamSpec one{"one", {1e6}, {35.0}, 16, 30.0};
  const std::vector<std::size_t> k{3};
  for (int c = range.min; c <= range.max; ++c) {
    EXPECT_EQ(lc::optimize_mrt(one, cqi_population({c}), k, 0.1), (std::vector<int>{c}));
  }
}

TEST(MrtOptimizeTest, MatchesReEnumeration) {
  std::mt19937_64 rng{5};
  const std::vector<std::size_t> k{5, 5, 15};
  for (int i = 0; i < 15; ++i) {
    std::vector<int> cqis(5 + rng() % 30);
    for (auto& c : cqis) c = 3 + static_cast<int>(rng() % 13);
    const auto got = lc::optimize_mrt(news, cqi_population(cqis), k, 0.1);
    EXPECT_EQ(got, brute_force(news, cqis, k, 0.1)) << "case " << i;
  }
}

TEST(MrtOptimizeTest, InvariantUnderPsnrScaling) {
  std::mt19937_64 rng{6};
  const std::vector<std::size_t> k{5, 5, 15};
  lc::VideoStreamSpec doubled = news;
  for (auto& r : doubled.psnr) r *= 2.0;
  for (int i = 0; i < 10; ++i) {
    std::vector<int> cqis(10 + rng() % 20);
    for (auto& c : cqis) c = 4 + static_cast<int>(rng() % 12);
    const auto pop = cqi_population(cqis);
    EXPECT_EQ(lc::optimize_mrt(news, pop, k, 0.1), lc::optimize_mrt(doubled, pop, k, 0.1));
  }
}

TEST(MrtOptimizeTest, PlanSendsEachLayerOnce) {
  const std::vector<std::size_t> k{5, 5, 15};
  const auto plan = lc::mrt_plan({4, 9, 12}, k);
  EXPECT_EQ(plan.scheme, lc::Scheme::mrt);
  EXPECT_EQ(plan.layer_totals(), k);
  EXPECT_EQ(lc::objective_tau(plan), 25u);
  EXPECT_EQ(plan.counts[2][2], 15u);
  EXPECT_EQ(plan.counts[0][2], 0u);
}
