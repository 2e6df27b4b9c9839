#pragma once

// Uncoded multi-rate transmission (MrT) baseline: every layer is sent once,
// k_l TBs on its own MCS, and the MCS tuple maximises the summed PSNR.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "layercast/allocator.hpp"
#include "layercast/lte.hpp"
#include "layercast/population.hpp"
#include "layercast/stream.hpp"

namespace layercast {

/// P^MrT_1:l = prod_{i<=l} (1 - p_i)^{k_i}, with p_i the PER on layer i's MCS.
inline double prob_mrt_joint(std::span<const std::size_t> k, std::span<const double> per,
                             std::size_t layers) {
  if (layers < 1 || layers > k.size() || per.size() != k.size()) {
    throw std::out_of_range("layer index outside [1, L] or mismatched vectors");
  }
  double p = 1.0;
  for (std::size_t i = 0; i < layers; ++i) {
    p *= std::pow(1.0 - per[i], static_cast<double>(k[i]));
  }
  return p;
}

inline std::vector<double> mrt_profile(std::span<const std::size_t> k, std::span<const double> per) {
  std::vector<double> out;
  for (std::size_t l = 1; l <= k.size(); ++l) out.push_back(prob_mrt_joint(k, per, l));
  return out;
}

/// rho(u) = max_l rho_l P_1:l.
inline double psnr_user(const VideoStreamSpec& stream, std::span<const double> probs) {
  if (probs.size() != stream.psnr.size()) {
    throw std::invalid_argument("need one recovery probability per layer");
  }
  double best = 0.0;
  for (std::size_t l = 0; l < probs.size(); ++l) best = std::max(best, stream.psnr[l] * probs[l]);
  return best;
}

/// Summed PSNR of the population for MCS tuple m, using the allocation-time
/// PER (p_hat when M(u) >= m_l, otherwise 1).
inline double mrt_objective(const VideoStreamSpec& stream, const UserPopulation& pop,
                            std::span<const std::size_t> k, std::span<const int> m, double p_hat) {
  double sum = 0.0;
  std::vector<double> per(m.size());
  for (const auto& u : pop.users) {
    for (std::size_t l = 0; l < m.size(); ++l) per[l] = lte::allocation_time_per(u.cqi, m[l], p_hat);
    sum += psnr_user(stream, mrt_profile(k, per));
  }
  return sum;
}

/// Exhaustive search over m_1 < ... < m_L. Ties go to the lexicographically
/// largest tuple, so a lone user gets its own CQI on layer 1.
inline std::vector<int> optimize_mrt(const VideoStreamSpec& stream, const UserPopulation& pop,
                                     std::span<const std::size_t> k, double p_hat) {
  const std::size_t L = k.size();
  const McsRange r = pop.range;
  if (L == 0 || L != stream.layers()) throw std::invalid_argument("layer count mismatch");
  if (r.size() < L) throw std::invalid_argument("MCS range has fewer indices than layers");
  const auto served = pop.served();
  std::vector<int> m(L);
  std::vector<int> best;
  double best_value = -1.0;
  std::function<void(std::size_t, int)> rec = [&](std::size_t l, int from) {
    if (l == L) {
      const double v = mrt_objective(stream, served, k, m, p_hat);
      if (v >= best_value) {
        best_value = v;
        best = m;
      }
      return;
    }
    for (int v = from; v <= r.max - static_cast<int>(L - 1 - l); ++v) {
      m[l] = v;
      rec(l + 1, v + 1);
    }
  };
  rec(0, r.min);
  return best;
}

/// The MrT transmission as a plan: layer l on subchannel l with k_l TBs.
inline AllocationPlan mrt_plan(std::vector<int> m, std::span<const std::size_t> k) {
  AllocationPlan plan{Scheme::mrt, std::move(m), k.size()};
  for (std::size_t l = 0; l < k.size(); ++l) plan.counts[l][l] = k[l];
  return plan;
}

}  // namespace layercast
