#pragma once

// Radio resource allocation for layered RLNC multicast over C subchannels:
// NOW-SA, NOW-MA and EW-MA plans, their two-step heuristics and a
// feasibility checker shared by every solver.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "layercast/message.hpp"
#include "layercast/population.hpp"
#include "layercast/recovery.hpp"

namespace layercast {

enum class Scheme { now_sa, now_ma, ew_ma, mrt };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::now_sa: return "NOW-SA";
    case Scheme::now_ma: return "NOW-MA";
    case Scheme::ew_ma: return "EW-MA";
    case Scheme::mrt: return "MrT";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view s) {
  for (auto v : {Scheme::now_sa, Scheme::now_ma, Scheme::ew_ma, Scheme::mrt}) {
    if (s == to_string(v)) return v;
  }
  throw std::invalid_argument("unknown scheme '" + std::string{s} +
                              "' (expected NOW-SA, NOW-MA, EW-MA or MrT)");
}

inline bool is_expanding_window(Scheme s) noexcept { return s == Scheme::ew_ma; }

struct ServiceTargets {
  double recovery = 0.99;          // P^
  std::vector<double> coverage;    // t^_l

  void validate(std::size_t layers) const {
    if (!(recovery > 0.0 && recovery <= 1.0)) throw std::invalid_argument("P^ must lie in (0, 1]");
    if (coverage.size() != layers) throw std::invalid_argument("need one coverage fraction per layer");
    for (double t : coverage) {
      if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("coverage fractions must lie in (0, 1]");
    }
  }
};

/// Per-subchannel packet capacities B^_c, non-decreasing in c.
struct SubchannelSet {
  std::vector<std::size_t> capacity;

  std::size_t size() const noexcept { return capacity.size(); }

  static SubchannelSet uniform(std::size_t count, std::size_t cap) {
    return SubchannelSet{std::vector<std::size_t>(count, cap)};
  }

  void validate() const {
    if (capacity.empty()) throw std::invalid_argument("need at least one subchannel");
    if (!std::is_sorted(capacity.begin(), capacity.end())) {
      throw std::invalid_argument("subchannel capacities must be non-decreasing");
    }
  }
};

/// Everything an allocator needs to know about one multicast service.
struct AllocationProblem {
  LayeredMessage message;
  UserPopulation population;  // users with CQI below m_min are ignored
  ServiceTargets targets;
  SubchannelSet subchannels;
  FieldSize field;
  double p_hat = 0.1;

  std::size_t layers() const noexcept { return message.layers(); }
  const McsRange& range() const noexcept { return population.range; }
};

/// m_c per subchannel plus the L x C matrix of packet counts (n^(l,c) for
/// NOW, N^(l,c) for EW). Indices are zero based.
struct AllocationPlan {
  Scheme scheme = Scheme::now_sa;
  std::vector<int> mcs;
  std::vector<std::vector<std::size_t>> counts;

  AllocationPlan() = default;
  AllocationPlan(Scheme s, std::vector<int> m, std::size_t layers)
      : scheme{s}, mcs{std::move(m)}, counts(layers, std::vector<std::size_t>(mcs.size(), 0)) {}

  std::size_t layers() const noexcept { return counts.size(); }
  std::size_t channels() const noexcept { return mcs.size(); }

  std::size_t column_sum(std::size_t c) const {
    std::size_t s = 0;
    for (const auto& row : counts) s += row.at(c);
    return s;
  }

  std::size_t layer_total(std::size_t l) const {
    const auto& row = counts.at(l);
    return std::accumulate(row.begin(), row.end(), std::size_t{0});
  }

  std::vector<std::size_t> layer_totals() const {
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < layers(); ++l) out.push_back(layer_total(l));
    return out;
  }

  friend bool operator==(const AllocationPlan&, const AllocationPlan&) = default;
};

class InfeasibleAllocation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// tau: total number of coded packet transmissions.
inline std::size_t objective_tau(const AllocationPlan& plan) {
  std::size_t tau = 0;
  for (std::size_t l = 0; l < plan.layers(); ++l) tau += plan.layer_total(l);
  return tau;
}

/// n_{l,u}: packets of every layer/window carried by subchannels the user
/// can decode (m_c <= M(u)).
inline std::vector<std::size_t> effective_counts(const AllocationPlan& plan, int cqi) {
  std::vector<std::size_t> out(plan.layers(), 0);
  for (std::size_t c = 0; c < plan.channels(); ++c) {
    if (cqi < plan.mcs[c]) continue;
    for (std::size_t l = 0; l < plan.layers(); ++l) out[l] += plan.counts[l][c];
  }
  return out;
}

/// Which PER the evaluation uses: the CQI-based approximation the base
/// station works with during allocation, or the PER the user measures.
enum class PerSource { reported, measured };

/// p_u: largest PER over the non-empty subchannels the user can decode, or 1
/// when there is none.
inline double effective_per(const AllocationPlan& plan, const UserPopulation& pop, std::size_t u,
                            PerSource source, double p_hat) {
  double worst = -1.0;
  const int cqi = pop.users.at(u).cqi;
  for (std::size_t c = 0; c < plan.channels(); ++c) {
    if (cqi < plan.mcs[c] || plan.column_sum(c) == 0) continue;
    worst = std::max(worst, source == PerSource::reported ? p_hat : pop.per(u, plan.mcs[c]));
  }
  return worst < 0.0 ? 1.0 : worst;
}

/// P_1:l for l = 1..L given the counts and PER a user sees. NOW plans give
/// the joint layer probability; EW plans give P^EW_1:l for window l alone.
inline std::vector<double> recovery_profile(Scheme scheme, const LayeredMessage& msg,
                                            std::span<const std::size_t> counts, double per,
                                            FieldSize q) {
  const ErasureRate p{per};
  if (is_expanding_window(scheme)) return prob_ew_profile(msg, counts, p, q, msg.layers());
  std::vector<double> out(msg.layers());
  double acc = 1.0;
  for (std::size_t l = 1; l <= msg.layers(); ++l) {
    if (acc > 0.0) acc *= prob_now_layer(msg.layer_size(l), counts[l - 1], p, q);
    out[l - 1] = acc;
  }
  return out;
}

/// QoS indicators of one user: lambda_{u,l} for NOW, mu_{u,l} for EW.
inline std::vector<bool> qos_indicators(Scheme scheme, std::span<const double> profile,
                                        double target) {
  if (is_expanding_window(scheme)) return ew_indicators(profile, target);
  std::vector<bool> out(profile.size());
  for (std::size_t l = 0; l < profile.size(); ++l) out[l] = profile[l] >= target;
  return out;
}

/// |{u : M(u) >= m}| >= U t, with slack for the real-valued product.
inline bool meets_coverage(std::size_t count, std::size_t users, double fraction) {
  return static_cast<double>(count) + 1e-9 >= static_cast<double>(users) * fraction;
}

struct FeasibilityReport {
  std::vector<double> coverage;          // sum_u lambda (or mu) / U per layer
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
};

/// Checks every constraint of the scheme's model: plan shape, SA diagonal,
/// MCS range and strict ordering, subchannel capacity and per-layer coverage.
inline FeasibilityReport check_feasible(const AllocationPlan& plan, const AllocationProblem& prob,
                                        PerSource source = PerSource::reported) {
  FeasibilityReport rep;
  const std::size_t L = prob.layers();
  const std::size_t C = prob.subchannels.size();
  auto fail = [&](std::string s) { rep.violations.push_back(std::move(s)); };

  if (plan.layers() != L || plan.channels() != C) {
    fail("plan shape does not match L x C");
    return rep;
  }
  for (const auto& row : plan.counts) {
    if (row.size() != C) {
      fail("plan shape does not match L x C");
      return rep;
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    if (!prob.range().contains(plan.mcs[c])) {
      fail("subchannel " + std::to_string(c + 1) + ": MCS outside range");
    }
    if (c > 0 && plan.mcs[c - 1] >= plan.mcs[c]) {
      fail("subchannel " + std::to_string(c + 1) + ": MCS not strictly above subchannel " +
           std::to_string(c));
    }
    if (plan.column_sum(c) > prob.subchannels.capacity[c]) {
      fail("subchannel " + std::to_string(c + 1) + ": " + std::to_string(plan.column_sum(c)) +
           " packets exceed capacity " + std::to_string(prob.subchannels.capacity[c]));
    }
  }
  if (plan.scheme == Scheme::now_sa) {
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t c = 0; c < C; ++c) {
        if (l != c && plan.counts[l][c] != 0) {
          fail("separated allocation mixes layer " + std::to_string(l + 1) + " into subchannel " +
               std::to_string(c + 1));
        }
      }
    }
  }

  std::vector<std::size_t> hits(L, 0);
  std::size_t users = 0;
  const auto& pop = prob.population;
  for (std::size_t u = 0; u < pop.size(); ++u) {
    if (pop.users[u].cqi < pop.range.min) continue;
    ++users;
    const auto n = effective_counts(plan, pop.users[u].cqi);
    const double per = effective_per(plan, pop, u, source, prob.p_hat);
    const auto profile = recovery_profile(plan.scheme, prob.message, n, per, prob.field);
    const auto ind = qos_indicators(plan.scheme, profile, prob.targets.recovery);
    for (std::size_t l = 0; l < L; ++l) hits[l] += ind[l] ? 1 : 0;
  }
  for (std::size_t l = 0; l < L; ++l) {
    rep.coverage.push_back(users ? static_cast<double>(hits[l]) / static_cast<double>(users) : 0.0);
    if (!meets_coverage(hits[l], users, prob.targets.coverage[l])) {
      fail("layer " + std::to_string(l + 1) + ": coverage " + std::to_string(rep.coverage.back()) +
           " below target " + std::to_string(prob.targets.coverage[l]));
    }
  }
  return rep;
}

/// First heuristic step: for c = C down to 1 pick the greatest MCS, below
/// the one already given to c + 1, that at least U t^_c users can decode.
/// Returned in increasing order m_1 < ... < m_C.
inline std::vector<int> mcs_select(const UserPopulation& pop, std::span<const double> coverage,
                                   std::size_t channels) {
  if (coverage.size() != channels) {
    throw std::invalid_argument("MCS selection needs one coverage fraction per subchannel");
  }
  const auto served = pop.served();
  const std::size_t U = served.size();
  if (U == 0) throw InfeasibleAllocation("no user reports an MCS in range");
  std::vector<int> m(channels, 0);
  int v = pop.range.max;
  for (std::size_t c = channels; c-- > 0;) {
    bool found = false;
    for (; v >= pop.range.min; --v) {
      if (meets_coverage(served.count_at_least(v), U, coverage[c])) {
        m[c] = v--;
        found = true;
        break;
      }
    }
    if (!found) {
      throw InfeasibleAllocation("no MCS reaches coverage " + std::to_string(coverage[c]) +
                                 " on subchannel " + std::to_string(c + 1));
    }
  }
  return m;
}

namespace detail {

inline void require_layers_equal_channels(const AllocationProblem& prob) {
  prob.subchannels.validate();
  prob.targets.validate(prob.layers());
  if (prob.subchannels.size() != prob.layers()) {
    throw std::invalid_argument("heuristics need one subchannel per layer (C = L)");
  }
}

/// Counts seen by the slowest user of tier l, i.e. a user whose CQI equals
/// m_l: every subchannel up to and including l.
inline std::vector<std::size_t> tier_counts(const AllocationPlan& plan, std::size_t tier) {
  return effective_counts(plan, plan.mcs[tier]);
}

/// P_1:(tier+1) for the slowest user of the tier at the allocation-time PER.
inline double tier_probability(const AllocationPlan& plan, const AllocationProblem& prob,
                               std::size_t tier) {
  const auto n = tier_counts(plan, tier);
  const ErasureRate p{prob.p_hat};
  if (is_expanding_window(plan.scheme)) {
    return prob_ew_joint(prob.message, n, p, prob.field, tier + 1);
  }
  return prob_now_joint(prob.message, n, p, prob.field, tier + 1);
}

inline AllocationPlan verified(AllocationPlan plan, const AllocationProblem& prob) {
  const auto rep = check_feasible(plan, prob);
  if (!rep.ok()) {
    throw InfeasibleAllocation(std::string{to_string(plan.scheme)} + ": " + rep.violations.front());
  }
  return plan;
}

/// Second step shared by NOW-MA and EW-MA: packets of layer (window) l are
/// added one at a time to the current subchannel until the slowest user of
/// tier l reaches P^, moving on whenever a subchannel is full.
inline AllocationPlan fill_mixed(Scheme scheme, const AllocationProblem& prob) {
  require_layers_equal_channels(prob);
  const std::size_t L = prob.layers();
  const std::size_t C = prob.subchannels.size();
  AllocationPlan plan{scheme, mcs_select(prob.population, prob.targets.coverage, C), L};
  const auto& cap = prob.subchannels.capacity;
  std::size_t c = 0;
  while (c < C && cap[c] == 0) ++c;
  for (std::size_t l = 0; l < L; ++l) {
    while (tier_probability(plan, prob, l) < prob.targets.recovery) {
      // packets on subchannels above l never reach the slowest tier-l user
      if (c >= C || c > l) {
        throw InfeasibleAllocation(std::string{to_string(scheme)} + ": layer " +
                                   std::to_string(l + 1) + " cannot reach P^ within capacity");
      }
      ++plan.counts[l][c];
      while (c < C && plan.column_sum(c) >= cap[c]) ++c;
    }
  }
  return verified(std::move(plan), prob);
}

}  // namespace detail

/// NOW-SA: layer l goes on subchannel l only; n^(l) starts at k_l and grows
/// until P^NOW_1:l reaches P^ for tier l.
inline AllocationPlan allocate_now_sa(const AllocationProblem& prob) {
  detail::require_layers_equal_channels(prob);
  const std::size_t L = prob.layers();
  AllocationPlan plan{Scheme::now_sa, mcs_select(prob.population, prob.targets.coverage, L), L};
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t cap = prob.subchannels.capacity[l];
    std::size_t& n = plan.counts[l][l];
    n = prob.message.layer_size(l + 1);
    if (n > cap) {
      throw InfeasibleAllocation("NOW-SA: layer " + std::to_string(l + 1) +
                                 " has more source packets than subchannel capacity");
    }
    while (detail::tier_probability(plan, prob, l) < prob.targets.recovery) {
      if (n == cap) {
        throw InfeasibleAllocation("NOW-SA: layer " + std::to_string(l + 1) +
                                   " cannot reach P^ within capacity");
      }
      ++n;
    }
  }
  return detail::verified(std::move(plan), prob);
}

/// NOW-MA: sequential fill across subchannels (layers may straddle them).
inline AllocationPlan allocate_now_ma(const AllocationProblem& prob) {
  return detail::fill_mixed(Scheme::now_ma, prob);
}

/// EW-MA: sequential fill of window packets, window l sized so that tier l
/// recovers window l with probability P^.
inline AllocationPlan allocate_ew_ma(const AllocationProblem& prob) {
  return detail::fill_mixed(Scheme::ew_ma, prob);
}

inline AllocationPlan allocate(Scheme scheme, const AllocationProblem& prob) {
  switch (scheme) {
    case Scheme::now_sa: return allocate_now_sa(prob);
    case Scheme::now_ma: return allocate_now_ma(prob);
    case Scheme::ew_ma: return allocate_ew_ma(prob);
    case Scheme::mrt: break;
  }
  throw std::invalid_argument("MrT is not a coded allocation scheme");
}

}  // namespace layercast
