#pragma once

// Direct solution of the NOW-SA, NOW-MA and EW-MA models: exact enumeration
// for tiny instances, seeded local search from the heuristic plan otherwise.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "layercast/allocator.hpp"

namespace layercast {

struct SolverBudget {
  /// Largest enumeration size (MCS classes x count matrices) solved exactly.
  std::uint64_t exhaustive_limit = 5'000'000;
  /// Local search iterations when the instance is too large.
  std::uint64_t iterations = 20'000;
  std::uint64_t seed = 1;
};

struct DirectSolution {
  AllocationPlan plan;
  bool optimal = false;            // proven optimal by enumeration
  bool budget_exhausted = false;   // local search stopped on its iteration budget
  std::uint64_t evaluated = 0;     // plans whose coverage was evaluated
};

namespace detail {

/// Coverage test against the allocation-time PER. Users are grouped by how
/// many subchannels they can decode, so each plan costs at most C profile
/// evaluations; profiles are memoised on the counts a group sees.
class CoverageOracle {
 public:
  CoverageOracle(const AllocationProblem& prob, Scheme scheme)
      : prob_{prob}, scheme_{scheme}, served_{prob.population.served()} {}

  bool feasible(const AllocationPlan& plan) {
    ++evaluated_;
    const std::size_t L = prob_.layers();
    const std::size_t C = plan.channels();
    const std::size_t U = served_.size();
    std::vector<std::size_t> hits(L, 0);
    std::vector<std::size_t> seen(L, 0);
    bool any_packets = false;
    for (std::size_t j = 1; j <= C; ++j) {
      // users decoding exactly the first j subchannels
      const std::size_t upper = j < C ? served_.count_at_least(plan.mcs[j]) : 0;
      const std::size_t group = served_.count_at_least(plan.mcs[j - 1]) - upper;
      for (std::size_t l = 0; l < L; ++l) seen[l] += plan.counts[l][j - 1];
      any_packets = any_packets || plan.column_sum(j - 1) > 0;
      if (group == 0 || !any_packets) continue;
      const auto& ind = indicators(seen);
      for (std::size_t l = 0; l < L; ++l) hits[l] += ind[l] ? group : 0;
    }
    for (std::size_t l = 0; l < L; ++l) {
      if (!meets_coverage(hits[l], U, prob_.targets.coverage[l])) return false;
    }
    return true;
  }

  std::uint64_t evaluated() const noexcept { return evaluated_; }
  const UserPopulation& served() const noexcept { return served_; }

 private:
  const std::vector<bool>& indicators(const std::vector<std::size_t>& seen) {
    auto it = memo_.find(seen);
    if (it != memo_.end()) return it->second;
    const auto profile = recovery_profile(scheme_, prob_.message, seen, prob_.p_hat, prob_.field);
    return memo_.emplace(seen, qos_indicators(scheme_, profile, prob_.targets.recovery))
        .first->second;
  }

  const AllocationProblem& prob_;
  Scheme scheme_;
  UserPopulation served_;
  std::map<std::vector<std::size_t>, std::vector<bool>> memo_;
  std::uint64_t evaluated_ = 0;
};

/// Strictly increasing MCS tuples, one per distinct split of the users into
/// "decodes the first j subchannels" classes. Tuples leaving nobody able to
/// decode subchannel 1 are dropped.
inline std::vector<std::vector<int>> mcs_classes(const UserPopulation& served, std::size_t C) {
  std::vector<std::vector<int>> out;
  std::set<std::vector<std::size_t>> signatures;
  std::vector<int> m(C);
  const McsRange r = served.range;
  std::function<void(std::size_t, int)> rec = [&](std::size_t c, int from) {
    if (c == C) {
      std::vector<std::size_t> sig;
      for (int v : m) sig.push_back(served.count_at_least(v));
      if (sig.front() == 0) return;
      if (signatures.insert(sig).second) out.push_back(m);
      return;
    }
    for (int v = from; v <= r.max - static_cast<int>(C - 1 - c); ++v) {
      m[c] = v;
      rec(c + 1, v + 1);
    }
  };
  rec(0, r.min);
  return out;
}

inline std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k) {
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > (std::uint64_t{1} << 62)) return std::uint64_t{1} << 62;
  }
  return c;
}

inline std::uint64_t enumeration_size(const AllocationProblem& prob, Scheme scheme,
                                      std::size_t classes) {
  std::uint64_t size = classes;
  const std::uint64_t cap = std::uint64_t{1} << 62;
  for (std::size_t c = 0; c < prob.subchannels.size(); ++c) {
    const std::uint64_t b = prob.subchannels.capacity[c];
    // count vectors of one column with sum <= B^_c
    const std::uint64_t per_column = scheme == Scheme::now_sa ? b + 1 : binomial_u64(b + prob.layers(), prob.layers());
    if (per_column != 0 && size > cap / per_column) return cap;
    size *= per_column;
  }
  return size;
}

/// Calls visit(plan) for every count matrix with exactly `total` packets that
/// respects the capacities (and the diagonal for SA); stops when visit
/// returns true.
inline bool for_each_matrix(AllocationPlan& plan, const SubchannelSet& subch, std::size_t total,
                            const std::function<bool(const AllocationPlan&)>& visit) {
  const std::size_t L = plan.layers();
  const std::size_t C = plan.channels();
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t c = 0; c < C; ++c) {
      if (plan.scheme != Scheme::now_sa || l == c) cells.emplace_back(l, c);
    }
  }
  std::vector<std::size_t> room(subch.capacity);
  std::function<bool(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t left) {
    auto [l, c] = cells[i];
    if (i + 1 == cells.size()) {
      if (left > room[c]) return false;
      plan.counts[l][c] = left;
      const bool stop = visit(plan);
      plan.counts[l][c] = 0;
      return stop;
    }
    const std::size_t hi = std::min(left, room[c]);
    for (std::size_t v = 0; v <= hi; ++v) {
      plan.counts[l][c] = v;
      room[c] -= v;
      const bool stop = rec(i + 1, left - v);
      room[c] += v;
      if (stop) {
        plan.counts[l][c] = 0;
        return true;
      }
    }
    plan.counts[l][c] = 0;
    return false;
  };
  return rec(0, total);
}

inline std::optional<DirectSolution> solve_exhaustive(const AllocationProblem& prob, Scheme scheme,
                                                      CoverageOracle& oracle,
                                                      const std::vector<std::vector<int>>& classes) {
  const std::size_t L = prob.layers();
  std::size_t max_total = 0;
  for (auto b : prob.subchannels.capacity) max_total += b;
  if (scheme == Scheme::now_sa) {
    max_total = 0;
    for (std::size_t l = 0; l < L && l < prob.subchannels.size(); ++l) {
      max_total += prob.subchannels.capacity[l];
    }
  }
  // a user recovering every layer needs at least K received packets
  for (std::size_t total = prob.message.total(); total <= max_total; ++total) {
    for (const auto& m : classes) {
      AllocationPlan plan{scheme, m, L};
      std::optional<AllocationPlan> found;
      for_each_matrix(plan, prob.subchannels, total, [&](const AllocationPlan& p) {
        if (!oracle.feasible(p)) return false;
        found = p;
        return true;
      });
      if (found) return DirectSolution{*found, true, false, oracle.evaluated()};
    }
  }
  return std::nullopt;
}

inline DirectSolution solve_local(const AllocationProblem& prob, Scheme scheme,
                                  CoverageOracle& oracle, const SolverBudget& budget) {
  AllocationPlan current = allocate(scheme, prob);
  AllocationPlan best = current;
  std::mt19937_64 rng{budget.seed};
  const std::size_t L = current.layers();
  const std::size_t C = current.channels();
  const auto& cap = prob.subchannels.capacity;
  const McsRange r = prob.range();
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto allowed = [&](std::size_t l, std::size_t c) { return scheme != Scheme::now_sa || l == c; };

  for (std::uint64_t it = 0; it < budget.iterations; ++it) {
    AllocationPlan cand = current;
    const std::size_t l = pick(L);
    const std::size_t c = pick(C);
    switch (pick(4)) {
      case 0:  // drop one packet
        if (cand.counts[l][c] == 0) continue;
        --cand.counts[l][c];
        break;
      case 1: {  // move one packet to another cell
        const std::size_t l2 = pick(L);
        const std::size_t c2 = pick(C);
        if (cand.counts[l][c] == 0 || !allowed(l2, c2) || (l == l2 && c == c2)) continue;
        --cand.counts[l][c];
        ++cand.counts[l2][c2];
        if (cand.column_sum(c2) > cap[c2]) continue;
        break;
      }
      case 2: {  // shift one MCS
        const int step = (rng() & 1) ? 1 : -1;
        const int v = cand.mcs[c] + step;
        if (!r.contains(v)) continue;
        if (c > 0 && v <= cand.mcs[c - 1]) continue;
        if (c + 1 < C && v >= cand.mcs[c + 1]) continue;
        cand.mcs[c] = v;
        break;
      }
      default: {  // drop one packet and shift one MCS
        if (cand.counts[l][c] == 0) continue;
        --cand.counts[l][c];
        const std::size_t c2 = pick(C);
        const int v = cand.mcs[c2] + ((rng() & 1) ? 1 : -1);
        if (!r.contains(v) || (c2 > 0 && v <= cand.mcs[c2 - 1]) ||
            (c2 + 1 < C && v >= cand.mcs[c2 + 1])) {
          continue;
        }
        cand.mcs[c2] = v;
        break;
      }
    }
    if (objective_tau(cand) > objective_tau(current) || !oracle.feasible(cand)) continue;
    current = std::move(cand);
    if (objective_tau(current) < objective_tau(best)) best = current;
  }
  return DirectSolution{best, false, true, oracle.evaluated()};
}

}  // namespace detail

/// Minimises tau under the model constraints of `scheme`, evaluated with the
/// allocation-time PER. Instances whose enumeration size fits
/// budget.exhaustive_limit are solved exactly; larger ones run a seeded local
/// search started from the heuristic plan.
inline DirectSolution direct_solve(const AllocationProblem& prob, Scheme scheme,
                                   const SolverBudget& budget = {}) {
  if (scheme == Scheme::mrt) throw std::invalid_argument("MrT has no coded allocation model");
  prob.subchannels.validate();
  prob.targets.validate(prob.layers());
  if (scheme == Scheme::now_sa && prob.subchannels.size() != prob.layers()) {
    throw std::invalid_argument("separated allocation needs one subchannel per layer");
  }
  detail::CoverageOracle oracle{prob, scheme};
  if (oracle.served().size() == 0) throw InfeasibleAllocation("no user reports an MCS in range");
  const auto classes = detail::mcs_classes(oracle.served(), prob.subchannels.size());
  if (classes.empty()) throw InfeasibleAllocation("no MCS assignment reaches any user");

  DirectSolution sol;
  if (detail::enumeration_size(prob, scheme, classes.size()) <= budget.exhaustive_limit) {
    auto found = detail::solve_exhaustive(prob, scheme, oracle, classes);
    if (!found) throw InfeasibleAllocation(std::string{to_string(scheme)} + ": no feasible plan exists");
    sol = std::move(*found);
  } else {
    sol = detail::solve_local(prob, scheme, oracle, budget);
  }
  const auto rep = check_feasible(sol.plan, prob);
  if (!rep.ok()) throw std::logic_error("direct solver produced an infeasible plan: " + rep.violations.front());
  return sol;
}

}  // namespace layercast
