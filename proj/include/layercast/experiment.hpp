#pragma once

// Experiment orchestration: derive the LTE quantities of a scenario, run the
// allocators and the MrT baseline for every (scheme, q) point, evaluate each
// user with its measured PER and emit CSV reports.

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "layercast/allocator.hpp"
#include "layercast/galois.hpp"
#include "layercast/lte.hpp"
#include "layercast/mrt.hpp"
#include "layercast/recovery.hpp"
#include "layercast/scenario.hpp"

namespace layercast {

/// Quantities derived from a scenario before any allocation.
struct ScenarioSetup {
  lte::TbPacking packing;
  std::vector<std::size_t> layer_packets;  // k_l
  std::size_t max_ttis = 0;                // d^_GoP
  SubchannelSet subchannels;
  UserPopulation population;               // every user, served or not
  LayeredMessage message{{1}};
};

inline ScenarioSetup prepare(const Scenario& scn) {
  ScenarioSetup s;
  if (scn.packet_bits) {
    s.packing = lte::pack_tb(scn.rb_capacity, scn.max_blocks, *scn.packet_bits, *scn.packet_bits);
  } else {
    s.packing = lte::pack_tb(scn.rb_capacity, scn.max_blocks);
  }
  s.layer_packets = lte::derive_layer_packets(scn.stream, s.packing.packet_bits);
  s.message = LayeredMessage{s.layer_packets};
  const lte::FrameBudget budget{scn.stream.gop_duration(), scn.tti, scn.embms_fraction};
  s.max_ttis = budget.max_ttis();
  if (scn.capacity) {
    s.subchannels = SubchannelSet{*scn.capacity};
    for (auto b : *scn.capacity) {
      if (b > s.max_ttis) throw std::invalid_argument("subchannel capacity exceeds d^_GoP");
    }
  } else {
    s.subchannels = SubchannelSet::uniform(scn.subchannels, lte::capacity_bound(budget, s.message.total()));
  }
  const lte::LogisticPerCurve curve{scn.range, scn.population.per_midpoint, scn.population.per_slope};
  const auto distances = scn.population.distances();
  s.population = lte::make_population(curve, distances, scn.population.p_hat, scn.range);
  s.population.validate();
  return s;
}

inline AllocationProblem make_problem(const Scenario& scn, const ScenarioSetup& setup, unsigned q) {
  return AllocationProblem{setup.message, setup.population, scn.targets, setup.subchannels,
                           FieldSize{q}, scn.population.p_hat};
}

/// One user of one (scheme, q) point, or a single status row when the point
/// has no plan.
struct ResultRow {
  Scheme scheme = Scheme::now_sa;
  unsigned q = 2;
  std::string status = "ok";
  std::size_t tau = 0;
  std::vector<int> mcs;
  std::vector<std::size_t> layer_totals;
  std::optional<std::size_t> user;
  double distance = 0.0;
  int cqi = 0;
  std::vector<double> probability;        // P_1:l, l = 1..L
  double psnr = 0.0;                      // rho(u)
  std::vector<double> coverage_distance;  // per tier, same for every user of the point
};

/// Outcome of one (scheme, q) point.
struct PointResult {
  Scheme scheme = Scheme::now_sa;
  unsigned q = 2;
  std::optional<AllocationPlan> plan;
  std::string status = "ok";
  std::vector<double> coverage;           // fraction of served users at QoS >= l (measured PER)
  std::vector<double> coverage_distance;  // per tier
  std::vector<ResultRow> rows;
};

/// Greatest distance d such that every user at distance <= d has
/// P_1:layer >= target; 0 when the closest user already fails.
inline double coverage_distance(std::vector<ResultRow> rows, std::size_t layer, double target) {
  std::erase_if(rows, [](const ResultRow& r) { return !r.user.has_value(); });
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ResultRow& a, const ResultRow& b) { return a.distance < b.distance; });
  double reach = 0.0;
  for (const auto& r : rows) {
    if (r.probability.at(layer - 1) < target) break;
    reach = r.distance;
  }
  return reach;
}

/// Per-user P_1:l under the measured PER. For EW the value reported for
/// layer l is the best window t >= l, since any such window yields layers 1..l.
inline std::vector<double> user_probabilities(const AllocationPlan& plan, const AllocationProblem& prob,
                                              std::size_t u, std::span<const std::size_t> k) {
  const auto& pop = prob.population;
  if (plan.scheme == Scheme::mrt) {
    std::vector<double> per;
    for (int m : plan.mcs) per.push_back(pop.per(u, m));
    return mrt_profile(k, per);
  }
  const auto n = effective_counts(plan, pop.users[u].cqi);
  const double p = effective_per(plan, pop, u, PerSource::measured, prob.p_hat);
  auto profile = recovery_profile(plan.scheme, prob.message, n, p, prob.field);
  if (is_expanding_window(plan.scheme)) {
    for (std::size_t l = profile.size() - 1; l-- > 0;) profile[l] = std::max(profile[l], profile[l + 1]);
  }
  return profile;
}

inline PointResult evaluate_point(const Scenario& scn, const ScenarioSetup& setup, Scheme scheme,
                                  unsigned q) {
  PointResult out;
  out.scheme = scheme;
  out.q = q;
  const auto prob = make_problem(scn, setup, q);
  const std::size_t L = prob.layers();
  try {
    if (scheme == Scheme::mrt) {
      out.plan = mrt_plan(optimize_mrt(scn.stream, setup.population, setup.layer_packets, prob.p_hat),
                          setup.layer_packets);
    } else {
      out.plan = allocate(scheme, prob);
    }
  } catch (const InfeasibleAllocation& e) {
    out.status = std::string{"infeasible: "} + e.what();
  }

  if (!out.plan) {
    ResultRow r;
    r.scheme = scheme;
    r.q = q;
    r.status = out.status;
    out.rows.push_back(std::move(r));
    return out;
  }

  const auto& plan = *out.plan;
  std::vector<std::size_t> hits(L, 0);
  std::size_t served = 0;
  for (std::size_t u = 0; u < setup.population.size(); ++u) {
    ResultRow r;
    r.scheme = scheme;
    r.q = q;
    r.tau = objective_tau(plan);
    r.mcs = plan.mcs;
    r.layer_totals = plan.layer_totals();
    r.user = u;
    r.distance = setup.population.users[u].distance;
    r.cqi = setup.population.users[u].cqi;
    r.probability = user_probabilities(plan, prob, u, setup.layer_packets);
    r.psnr = psnr_user(scn.stream, r.probability);
    if (r.cqi >= setup.population.range.min) {
      ++served;
      for (std::size_t l = 0; l < L; ++l) hits[l] += r.probability[l] >= scn.targets.recovery ? 1 : 0;
    }
    out.rows.push_back(std::move(r));
  }
  for (std::size_t l = 1; l <= L; ++l) {
    out.coverage.push_back(served ? static_cast<double>(hits[l - 1]) / static_cast<double>(served) : 0.0);
    out.coverage_distance.push_back(coverage_distance(out.rows, l, scn.targets.recovery));
  }
  for (auto& r : out.rows) r.coverage_distance = out.coverage_distance;
  return out;
}

struct ScenarioResult {
  ScenarioSetup setup;
  std::vector<PointResult> points;  // scheme-major, in the order requested
};

/// Evaluates every (scheme, q) point. Points run concurrently; the result
/// order depends only on the requested lists.
inline ScenarioResult run_scenario(const Scenario& scn, std::span<const Scheme> schemes,
                                   std::span<const unsigned> field_sizes) {
  ScenarioResult res{prepare(scn), {}};
  std::vector<std::future<PointResult>> jobs;
  for (Scheme s : schemes) {
    for (unsigned q : field_sizes) {
      (void)FieldSize{q};
      jobs.push_back(std::async(std::launch::async,
                                [&scn, &res, s, q] { return evaluate_point(scn, res.setup, s, q); }));
    }
  }
  for (auto& j : jobs) res.points.push_back(j.get());
  return res;
}

inline ScenarioResult run_scenario(const Scenario& scn) {
  return run_scenario(scn, scn.schemes, scn.field_sizes);
}

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& v, char sep = ' ') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

inline std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline void write_csv_header(std::ostream& os, const Scenario& scn, std::uint64_t seed) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "# scenario_hash=%016" PRIx64 " seed=%" PRIu64 "\n", scn.hash, seed);
  os << buf << "# scenario=" << scn.name << "\n";
}

/// One line per ResultRow. Vector fields are space separated inside their column.
inline void write_results_csv(std::ostream& os, const Scenario& scn, const ScenarioResult& res,
                              std::uint64_t seed) {
  using detail::fmt;
  using detail::join;
  write_csv_header(os, scn, seed);
  os << "scheme,q,status,tau,mcs,layer_totals,user,distance_m,cqi,probability,psnr_db,coverage_distance_m\n";
  for (const auto& pt : res.points) {
    for (const auto& r : pt.rows) {
      os << to_string(r.scheme) << ',' << r.q << ',' << detail::quoted(r.status) << ',';
      if (!r.user) {
        os << ",,,,,,,,\n";
        continue;
      }
      os << r.tau << ',' << join(r.mcs) << ',' << join(r.layer_totals) << ',' << *r.user << ','
         << fmt(r.distance) << ',' << r.cqi << ',' << join(r.probability) << ',' << fmt(r.psnr) << ','
         << join(r.coverage_distance) << '\n';
    }
  }
}

/// One line per (scheme, q) point: the plan and its coverage figures.
inline void write_summary_csv(std::ostream& os, const Scenario& scn, const ScenarioResult& res,
                              std::uint64_t seed) {
  using detail::join;
  write_csv_header(os, scn, seed);
  os << "# H=" << res.setup.packing.packet_bits << " k=" << join(res.setup.layer_packets)
     << " capacity=" << join(res.setup.subchannels.capacity) << " d_gop_tti=" << res.setup.max_ttis << "\n";
  os << "scheme,q,status,tau,mcs,counts,layer_totals,coverage_fraction,coverage_distance_m\n";
  for (const auto& pt : res.points) {
    os << to_string(pt.scheme) << ',' << pt.q << ',' << detail::quoted(pt.status) << ',';
    if (!pt.plan) {
      os << ",,,,,\n";
      continue;
    }
    std::string counts;
    for (std::size_t l = 0; l < pt.plan->layers(); ++l) {
      if (l) counts += ';';
      counts += join(pt.plan->counts[l]);
    }
    os << objective_tau(*pt.plan) << ',' << join(pt.plan->mcs) << ',' << counts << ','
       << join(pt.plan->layer_totals()) << ',' << join(pt.coverage) << ',' << join(pt.coverage_distance)
       << '\n';
  }
}

struct ValidationRow {
  std::size_t window = 1;
  double per = 0.0;
  unsigned q = 2;
  std::size_t extra = 0;  // v, with N_l = K_l + v
  double analytic = 0.0;
  double simulated = 0.0;
  double gap = 0.0;
  double std_error = 0.0;
};

/// Analytic P^EW_1:l against the Monte-Carlo decoder for N_l = K_l + v.
/// Every (p, q, v) point gets its own seed derived from `seed`.
inline std::vector<ValidationRow> validate_approximation(std::span<const std::size_t> windows,
                                                         std::span<const double> pers,
                                                         std::span<const unsigned> field_sizes,
                                                         std::size_t extra_min, std::size_t extra_max,
                                                         std::uint64_t trials, std::uint64_t seed,
                                                         unsigned workers = 0) {
  const auto msg = LayeredMessage::from_windows(windows);
  std::vector<ValidationRow> out;
  std::uint64_t point = 0;
  for (double p : pers) {
    for (unsigned qv : field_sizes) {
      const FieldSize q{qv};
      for (std::size_t v = extra_min; v <= extra_max; ++v, ++point) {
        std::vector<std::size_t> N;
        for (auto w : windows) N.push_back(w + v);
        const galois::SimulationOptions opts{trials, galois::detail::splitmix64(seed + point), workers};
        const auto sim = galois::simulate_ew_recovery(msg, N, p, q, opts);
        const auto analytic = prob_ew_profile(msg, N, ErasureRate{p}, q, msg.layers());
        for (std::size_t l = 1; l <= msg.layers(); ++l) {
          const auto est = sim.window.at(l);
          out.push_back({l, p, qv, v, analytic[l - 1], est.value(),
                         std::abs(analytic[l - 1] - est.value()), est.std_error()});
        }
      }
    }
  }
  return out;
}

inline void write_validation_csv(std::ostream& os, const Scenario& scn, std::uint64_t seed,
                                 std::span<const ValidationRow> rows) {
  using detail::fmt;
  write_csv_header(os, scn, seed);
  os << "window,p,q,v,analytic,simulated,gap,std_error\n";
  for (const auto& r : rows) {
    os << r.window << ',' << fmt(r.per) << ',' << r.q << ',' << r.extra << ',' << fmt(r.analytic) << ','
       << fmt(r.simulated) << ',' << fmt(r.gap) << ',' << fmt(r.std_error) << '\n';
  }
}

}  // namespace layercast
