#pragma once

// LTE-A profile: transport block sizing, GoP to source packet conversion,
// per-subchannel capacity and CQI/PER emulation.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "layercast/message.hpp"
#include "layercast/population.hpp"
#include "layercast/stream.hpp"

namespace layercast::lte {

/// Solution of the transport block packing problem.
struct TbPacking {
  std::uint64_t packet_bits = 0;        // H
  std::vector<unsigned> blocks;         // N_B,m
  std::uint64_t max_unused_bits = 0;    // max_m N_B,m N_C,m - H
};

/// Picks H and N_B,m minimising the largest unused TB capacity
/// max_m (N_B,m N_C,m - H) subject to N_B,m N_C,m >= H and N_B,m <= max_blocks.
/// For a fixed H the best choice is N_B,m = ceil(H / N_C,m), so every H in
/// [h_min, h_max] is scanned. Ties go to the largest H. h_max defaults to the
/// largest H any table can carry, max_blocks * min_m N_C,m.
inline TbPacking pack_tb(std::span<const std::uint64_t> capacities, unsigned max_blocks,
                         std::uint64_t h_min = 1, std::optional<std::uint64_t> h_max = {}) {
  if (capacities.empty()) throw std::invalid_argument("capacity table is empty");
  if (max_blocks == 0) throw std::invalid_argument("a TB needs at least one resource block pair");
  std::uint64_t smallest = std::numeric_limits<std::uint64_t>::max();
  for (auto c : capacities) {
    if (c == 0) throw std::invalid_argument("resource block capacities must be positive");
    smallest = std::min(smallest, c);
  }
  const std::uint64_t hi = std::min(h_max.value_or(smallest * max_blocks), smallest * max_blocks);
  if (h_min == 0) h_min = 1;

  std::optional<TbPacking> best;
  for (std::uint64_t h = h_min; h <= hi; ++h) {
    std::uint64_t worst = 0;
    for (auto c : capacities) worst = std::max(worst, (h + c - 1) / c * c - h);
    if (!best || worst <= best->max_unused_bits) best = TbPacking{h, {}, worst};
  }
  if (!best) throw std::invalid_argument("no packet size fits within the block limit");
  for (auto c : capacities) {
    best->blocks.push_back(static_cast<unsigned>((best->packet_bits + c - 1) / c));
  }
  return *best;
}

/// k_l = ceil(nu_l d_GoP / H) for every layer.
inline std::vector<std::size_t> derive_layer_packets(const VideoStreamSpec& stream,
                                                     std::uint64_t packet_bits) {
  if (packet_bits == 0) throw std::invalid_argument("packet size must be positive");
  std::vector<std::size_t> k;
  for (double nu : stream.bitrate) {
    const double x = nu * stream.gop_duration() / static_cast<double>(packet_bits);
    // guard against 4.9999999 style rounding of exact ratios
    k.push_back(static_cast<std::size_t>(std::max(1.0, std::ceil(x - 1e-9))));
  }
  return k;
}

struct FrameBudget {
  double gop_duration = 16.0 / 30.0;  // seconds
  double tti = 1e-3;                  // seconds
  double embms_fraction = 0.6;

  /// d^_GoP: TTIs usable by one GoP.
  std::size_t max_ttis() const {
    if (!(embms_fraction > 0.0 && embms_fraction <= 1.0)) {
      throw std::invalid_argument("eMBMS subframe fraction must lie in (0, 1]");
    }
    if (!(gop_duration > 0.0 && tti > 0.0)) throw std::invalid_argument("bad GoP or TTI duration");
    return static_cast<std::size_t>(std::floor(embms_fraction * gop_duration / tti + 1e-9));
  }
};

/// B^_c = min(K + ceil(K / 2), d^_GoP), the same for every subchannel.
inline std::size_t capacity_bound(const FrameBudget& budget, std::size_t total_packets) {
  return std::min(total_packets + (total_packets + 1) / 2, budget.max_ttis());
}

/// PER of a user at distance d under MCS m: 1 / (1 + exp(-(d - d50_m) / s_m)).
/// d50_m must not increase with m so the PER never decreases with m.
class LogisticPerCurve {
 public:
  LogisticPerCurve(McsRange range, std::vector<double> midpoint, std::vector<double> slope)
      : range_{range}, midpoint_{std::move(midpoint)}, slope_{std::move(slope)} {
    range_.validate();
    if (midpoint_.size() != range_.size() || slope_.size() != range_.size()) {
      throw std::invalid_argument("PER curve needs one midpoint and slope per MCS");
    }
    for (std::size_t i = 0; i < midpoint_.size(); ++i) {
      if (!(slope_[i] > 0.0)) throw std::invalid_argument("PER curve slopes must be positive");
      if (i > 0 && midpoint_[i] > midpoint_[i - 1]) {
        throw std::invalid_argument("PER midpoints must not increase with the MCS index");
      }
    }
  }

  const McsRange& range() const noexcept { return range_; }

  double operator()(double distance, int m) const {
    if (!range_.contains(m)) throw std::out_of_range("MCS outside the curve's range");
    const auto i = static_cast<std::size_t>(m - range_.min);
    return 1.0 / (1.0 + std::exp(-(distance - midpoint_[i]) / slope_[i]));
  }

 private:
  McsRange range_;
  std::vector<double> midpoint_;
  std::vector<double> slope_;
};

/// M(u): greatest MCS whose PER does not exceed p_hat, or range.min - 1.
template <typename Curve>
int emulate_cqi(const Curve& curve, double distance, double p_hat, McsRange range) {
  int best = range.min - 1;
  for (int m = range.min; m <= range.max; ++m) {
    if (curve(distance, m) <= p_hat) best = m;
  }
  return best;
}

/// PER the base station assumes during allocation: p_hat when the user
/// reported m_c or better, otherwise 1.
inline double allocation_time_per(int cqi, int mcs, double p_hat) {
  return cqi >= mcs ? p_hat : 1.0;
}

/// Users on a radial line at the given distances, with CQI derived from the curve.
template <typename Curve>
UserPopulation make_population(const Curve& curve, std::span<const double> distances,
                               double p_hat, McsRange range) {
  UserPopulation pop{range, {}};
  for (double d : distances) {
    User u{d, emulate_cqi(curve, d, p_hat, range), {}};
    for (int m = range.min; m <= range.max; ++m) u.per.push_back(curve(d, m));
    pop.users.push_back(std::move(u));
  }
  return pop;
}

}  // namespace layercast::lte
