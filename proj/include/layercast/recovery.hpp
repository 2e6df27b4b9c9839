#pragma once

// Closed-form probabilities that a receiver recovers the leading layers of a
// layered message delivered with non-overlapping window (NOW) or expanding
// window (EW) random linear network coding.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "layercast/message.hpp"

namespace layercast {

/// Tolerance used when comparing probabilities computed along different routes.
inline constexpr double probability_tolerance = 1e-12;

namespace detail {

inline double log_factorial(std::size_t n) {
  static constexpr std::size_t table_size = 1 << 14;
  static const std::vector<double> table = [] {
    std::vector<double> t(table_size);
    t[0] = 0.0;
    for (std::size_t i = 1; i < table_size; ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (n < table_size) return table[n];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

inline double log_binomial(std::size_t n, std::size_t r) {
  return log_factorial(n) - log_factorial(r) - log_factorial(n - r);
}

/// pmf[r] = C(n, r) p^(n-r) (1-p)^r for r in [0, n]: the probability that
/// exactly r of n packets survive an erasure channel with loss rate p.
inline std::vector<double> survivor_pmf(std::size_t n, double p) {
  std::vector<double> pmf(n + 1, 0.0);
  if (p <= 0.0) {
    pmf[n] = 1.0;
    return pmf;
  }
  if (p >= 1.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  for (std::size_t r = 0; r <= n; ++r) {
    pmf[r] = std::exp(log_binomial(n, r) + static_cast<double>(n - r) * lp +
                      static_cast<double>(r) * lq);
  }
  return pmf;
}

inline void check_counts(const LayeredMessage& msg, std::span<const std::size_t> counts,
                         std::size_t layers) {
  if (counts.size() != msg.layers()) {
    throw std::invalid_argument("packet counts must have one entry per layer");
  }
  if (layers < 1 || layers > msg.layers()) {
    throw std::out_of_range("layer index outside [1, L]");
  }
}

}  // namespace detail

/// Probability that r uniformly random coded packets over GF(q) contain k
/// linearly independent ones: prod_{i=0}^{k-1} (1 - q^-(r-i)), and 0 for r < k.
inline double prob_decode(std::size_t k, std::size_t r, FieldSize q) {
  if (r < k) return 0.0;
  const int bits = static_cast<int>(q.bits());
  double prob = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    prob *= 1.0 - std::ldexp(1.0, -bits * static_cast<int>(r - i));
  }
  return prob;
}

/// Probability that exactly r of n transmitted packets are received.
inline double prob_receive(std::size_t n, std::size_t r, ErasureRate p) {
  if (r > n) throw std::invalid_argument("cannot receive more packets than were sent");
  const double e = p.value();
  if (e <= 0.0) return r == n ? 1.0 : 0.0;
  if (e >= 1.0) return r == 0 ? 1.0 : 0.0;
  return std::exp(detail::log_binomial(n, r) + static_cast<double>(n - r) * std::log(e) +
                  static_cast<double>(r) * std::log1p(-e));
}

/// NOW-RLNC: probability of recovering one layer of k source packets when n
/// coded packets of that layer are sent.
inline double prob_now_layer(std::size_t k, std::size_t n, ErasureRate p, FieldSize q) {
  if (n < k) return 0.0;
  const auto pmf = detail::survivor_pmf(n, p.value());
  double sum = 0.0;
  for (std::size_t r = k; r <= n; ++r) {
    if (pmf[r] != 0.0) sum += pmf[r] * prob_decode(k, r, q);
  }
  return std::min(sum, 1.0);
}

/// NOW-RLNC: probability of recovering layers 1..layers, the product of the
/// independent per-layer probabilities.
inline double prob_now_joint(const LayeredMessage& msg, std::span<const std::size_t> counts,
                             ErasureRate p, FieldSize q, std::size_t layers) {
  detail::check_counts(msg, counts, layers);
  double prob = 1.0;
  for (std::size_t l = 1; l <= layers && prob > 0.0; ++l) {
    prob *= prob_now_layer(msg.layer_size(l), counts[l - 1], p, q);
  }
  return prob;
}

/// Minimum number of packets of each window that must be received, given the
/// received counts r of the earlier windows, for decoding of that window to
/// be possible: r_min,1 = K_1 and
/// r_min,l = k_l + max(r_min,l-1 - r_l-1, 0).
inline std::vector<std::size_t> r_min_sequence(const LayeredMessage& msg,
                                               std::span<const std::size_t> received) {
  if (received.size() != msg.layers()) {
    throw std::invalid_argument("received counts must have one entry per window");
  }
  std::vector<std::size_t> out(msg.layers());
  out[0] = msg.window_size(1);
  for (std::size_t l = 2; l <= msg.layers(); ++l) {
    const std::size_t prev = out[l - 2];
    const std::size_t carried = prev > received[l - 2] ? prev - received[l - 2] : 0;
    out[l - 1] = msg.layer_size(l) + carried;
  }
  return out;
}

/// EW-RLNC: P^EW_1:l for every l in [1, upto].
///
/// Evaluates the nested sum over received counts r_1..r_l with r_l >= r_min,l,
/// weighting each outcome by its binomial reception probability and by the
/// approximate decoding probability prob_decode(K_l, r_1 + ... + r_l). The
/// sum is computed by dynamic programming over (packets received so far,
/// deficit carried into the next window) instead of by enumeration. A window
/// with no transmitted packets has probability 0.
inline std::vector<double> prob_ew_profile(const LayeredMessage& msg,
                                           std::span<const std::size_t> counts, ErasureRate p,
                                           FieldSize q, std::size_t upto) {
  detail::check_counts(msg, counts, upto);
  struct State {
    std::size_t sum;
    std::size_t deficit;  // deficit carried from the previous window
    double weight;
  };

  std::vector<double> out(upto, 0.0);
  std::vector<State> states{{0, 0, 1.0}};
  std::size_t max_sum = 0;

  for (std::size_t l = 1; l <= upto; ++l) {
    const std::size_t n = counts[l - 1];
    const std::size_t window = msg.window_size(l);
    const auto pmf = detail::survivor_pmf(n, p.value());

    if (n > 0) {
      std::vector<double> decode(max_sum + n + 1);
      for (std::size_t s = 0; s < decode.size(); ++s) decode[s] = prob_decode(window, s, q);
      double total = 0.0;
      for (const auto& st : states) {
        const std::size_t need = msg.layer_size(l) + st.deficit;
        double inner = 0.0;
        for (std::size_t r = need; r <= n; ++r) inner += pmf[r] * decode[st.sum + r];
        total += st.weight * inner;
      }
      out[l - 1] = std::clamp(total, 0.0, 1.0);
    }

    if (l == upto) break;

    const std::size_t next_max = max_sum + n;
    const std::size_t width = window + 1;
    std::vector<double> grid((next_max + 1) * width, 0.0);
    for (const auto& st : states) {
      const std::size_t need = msg.layer_size(l) + st.deficit;
      for (std::size_t r = 0; r <= n; ++r) {
        if (pmf[r] == 0.0) continue;
        const std::size_t deficit = need > r ? need - r : 0;
        grid[(st.sum + r) * width + deficit] += st.weight * pmf[r];
      }
    }
    states.clear();
    for (std::size_t s = 0; s <= next_max; ++s) {
      for (std::size_t d = 0; d < width; ++d) {
        const double w = grid[s * width + d];
        if (w != 0.0) states.push_back({s, d, w});
      }
    }
    max_sum = next_max;
  }
  return out;
}

/// EW-RLNC: probability of recovering window `layers`, i.e. layers
/// 1..layers, from the packets of windows 1..layers.
inline double prob_ew_joint(const LayeredMessage& msg, std::span<const std::size_t> counts,
                            ErasureRate p, FieldSize q, std::size_t layers) {
  return prob_ew_profile(msg, counts, p, q, layers).back();
}

/// lambda_{u,l}: the NOW receiver recovers layers 1..layers with probability
/// at least `target`.
inline bool qos_indicator_now(const LayeredMessage& msg, std::span<const std::size_t> counts,
                              ErasureRate p, FieldSize q, std::size_t layers, double target) {
  return prob_now_joint(msg, counts, p, q, layers) >= target;
}

/// mu_{u,l} for every l, given the profile P^EW_1:1 .. P^EW_1:L: true iff
/// some window t >= l is recovered with probability at least `target`.
inline std::vector<bool> ew_indicators(std::span<const double> profile, double target) {
  std::vector<bool> out(profile.size(), false);
  bool any = false;
  for (std::size_t t = profile.size(); t-- > 0;) {
    any = any || profile[t] >= target;
    out[t] = any;
  }
  return out;
}

/// mu_{u,l}: some window t in [layers, L] is recovered with probability at
/// least `target`.
inline bool qos_indicator_ew(const LayeredMessage& msg, std::span<const std::size_t> counts,
                             ErasureRate p, FieldSize q, std::size_t layers, double target) {
  detail::check_counts(msg, counts, layers);
  const auto profile = prob_ew_profile(msg, counts, p, q, msg.layers());
  return ew_indicators(profile, target)[layers - 1];
}

}  // namespace layercast
