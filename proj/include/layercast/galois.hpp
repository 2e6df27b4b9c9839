#pragma once

// GF(2^m) arithmetic, incremental Gaussian elimination and the Monte-Carlo
// decoding oracle used to check the closed-form recovery probabilities.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "layercast/message.hpp"

namespace layercast::galois {

/// Log/antilog-table arithmetic over GF(q), q = 2^m.
///
/// Field elements are the integers [0, q). Addition is XOR. Multiplication is
/// polynomial multiplication modulo a fixed primitive polynomial; the full
/// product table is precomputed so that row operations are one lookup per
/// element.
class Field {
 public:
  explicit Field(FieldSize q) : q_{q.value()}, mul_(std::size_t{q_} * q_), inv_(q_) {
    const unsigned poly = primitive_polynomial(q_);
    std::vector<unsigned> exp(2 * (q_ - 1));
    std::vector<unsigned> log(q_);
    unsigned x = 1;
    for (unsigned i = 0; i < q_ - 1; ++i) {
      exp[i] = x;
      log[x] = i;
      x <<= 1;
      if (x & q_) x ^= poly;
    }
    for (unsigned i = q_ - 1; i < exp.size(); ++i) exp[i] = exp[i - (q_ - 1)];

    for (unsigned a = 1; a < q_; ++a) {
      for (unsigned b = 1; b < q_; ++b) {
        mul_[a * q_ + b] = static_cast<std::uint8_t>(exp[log[a] + log[b]]);
      }
      inv_[a] = static_cast<std::uint8_t>(exp[(q_ - 1 - log[a]) % (q_ - 1)]);
    }
  }

  unsigned size() const noexcept { return q_; }

  std::uint8_t add(std::uint8_t a, std::uint8_t b) const noexcept { return a ^ b; }
  std::uint8_t sub(std::uint8_t a, std::uint8_t b) const noexcept { return a ^ b; }
  std::uint8_t mul(std::uint8_t a, std::uint8_t b) const noexcept { return mul_[a * q_ + b]; }

  std::uint8_t inv(std::uint8_t a) const {
    if (a == 0) throw std::domain_error("zero has no multiplicative inverse");
    return inv_[a];
  }

  std::uint8_t div(std::uint8_t a, std::uint8_t b) const { return mul(a, inv(b)); }

  /// Row of the product table: mul_row(a)[b] == mul(a, b).
  const std::uint8_t* mul_row(std::uint8_t a) const noexcept { return &mul_[a * q_]; }

  /// Primitive polynomial (including the x^m term) used for GF(q).
  static unsigned primitive_polynomial(unsigned q) {
    switch (q) {
      case 2: return 0x3;     // x + 1
      case 4: return 0x7;     // x^2 + x + 1
      case 16: return 0x13;   // x^4 + x + 1
      case 256: return 0x11D; // x^8 + x^4 + x^3 + x^2 + 1
      default: throw std::invalid_argument("unsupported field size");
    }
  }

 private:
  unsigned q_;
  std::vector<std::uint8_t> mul_;
  std::vector<std::uint8_t> inv_;
};

/// Dense row-major matrix of GF(q) coefficients, one row per received packet.
struct CodingMatrix {
  std::size_t rows = 0;
  std::size_t cols = 1;
  std::vector<std::uint8_t> entries;

  CodingMatrix() : entries(0) {}
  CodingMatrix(std::size_t r, std::size_t c) : rows{r}, cols{c}, entries(r * c, 0) {
    if (c == 0) throw std::invalid_argument("coding matrix needs at least one column");
  }

  std::uint8_t& at(std::size_t r, std::size_t c) { return entries[r * cols + c]; }
  std::uint8_t at(std::size_t r, std::size_t c) const { return entries[r * cols + c]; }

  std::span<std::uint8_t> row(std::size_t r) { return {entries.data() + r * cols, cols}; }
  std::span<const std::uint8_t> row(std::size_t r) const {
    return {entries.data() + r * cols, cols};
  }

  static CodingMatrix identity(std::size_t n) {
    CodingMatrix m{n, n};
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }
};

/// Row-echelon basis built one row at a time.
///
/// The pivot of a stored row is its highest-index nonzero column, and stored
/// rows are normalised so the pivot entry is 1. With that ordering the number
/// of pivots in columns [0, c) equals the dimension of the received span
/// restricted to the first c source packets, so a prefix of the source message
/// is decodable iff every column of the prefix holds a pivot.
class EchelonBasis {
 public:
  EchelonBasis(const Field& field, std::size_t cols)
      : field_{&field}, cols_{cols}, rows_(cols * cols, 0), has_pivot_(cols, 0) {}

  std::size_t cols() const noexcept { return cols_; }
  std::size_t rank() const noexcept { return rank_; }
  bool full() const noexcept { return rank_ == cols_; }

  /// True iff columns [0, c) all carry a pivot.
  bool spans_prefix(std::size_t c) const noexcept { return prefix_ >= c; }

  /// Reduces `row` against the basis and stores it if a nonzero remainder is
  /// left. `row` is used as scratch space. Returns true iff the rank grew.
  bool insert(std::span<std::uint8_t> row) {
    for (std::size_t j = std::min(row.size(), cols_); j-- > 0;) {
      const std::uint8_t c = row[j];
      if (c == 0) continue;
      std::uint8_t* stored = &rows_[j * cols_];
      if (has_pivot_[j]) {
        const std::uint8_t* mt = field_->mul_row(c);
        for (std::size_t i = 0; i <= j; ++i) row[i] ^= mt[stored[i]];
        continue;
      }
      const std::uint8_t* mt = field_->mul_row(field_->inv(c));
      for (std::size_t i = 0; i <= j; ++i) stored[i] = mt[row[i]];
      has_pivot_[j] = 1;
      ++rank_;
      while (prefix_ < cols_ && has_pivot_[prefix_]) ++prefix_;
      return true;
    }
    return false;
  }

  void clear() {
    std::fill(has_pivot_.begin(), has_pivot_.end(), 0);
    rank_ = 0;
    prefix_ = 0;
  }

 private:
  const Field* field_;
  std::size_t cols_;
  std::vector<std::uint8_t> rows_;
  std::vector<std::uint8_t> has_pivot_;
  std::size_t rank_ = 0;
  std::size_t prefix_ = 0;
};

/// GF(2) specialisation of EchelonBasis with one machine word per row.
class BinaryBasis {
 public:
  static constexpr std::size_t max_cols = 64;

  explicit BinaryBasis(std::size_t cols) : cols_{cols} {
    if (cols > max_cols) throw std::invalid_argument("binary basis holds at most 64 columns");
  }

  std::size_t rank() const noexcept { return rank_; }
  bool full() const noexcept { return rank_ == cols_; }
  bool spans_prefix(std::size_t c) const noexcept { return prefix_ >= c; }

  bool insert(std::uint64_t row) {
    while (row != 0) {
      const auto j = static_cast<std::size_t>(std::bit_width(row) - 1);
      if (pivots_ & (std::uint64_t{1} << j)) {
        row ^= rows_[j];
        continue;
      }
      rows_[j] = row;
      pivots_ |= std::uint64_t{1} << j;
      ++rank_;
      prefix_ = static_cast<std::size_t>(std::countr_one(pivots_));
      return true;
    }
    return false;
  }

  void clear() noexcept {
    pivots_ = 0;
    rank_ = 0;
    prefix_ = 0;
  }

 private:
  std::size_t cols_;
  std::array<std::uint64_t, max_cols> rows_{};
  std::uint64_t pivots_ = 0;
  std::size_t rank_ = 0;
  std::size_t prefix_ = 0;
};

/// Rank of `m` over the field by Gaussian elimination.
inline std::size_t rank(const CodingMatrix& m, const Field& field) {
  for (auto e : m.entries) {
    if (e >= field.size()) throw std::invalid_argument("matrix entry outside the field");
  }
  EchelonBasis basis{field, m.cols};
  std::vector<std::uint8_t> scratch(m.cols);
  for (std::size_t r = 0; r < m.rows && !basis.full(); ++r) {
    auto row = m.row(r);
    std::copy(row.begin(), row.end(), scratch.begin());
    basis.insert(scratch);
  }
  return basis.rank();
}

inline std::size_t rank(const CodingMatrix& m, FieldSize q) { return rank(m, Field{q}); }

// ---------------------------------------------------------------------------
// Monte-Carlo decoding oracle

/// Empirical frequency with its binomial standard error.
struct Proportion {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;

  double value() const noexcept {
    return trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials);
  }

  /// sqrt(p (1 - p) / n) evaluated at the empirical p.
  double std_error() const noexcept {
    if (trials == 0) return 0.0;
    const double p = value();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
};

/// Per-layer success counts: entry l-1 counts trials in which layers 1..l
/// were all recovered.
struct RecoveryCounts {
  std::uint64_t trials = 0;
  std::vector<std::uint64_t> successes;

  Proportion at(std::size_t layers) const { return {successes.at(layers - 1), trials}; }

  RecoveryCounts& operator+=(const RecoveryCounts& other) {
    if (successes.empty()) successes.assign(other.successes.size(), 0);
    trials += other.trials;
    for (std::size_t i = 0; i < successes.size(); ++i) successes[i] += other.successes[i];
    return *this;
  }

  friend bool operator==(const RecoveryCounts&, const RecoveryCounts&) = default;
};

/// Outcome of an expanding-window simulation.
///
/// `window` entry l-1 counts trials where window l was decodable from the
/// packets of windows 1..l alone, which is the event the closed-form EW model
/// describes. `layers` entry l-1 counts trials where layers 1..l were
/// recovered by eliminating every received packet of every window.
struct EwRecoveryCounts {
  RecoveryCounts window;
  RecoveryCounts layers;

  EwRecoveryCounts& operator+=(const EwRecoveryCounts& other) {
    window += other.window;
    layers += other.layers;
    return *this;
  }

  friend bool operator==(const EwRecoveryCounts&, const EwRecoveryCounts&) = default;
};

struct SimulationOptions {
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  /// Worker threads; 0 picks std::thread::hardware_concurrency().
  unsigned workers = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Trials are cut into fixed-size blocks, each with its own generator seeded
/// from (seed, block index). Results therefore do not depend on the number of
/// workers.
inline constexpr std::uint64_t block_trials = 4096;

/// Random source for one block of trials: erasure draws and coefficients.
class TrialStream {
 public:
  explicit TrialStream(std::uint64_t seed) : engine_{seed} {}

  bool erased(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return u < p;
  }

  /// Uniform row over GF(2) with support on the low `support` bits.
  std::uint64_t binary_row(std::size_t support) {
    const std::uint64_t w = engine_();
    return support >= 64 ? w : (w & ((std::uint64_t{1} << support) - 1));
  }

  /// Uniform coefficients over GF(2^bits) on row[0, support), zero elsewhere.
  void field_row(std::span<std::uint8_t> row, std::size_t support, unsigned bits) {
    const std::uint8_t mask = static_cast<std::uint8_t>((1u << bits) - 1);
    const unsigned per_word = 64 / bits;
    std::size_t i = 0;
    while (i < support) {
      std::uint64_t w = engine_();
      for (unsigned k = 0; k < per_word && i < support; ++k, ++i) {
        row[i] = static_cast<std::uint8_t>(w) & mask;
        w >>= bits;
      }
    }
    std::fill(row.begin() + static_cast<std::ptrdiff_t>(support), row.end(), std::uint8_t{0});
  }

 private:
  std::mt19937_64 engine_;
};

/// Runs `block(seed, trials) -> Counts` over all blocks on a pool of workers
/// and merges the partial counts in block order.
template <typename Counts, typename Block>
Counts run_blocks(const SimulationOptions& opts, Block&& block) {
  const std::uint64_t nblocks = (opts.trials + block_trials - 1) / block_trials;
  std::vector<Counts> partial(nblocks);
  auto run = [&](std::uint64_t b) {
    const std::uint64_t begin = b * block_trials;
    const std::uint64_t n = std::min(block_trials, opts.trials - begin);
    partial[b] = block(splitmix64(opts.seed ^ splitmix64(b + 1)), n);
  };

  unsigned workers = opts.workers ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, nblocks));
  if (workers <= 1) {
    for (std::uint64_t b = 0; b < nblocks; ++b) run(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t b = w; b < nblocks; b += workers) run(b);
      });
    }
    for (auto& t : pool) t.join();
  }

  Counts total{};
  for (const auto& c : partial) total += c;
  return total;
}

inline void check_counts(const LayeredMessage& msg, std::span<const std::size_t> counts, double p) {
  if (counts.size() != msg.layers()) {
    throw std::invalid_argument("packet counts must have one entry per layer");
  }
  ErasureRate{p};
}

}  // namespace detail

/// Estimates, for each l, the probability that a NOW-RLNC receiver recovers
/// layers 1..l. Layer l sends counts[l-1] coded packets over its own k_l
/// source packets; each is erased independently with probability p.
inline RecoveryCounts simulate_now_recovery(const LayeredMessage& msg,
                                            std::span<const std::size_t> counts, double p,
                                            FieldSize q, const SimulationOptions& opts) {
  detail::check_counts(msg, counts, p);
  const Field field{q};
  const std::size_t L = msg.layers();

  auto block = [&](std::uint64_t seed, std::uint64_t n) {
    detail::TrialStream rng{seed};
    RecoveryCounts out{n, std::vector<std::uint64_t>(L, 0)};
    std::vector<EchelonBasis> bases;
    for (std::size_t l = 1; l <= L; ++l) bases.emplace_back(field, msg.layer_size(l));
    std::vector<std::uint8_t> row;
    BinaryBasis bin{0};

    for (std::uint64_t t = 0; t < n; ++t) {
      bool joint = true;
      for (std::size_t l = 1; l <= L; ++l) {
        const std::size_t k = msg.layer_size(l);
        bool decoded = false;
        if (q.value() == 2 && k <= BinaryBasis::max_cols) {
          bin = BinaryBasis{k};
          for (std::size_t j = 0; j < counts[l - 1] && !bin.full(); ++j) {
            if (!rng.erased(p)) bin.insert(rng.binary_row(k));
          }
          decoded = bin.full();
        } else {
          auto& basis = bases[l - 1];
          basis.clear();
          row.resize(k);
          for (std::size_t j = 0; j < counts[l - 1] && !basis.full(); ++j) {
            if (rng.erased(p)) continue;
            rng.field_row(row, k, q.bits());
            basis.insert(row);
          }
          decoded = basis.full();
        }
        joint = joint && decoded;
        if (joint) ++out.successes[l - 1];
      }
    }
    return out;
  };
  return detail::run_blocks<RecoveryCounts>(opts, block);
}

/// Estimates EW-RLNC recovery. Window l sends counts[l-1] coded packets whose
/// coefficients are uniform on the first K_l source packets and zero beyond.
/// Received packets are eliminated in window order in one shared basis.
inline EwRecoveryCounts simulate_ew_recovery(const LayeredMessage& msg,
                                             std::span<const std::size_t> counts, double p,
                                             FieldSize q, const SimulationOptions& opts) {
  detail::check_counts(msg, counts, p);
  const Field field{q};
  const std::size_t L = msg.layers();
  const std::size_t K = msg.total();
  const bool binary = q.value() == 2 && K <= BinaryBasis::max_cols;

  auto block = [&](std::uint64_t seed, std::uint64_t n) {
    detail::TrialStream rng{seed};
    EwRecoveryCounts out{{n, std::vector<std::uint64_t>(L, 0)},
                         {n, std::vector<std::uint64_t>(L, 0)}};
    EchelonBasis basis{field, K};
    BinaryBasis bin{binary ? K : 0};
    std::vector<std::uint8_t> row(K);

    for (std::uint64_t t = 0; t < n; ++t) {
      basis.clear();
      bin.clear();
      for (std::size_t l = 1; l <= L; ++l) {
        const std::size_t support = msg.window_size(l);
        for (std::size_t j = 0; j < counts[l - 1]; ++j) {
          if (binary ? bin.full() : basis.full()) break;
          if (rng.erased(p)) continue;
          if (binary) {
            bin.insert(rng.binary_row(support));
          } else {
            rng.field_row(row, support, q.bits());
            basis.insert(row);
          }
        }
        if (binary ? bin.spans_prefix(support) : basis.spans_prefix(support)) {
          ++out.window.successes[l - 1];
        }
      }
      for (std::size_t l = 1; l <= L; ++l) {
        const std::size_t support = msg.window_size(l);
        if (binary ? bin.spans_prefix(support) : basis.spans_prefix(support)) {
          ++out.layers.successes[l - 1];
        }
      }
    }
    return out;
  };
  return detail::run_blocks<EwRecoveryCounts>(opts, block);
}

/// Empirical frequency with which an r x k matrix of uniform GF(q) entries has
/// full column rank k.
inline Proportion simulate_full_rank(std::size_t k, std::size_t r, FieldSize q,
                                     const SimulationOptions& opts) {
  const Field field{q};
  struct Count {
    Proportion p;
    Count& operator+=(const Count& o) {
      p.successes += o.p.successes;
      p.trials += o.p.trials;
      return *this;
    }
  };
  auto block = [&](std::uint64_t seed, std::uint64_t n) {
    detail::TrialStream rng{seed};
    EchelonBasis basis{field, k};
    std::vector<std::uint8_t> row(k);
    Count c{{0, n}};
    for (std::uint64_t t = 0; t < n; ++t) {
      basis.clear();
      for (std::size_t i = 0; i < r && !basis.full(); ++i) {
        rng.field_row(row, k, q.bits());
        basis.insert(row);
      }
      if (basis.full()) ++c.p.successes;
    }
    return c;
  };
  return detail::run_blocks<Count>(opts, block).p;
}

}  // namespace layercast::galois
