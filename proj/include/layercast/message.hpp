#pragma once

// Core value types shared by every layer of the library: the finite field
// size, the layered source message and the packet erasure rate.

#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace layercast {

/// Size q of the finite field GF(q) the coding coefficients are drawn from.
/// Only binary extension fields with q in {2, 4, 16, 256} are supported.
class FieldSize {
 public:
  explicit FieldSize(unsigned q) : q_{q} {
    if (q != 2 && q != 4 && q != 16 && q != 256) {
      throw std::invalid_argument("unsupported field size q=" + std::to_string(q) +
                                  " (expected 2, 4, 16 or 256)");
    }
  }

  unsigned value() const noexcept { return q_; }

  /// Number of bits per field element.
  unsigned bits() const noexcept {
    unsigned b = 0;
    for (unsigned v = q_; v > 1; v >>= 1) ++b;
    return b;
  }

  friend bool operator==(FieldSize, FieldSize) = default;

 private:
  unsigned q_;
};

/// Packet error rate p_u in [0, 1].
class ErasureRate {
 public:
  explicit ErasureRate(double p) : p_{p} {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("erasure rate must lie in [0, 1]");
    }
  }

  double value() const noexcept { return p_; }

 private:
  double p_;
};

/// A source message of K packets split into L layers of decreasing
/// importance. Layer sizes k_l are stored; window sizes K_l = k_1 + ... + k_l
/// are derived.
class LayeredMessage {
 public:
  explicit LayeredMessage(std::vector<std::size_t> layer_sizes)
      : sizes_{std::move(layer_sizes)} {
    if (sizes_.empty()) throw std::invalid_argument("message needs at least one layer");
    windows_.reserve(sizes_.size());
    std::size_t acc = 0;
    for (auto k : sizes_) {
      if (k == 0) throw std::invalid_argument("every layer needs at least one source packet");
      acc += k;
      windows_.push_back(acc);
    }
  }

  /// Builds a message from its cumulative window sizes K_1 < K_2 < ... < K_L.
  static LayeredMessage from_windows(std::span<const std::size_t> windows) {
    std::vector<std::size_t> sizes;
    std::size_t prev = 0;
    for (auto w : windows) {
      if (w <= prev) throw std::invalid_argument("window sizes must be strictly increasing");
      sizes.push_back(w - prev);
      prev = w;
    }
    return LayeredMessage{std::move(sizes)};
  }

  std::size_t layers() const noexcept { return sizes_.size(); }

  /// k_l for l in [1, L].
  std::size_t layer_size(std::size_t layer) const { return sizes_.at(layer - 1); }

  /// K_l for l in [1, L]; K_0 = 0.
  std::size_t window_size(std::size_t layer) const {
    return layer == 0 ? 0 : windows_.at(layer - 1);
  }

  std::size_t total() const noexcept { return windows_.back(); }

  std::span<const std::size_t> layer_sizes() const noexcept { return sizes_; }
  std::span<const std::size_t> window_sizes() const noexcept { return windows_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> windows_;
};

}  // namespace layercast
