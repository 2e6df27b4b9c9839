#pragma once

// Multicast group description consumed by the allocators and the MrT
// baseline: each user's CQI report M(u) and, for assessment, the PER it
// actually experiences at every MCS.

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace layercast {

struct McsRange {
  int min = 4;
  int max = 15;

  std::size_t size() const noexcept { return static_cast<std::size_t>(max - min + 1); }
  bool contains(int m) const noexcept { return m >= min && m <= max; }

  void validate() const {
    if (min > max) throw std::invalid_argument("MCS range must satisfy m_min <= m_MAX");
  }
};

struct User {
  double distance = 0.0;
  /// M(u); range.min - 1 means no acceptable MCS.
  int cqi = 0;
  /// p_u(m) for m = range.min .. range.max.
  std::vector<double> per;
};

struct UserPopulation {
  McsRange range;
  std::vector<User> users;

  std::size_t size() const noexcept { return users.size(); }

  /// p_u(m) for MCS m inside the range.
  double per(std::size_t u, int m) const {
    return users.at(u).per.at(static_cast<std::size_t>(m - range.min));
  }

  /// |{u : M(u) >= m}|.
  std::size_t count_at_least(int m) const noexcept {
    std::size_t n = 0;
    for (const auto& u : users) n += u.cqi >= m ? 1 : 0;
    return n;
  }

  /// Users whose CQI reaches m_min; the others take no part in allocation.
  UserPopulation served() const {
    UserPopulation out{range, {}};
    for (const auto& u : users) {
      if (u.cqi >= range.min) out.users.push_back(u);
    }
    return out;
  }

  void validate() const {
    range.validate();
    for (const auto& u : users) {
      if (u.per.size() != range.size()) {
        throw std::invalid_argument("every user needs one PER value per MCS");
      }
      if (u.cqi < range.min - 1 || u.cqi > range.max) {
        throw std::invalid_argument("CQI report outside [m_min - 1, m_MAX]");
      }
      for (std::size_t i = 0; i < u.per.size(); ++i) {
        if (!(u.per[i] >= 0.0 && u.per[i] <= 1.0)) throw std::invalid_argument("PER outside [0, 1]");
        if (i > 0 && u.per[i] < u.per[i - 1]) {
          throw std::invalid_argument("PER must not decrease with the MCS index");
        }
      }
    }
  }
};

}  // namespace layercast
