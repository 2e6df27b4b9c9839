#pragma once

// Scenario files: JSON documents describing one layered multicast experiment.
// The schema is documented in docs/scenario-format.md.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "layercast/allocator.hpp"
#include "layercast/lte.hpp"
#include "layercast/stream.hpp"

namespace layercast {

struct PopulationSpec {
  std::size_t users = 80;
  double first_distance = 90.0;  // m
  double spacing = 2.0;          // m
  double p_hat = 0.1;
  std::vector<double> per_midpoint;  // m, one per MCS
  std::vector<double> per_slope;     // m, one per MCS

  std::vector<double> distances() const {
    std::vector<double> d;
    for (std::size_t u = 0; u < users; ++u) d.push_back(first_distance + spacing * static_cast<double>(u));
    return d;
  }
};

struct ValidationSpec {
  std::vector<std::size_t> windows{5, 10, 15};
  std::vector<double> per{0.1, 0.3};
  std::vector<unsigned> field_sizes{2, 256};
  std::size_t extra_min = 0;
  std::size_t extra_max = 10;
  std::uint64_t trials = 100000;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  VideoStreamSpec stream;
  McsRange range;
  std::vector<std::uint64_t> rb_capacity;    // N_C,m for m in range
  unsigned max_blocks = 6;                    // N^_B
  std::optional<std::uint64_t> packet_bits;   // fixes H instead of solving for it
  double tti = 1e-3;
  double embms_fraction = 0.6;
  PopulationSpec population;
  ServiceTargets targets;
  std::size_t subchannels = 3;
  std::optional<std::vector<std::size_t>> capacity;  // B^_c; default min(K + ceil(K/2), d^_GoP)
  std::vector<unsigned> field_sizes{2, 16, 256};
  std::vector<Scheme> schemes{Scheme::now_sa, Scheme::now_ma, Scheme::ew_ma, Scheme::mrt};
  ValidationSpec validation;
  /// FNV-1a of the canonical JSON text the scenario was read from.
  std::uint64_t hash = 0;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
T required(const nlohmann::json& j, const char* key, const char* where) {
  if (!j.contains(key)) {
    throw std::invalid_argument(std::string{where} + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string{where} + "." + key + ": " + e.what());
  }
}

template <typename T>
T optional_field(const nlohmann::json& j, const char* key, T fallback, const char* where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return required<T>(j, key, where);
}

inline const nlohmann::json& section(const nlohmann::json& j, const char* key, const char* where) {
  if (!j.contains(key) || !j.at(key).is_object()) {
    throw std::invalid_argument(std::string{where} + ": missing object '" + key + "'");
  }
  return j.at(key);
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j) {
  using detail::optional_field;
  using detail::required;
  if (!j.is_object()) throw std::invalid_argument("scenario must be a JSON object");
  Scenario s;
  s.name = optional_field<std::string>(j, "name", "scenario", "scenario");
  s.seed = optional_field<std::uint64_t>(j, "seed", 1, "scenario");

  const auto& st = detail::section(j, "stream", "scenario");
  s.stream.name = optional_field<std::string>(st, "name", s.name, "stream");
  for (double mbps : required<std::vector<double>>(st, "bitrate_mbps", "stream")) {
    s.stream.bitrate.push_back(mbps * 1e6);
  }
  s.stream.psnr = required<std::vector<double>>(st, "psnr_db", "stream");
  s.stream.gop_frames = required<unsigned>(st, "gop_frames", "stream");
  s.stream.fps = required<double>(st, "fps", "stream");
  s.stream.validate();

  const auto& lte = detail::section(j, "lte", "scenario");
  s.range.min = optional_field<int>(lte, "mcs_min", 4, "lte");
  s.range.max = optional_field<int>(lte, "mcs_max", 15, "lte");
  s.range.validate();
  s.rb_capacity = required<std::vector<std::uint64_t>>(lte, "rb_capacity_bits", "lte");
  if (s.rb_capacity.size() != s.range.size()) {
    throw std::invalid_argument("lte.rb_capacity_bits: need one entry per MCS in [mcs_min, mcs_max]");
  }
  s.max_blocks = optional_field<unsigned>(lte, "max_blocks_per_tb", 6, "lte");
  if (lte.contains("packet_bits") && !lte.at("packet_bits").is_null()) {
    s.packet_bits = required<std::uint64_t>(lte, "packet_bits", "lte");
  }
  s.tti = optional_field<double>(lte, "tti_s", 1e-3, "lte");
  s.embms_fraction = optional_field<double>(lte, "embms_fraction", 0.6, "lte");

  const auto& pop = detail::section(j, "population", "scenario");
  s.population.users = required<std::size_t>(pop, "users", "population");
  s.population.first_distance = required<double>(pop, "first_distance_m", "population");
  s.population.spacing = required<double>(pop, "spacing_m", "population");
  s.population.p_hat = optional_field<double>(pop, "p_hat", 0.1, "population");
  const auto& curve = detail::section(pop, "per_curve", "population");
  s.population.per_midpoint = required<std::vector<double>>(curve, "midpoint_m", "population.per_curve");
  s.population.per_slope = required<std::vector<double>>(curve, "slope_m", "population.per_curve");
  if (s.population.users == 0) throw std::invalid_argument("population.users must be positive");
  if (!(s.population.p_hat > 0.0 && s.population.p_hat < 1.0)) {
    throw std::invalid_argument("population.p_hat must lie in (0, 1)");
  }

  const auto& tg = detail::section(j, "targets", "scenario");
  s.targets.recovery = required<double>(tg, "recovery", "targets");
  s.targets.coverage = required<std::vector<double>>(tg, "coverage", "targets");
  s.targets.validate(s.stream.layers());

  if (j.contains("subchannels")) {
    const auto& sc = j.at("subchannels");
    s.subchannels = optional_field<std::size_t>(sc, "count", s.stream.layers(), "subchannels");
    if (sc.contains("capacity") && sc.at("capacity").is_array()) {
      s.capacity = required<std::vector<std::size_t>>(sc, "capacity", "subchannels");
      if (s.capacity->size() != s.subchannels) {
        throw std::invalid_argument("subchannels.capacity: need one entry per subchannel");
      }
    }
  } else {
    s.subchannels = s.stream.layers();
  }

  s.field_sizes = optional_field<std::vector<unsigned>>(j, "field_sizes", s.field_sizes, "scenario");
  for (unsigned q : s.field_sizes) (void)FieldSize{q};
  if (j.contains("schemes")) {
    s.schemes.clear();
    for (const auto& name : required<std::vector<std::string>>(j, "schemes", "scenario")) {
      s.schemes.push_back(parse_scheme(name));
    }
  }

  if (j.contains("validation")) {
    const auto& v = j.at("validation");
    auto& out = s.validation;
    out.windows = optional_field(v, "windows", out.windows, "validation");
    out.per = optional_field(v, "per", out.per, "validation");
    out.field_sizes = optional_field(v, "field_sizes", out.field_sizes, "validation");
    const auto extra = optional_field(v, "extra_packets", std::vector<std::size_t>{0, 10}, "validation");
    if (extra.size() != 2 || extra[0] > extra[1]) {
      throw std::invalid_argument("validation.extra_packets must be [min, max]");
    }
    out.extra_min = extra[0];
    out.extra_max = extra[1];
    out.trials = optional_field<std::uint64_t>(v, "trials", out.trials, "validation");
  }

  s.hash = detail::fnv1a(j.dump());
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in{path};
  if (!in) throw std::runtime_error("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return parse_scenario(j);
}

}  // namespace layercast
