// layercast: command line front end for scenario experiments.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "layercast/experiment.hpp"

namespace fs = std::filesystem;
namespace lc = layercast;

namespace {

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::string out = "out";
  std::vector<std::string> schemes;
  std::vector<unsigned> field_sizes;
  unsigned workers = 0;
};

std::ofstream open_output(const Options& o, const std::string& file) {
  fs::create_directories(o.out);
  const auto path = fs::path{o.out} / file;
  std::ofstream os{path, std::ios::binary};
  if (!os) throw std::runtime_error("cannot write " + path.string());
  std::cout << "wrote " << path.string() << "\n";
  return os;
}

std::vector<lc::Scheme> pick_schemes(const Options& o, const lc::Scenario& scn) {
  if (o.schemes.empty()) return scn.schemes;
  std::vector<lc::Scheme> out;
  for (const auto& s : o.schemes) out.push_back(lc::parse_scheme(s));
  return out;
}

std::vector<unsigned> pick_fields(const Options& o, const lc::Scenario& scn) {
  return o.field_sizes.empty() ? scn.field_sizes : o.field_sizes;
}

void print_setup(const lc::ScenarioResult& res) {
  const auto& s = res.setup;
  std::cout << "H = " << s.packing.packet_bits << " bits, k = " << lc::detail::join(s.layer_packets)
            << ", K = " << s.message.total() << ", B^ = " << lc::detail::join(s.subchannels.capacity)
            << ", d^_GoP = " << s.max_ttis << " TTIs\n";
}

void print_points(const lc::ScenarioResult& res) {
  for (const auto& pt : res.points) {
    std::printf("%-7s q=%-3u ", std::string{lc::to_string(pt.scheme)}.c_str(), pt.q);
    if (!pt.plan) {
      std::printf("%s\n", pt.status.c_str());
      continue;
    }
    std::printf("tau=%-4zu m=(%s) totals=(%s) reach=(%s) m\n", lc::objective_tau(*pt.plan),
                lc::detail::join(pt.plan->mcs).c_str(), lc::detail::join(pt.plan->layer_totals()).c_str(),
                lc::detail::join(pt.coverage_distance).c_str());
  }
}

int run_points(const Options& o, bool single_field) {
  auto scn = lc::load_scenario(o.scenario);
  const std::uint64_t seed = o.seed.value_or(scn.seed);
  auto fields = pick_fields(o, scn);
  if (single_field) fields.resize(1);
  const auto schemes = pick_schemes(o, scn);
  const auto res = lc::run_scenario(scn, schemes, fields);
  print_setup(res);
  print_points(res);
  {
    auto os = open_output(o, "summary.csv");
    lc::write_summary_csv(os, scn, res, seed);
  }
  {
    auto os = open_output(o, "results.csv");
    lc::write_results_csv(os, scn, res, seed);
  }
  return 0;
}

int run_validate(const Options& o) {
  auto scn = lc::load_scenario(o.scenario);
  const std::uint64_t seed = o.seed.value_or(scn.seed);
  const auto& v = scn.validation;
  const auto fields = o.field_sizes.empty() ? v.field_sizes : o.field_sizes;
  const auto rows = lc::validate_approximation(v.windows, v.per, fields, v.extra_min, v.extra_max,
                                               o.trials.value_or(v.trials), seed, o.workers);
  for (unsigned q : fields) {
    for (double p : v.per) {
      double gap = 0.0;
      double se = 0.0;
      for (const auto& r : rows) {
        if (r.q == q && r.per == p && r.gap > gap) {
          gap = r.gap;
          se = r.std_error;
        }
      }
      std::printf("q=%-3u p=%.2f max gap %.4f (std error %.4f)\n", q, p, gap, se);
    }
  }
  auto os = open_output(o, "validation.csv");
  lc::write_validation_csv(os, scn, seed, rows);
  return 0;
}

int run_pack_tb(const Options& o) {
  auto scn = lc::load_scenario(o.scenario);
  const auto pack = lc::lte::pack_tb(scn.rb_capacity, scn.max_blocks);
  std::cout << "H = " << pack.packet_bits << " bits, max unused = " << pack.max_unused_bits << " bits\n";
  auto os = open_output(o, "pack_tb.csv");
  lc::write_csv_header(os, scn, o.seed.value_or(scn.seed));
  os << "# H=" << pack.packet_bits << " max_unused_bits=" << pack.max_unused_bits << "\n";
  os << "mcs,rb_capacity_bits,blocks,unused_bits\n";
  for (std::size_t i = 0; i < pack.blocks.size(); ++i) {
    const auto unused = pack.blocks[i] * scn.rb_capacity[i] - pack.packet_bits;
    std::printf("m=%-2d N_C=%-7" PRIu64 " N_B=%u unused=%" PRIu64 "\n", scn.range.min + static_cast<int>(i),
                scn.rb_capacity[i], pack.blocks[i], unused);
    os << scn.range.min + static_cast<int>(i) << ',' << scn.rb_capacity[i] << ',' << pack.blocks[i] << ','
       << unused << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered RLNC multicast: recovery models, resource allocation and experiments"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Random seed (defaults to the scenario's)");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
  };
  auto grid = [&](CLI::App* sub) {
    sub->add_option("--schemes", o.schemes, "Schemes: NOW-SA, NOW-MA, EW-MA, MrT")->delimiter(',');
    sub->add_option("--q", o.field_sizes, "Field sizes from {2, 4, 16, 256}")->delimiter(',');
  };

  auto* validate = app.add_subcommand("validate", "Compare analytic EW probabilities with simulation");
  common(validate);
  validate->add_option("--trials", o.trials, "Monte-Carlo trials per point");
  validate->add_option("--q", o.field_sizes, "Field sizes from {2, 4, 16, 256}")->delimiter(',');
  validate->add_option("--workers", o.workers, "Simulation threads (0 = all cores)");

  auto* allocate = app.add_subcommand("allocate", "Allocate one scenario at a single field size");
  common(allocate);
  grid(allocate);

  auto* sweep = app.add_subcommand("sweep", "Allocate every scheme at every field size");
  common(sweep);
  grid(sweep);

  auto* pack = app.add_subcommand("pack-tb", "Solve the transport block packing problem");
  common(pack);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return run_validate(o);
    if (*allocate) return run_points(o, true);
    if (*sweep) return run_points(o, false);
    if (*pack) return run_pack_tb(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
