// mixopt: occupancy computation, mixture-policy optimization and hardness
// checks driven by `key = value` config files.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mixopt/config.hpp"
#include "mixopt/experiment.hpp"
#include "mixopt/kernels.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override the config's seed");
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture-policy optimization in the primal and dual spaces"};
  app.require_subcommand(1);
  bool show_isa = false;
  app.add_flag("--isa", show_isa, "print the active SIMD kernel set to stderr");

  Common occ, opt, hard, cmp;
  auto* c_occ = app.add_subcommand("occupancy", "compute (or reuse) base-policy occupancy measures");
  auto* c_opt = app.add_subcommand("optimize", "run the configured primal-fd, dual-sgd or dual-grid method");
  auto* c_hard = app.add_subcommand("hardness", "stable-set reduction and Motzkin-Straus check on a graph");
  auto* c_cmp = app.add_subcommand("compare", "primal and dual cost per step in one CSV");
  add_common(c_occ, occ);
  add_common(c_opt, opt);
  add_common(c_hard, hard);
  add_common(c_cmp, cmp);

  CLI11_PARSE(app, argc, argv);
  if (show_isa) std::cerr << "kernels: " << mixopt::kernels::isa_name(mixopt::kernels::active().isa) << '\n';

  auto load = [](const Common& c) { return mixopt::load_experiment(c.config, c.seed); };
  try {
    if (*c_occ) return mixopt::run_occupancy(load(occ), occ.out, std::cout, std::cerr);
    if (*c_opt) {
      return mixopt::run_experiment(load(opt), opt.out, std::cout, std::cerr);
    }
    if (*c_hard) {
      auto cfg = load(hard);
      if (cfg.raw.has("method") && cfg.method != mixopt::Method::Hardness) {
        std::cerr << "config error: " << hard.config << ": the `hardness` subcommand needs method = hardness\n";
        return mixopt::kExitConfig;
      }
      if (!cfg.raw.has("method")) {
        cfg.method = mixopt::Method::Hardness;
        if (!cfg.raw.has("gamma")) cfg.gamma = 0.9;
        if (!cfg.raw.has("resolution")) cfg.lattice_resolution = 0.02;
      }
      return mixopt::run_experiment(cfg, hard.out, std::cout, std::cerr);
    }
    if (*c_cmp) return mixopt::compare_methods(load(cmp), cmp.out, std::cout, std::cerr);
  } catch (const mixopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return mixopt::kExitConfig;
  }
  return 1;
}
