#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "capmass/capmass.h"

namespace {

struct ConfigDeleter {
  void operator()(capmass_config* c) const { capmass_config_free(c); }
};

void print_line(const char* line, void*) {
  std::fputs(line, stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

bool apply(capmass_config* cfg, const std::string& key, const std::string& value) {
  if (capmass_config_set(cfg, key.c_str(), value.c_str()) == CAPMASS_OK) return true;
  std::cerr << "capmass: " << capmass_last_error() << "\n";
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacity, isoperimetric and isocapacitary mass deficits of conformally flat metrics"};
  app.set_version_flag("--version", capmass_version());
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, metric, ball, mass, dimension;
  std::vector<std::string> sets;
  unsigned long long seed = 0;
  int threads = 0;
  bool fast = false;

  app.add_option("--config", config_path, "key = value scenario file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (output.dir)");
  app.add_option("--seed", seed, "RNG seed (rng.seed)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::NonNegativeNumber);
  app.add_flag("--fast", fast, "skip grid-solver criteria in verify and the grid backend in 'all'");
  app.add_option("--metric", metric, "metric.kind")->check(CLI::IsMember({"euclidean", "schwarzschild", "multicenter"}));
  app.add_option("--mass", mass, "metric.mass");
  app.add_option("--dimension", dimension, "metric.dimension");
  app.add_option("--ball", ball, "centred ball of this radius (region.shape=ball)");
  app.add_option("--set", sets, "key=value override, repeatable")->take_all();

  const char* commands[][2] = {
      {"capacity", "capacity of one region per backend"},
      {"deficit", "all deficits of one region"},
      {"convergence", "deficits over an exhaustion and their limits"},
      {"sweep", "repeat a command over values of sweep.key"},
      {"verify", "acceptance criteria"},
  };
  for (const auto& c : commands) app.add_subcommand(c[0], c[1]);

  // Handled before parsing because every other invocation needs a subcommand.
  if (argc > 1 && std::string(argv[1]) == "--list-keys") {
    for (size_t i = 0; i < capmass_config_key_count(); ++i)
      std::printf("%-32s %-14s %s\n", capmass_config_key_name(i), capmass_config_key_default(i),
                  capmass_config_key_help(i));
    return 0;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::unique_ptr<capmass_config, ConfigDeleter> cfg(capmass_config_new());
  if (!cfg) return 3;
  if (!config_path.empty() && capmass_config_load_file(cfg.get(), config_path.c_str()) != CAPMASS_OK) {
    std::cerr << "capmass: " << capmass_last_error() << "\n";
    return 2;
  }
  bool ok = true;
  if (app.count("--metric")) ok = ok && apply(cfg.get(), "metric.kind", metric);
  if (app.count("--mass")) ok = ok && apply(cfg.get(), "metric.mass", mass);
  if (app.count("--dimension")) ok = ok && apply(cfg.get(), "metric.dimension", dimension);
  if (app.count("--ball")) ok = ok && apply(cfg.get(), "region.shape", "ball") && apply(cfg.get(), "region.params", ball);
  if (app.count("--seed")) ok = ok && apply(cfg.get(), "rng.seed", std::to_string(seed));
  if (app.count("--out")) ok = ok && apply(cfg.get(), "output.dir", out_dir);
  for (const auto& s : sets) {
    if (!ok) break;
    if (capmass_config_set_assignment(cfg.get(), s.c_str()) != CAPMASS_OK) {
      std::cerr << "capmass: " << capmass_last_error() << "\n";
      ok = false;
    }
  }
  if (!ok) return 2;

  const std::string command = app.get_subcommands().front()->get_name();
  capmass_run_flags flags{fast ? 1 : 0, threads};
  int exit_code = 0;
  if (capmass_run(cfg.get(), command.c_str(), &flags, print_line, nullptr, &exit_code) != CAPMASS_OK) {
    std::cerr << "capmass: " << capmass_last_error() << "\n";
    return 3;
  }
  return exit_code;
}
