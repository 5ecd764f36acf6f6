#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eitdg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"EIT conductivity reconstruction with a P2 MD-LDG forward solver"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "INI run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "noise seed (overrides [noise] seed)");
  app.add_option("--threads", threads, "worker thread cap (0 = hardware concurrency)");
  app.add_option("--out", out, "output directory (overrides [run] out)");
  CLI11_PARSE(app, argc, argv);

  eitdg::RunConfig cfg;
  try {
    cfg = eitdg::load_config(config_path);
  } catch (const eitdg::ConfigError& e) {
    std::cerr << "eitdg: config error: " << e.what() << '\n';
    return 2;
  }
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  if (out) cfg.out_dir = *out;
  return eitdg::run(cfg, std::cout, std::cerr);
}
