#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "acp/errors.hpp"
#include "acp/harness.hpp"

namespace {
void on_signal(int) { acp::interrupt_flag().store(true); }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive contact process lab"};
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int parallel = 0;
  std::vector<std::string> overrides;
  app.add_option("--config", config, "experiment config (JSON)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* par_opt = app.add_option("--parallel", parallel, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--override", overrides, "dotted.key=value")->take_all();
  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  acp::HarnessOptions opt;
  if (*seed_opt) opt.seed = seed;
  if (*out_opt) opt.out_dir = out;
  if (*par_opt) opt.parallel = parallel;
  opt.overrides = overrides;
  nlohmann::json cfg;
  try {
    cfg = acp::load_config(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return acp::exit_validation;
  }
  auto b = acp::run_experiment(cfg, opt);
  if (b.exit_code != acp::exit_ok) std::cerr << "exit " << b.exit_code << ": " << b.message << '\n';
  else std::cout << "wrote " << b.files.size() << " file(s) to " << b.dir << '\n';
  return b.exit_code;
}
