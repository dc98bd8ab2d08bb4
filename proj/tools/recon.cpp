#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "recon/pipeline.hpp"

namespace {

using recon::pipeline::Config;

struct Command {
  const char* name;
  const char* help;
  void (*run)(const Config&);
};

const Command kCommands[] = {
    {"phantom", "write the ground-truth phantom", recon::pipeline::run_phantom},
    {"simulate", "simulate measurements from the phantom", recon::pipeline::run_simulate},
    {"train", "train the network or dictionary prior", recon::pipeline::run_train},
    {"prior", "run the initial reconstruction and the prior", recon::pipeline::run_prior},
    {"reconstruct", "run all three reconstruction stages", recon::pipeline::run_reconstruct},
    {"evaluate", "write PSNR, NRMSE, SSIM and HPSI per slice", recon::pipeline::run_evaluate},
    {"render", "write one windowed slice as 8-bit PGM", recon::pipeline::run_render},
    {"convergence", "Tikhonov convergence sweep on a small dense system", recon::pipeline::run_convergence},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned-prior reconstruction pipeline for low-dose CT and radial MRI"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  bool dump = false;
  std::map<CLI::App*, const Command*> by_app;
  for (const auto& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--set", overrides, "override a config key, key=value")->take_all();
    sub->add_flag("--dump-config", dump, "print the effective configuration first");
    by_app[sub] = &cmd;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const Command* cmd = by_app.at(app.get_subcommands().front());
  try {
    Config cfg = Config::load(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    if (dump) std::cout << cfg.dump();
    cmd->run(cfg);
  } catch (const recon::NumericalError& e) {
    std::cerr << "recon " << cmd->name << ": numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "recon " << cmd->name << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
