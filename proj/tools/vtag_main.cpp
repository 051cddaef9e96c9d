#include <iostream>

#include <CLI11.hpp>

#include "vtag/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"multi-label video tagging: models, metrics and ensembles"};
  app.require_subcommand(1);

  std::string config_path;
  std::string chosen;
  for (const std::string& name : vtag::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("config", config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->callback([&chosen, name]() { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);
  return vtag::run_command(chosen, config_path, std::cout, std::cerr);
}
