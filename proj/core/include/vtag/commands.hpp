#pragma once

#include <iosfwd>

#include "vtag/config.hpp"

namespace vtag {

// One function per CLI subcommand; every input comes from the config file.
// Failures throw vtag::Error; the CLI turns them into nonzero exits.
void cmd_synth(const ExperimentConfig& cfg, std::ostream& out);
void cmd_split(const ExperimentConfig& cfg, std::ostream& out);
void cmd_train(const ExperimentConfig& cfg, std::ostream& out);
void cmd_predict(const ExperimentConfig& cfg, std::ostream& out);
void cmd_eval(const ExperimentConfig& cfg, std::ostream& out);
void cmd_bag(const ExperimentConfig& cfg, std::ostream& out);
void cmd_boost(const ExperimentConfig& cfg, std::ostream& out);
void cmd_cascade_train(const ExperimentConfig& cfg, std::ostream& out);
void cmd_distill_train(const ExperimentConfig& cfg, std::ostream& out);
void cmd_stack(const ExperimentConfig& cfg, std::ostream& out);
void cmd_submit(const ExperimentConfig& cfg, std::ostream& out);

// Dispatches by command name; returns a process exit status.
int run_command(const std::string& command, const std::string& config_path,
                std::ostream& out, std::ostream& err);

const std::vector<std::string>& command_names();

}  // namespace vtag
