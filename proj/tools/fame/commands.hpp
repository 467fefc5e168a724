#pragma once

#include <string>

#include <CLI11.hpp>

#include "settings.hpp"

namespace fame::cli {

/// Declares every subcommand and its flags on `app`.
void register_commands(CLI::App& app, Settings& settings, KeyRegistry& keys);

/// Runs the parsed subcommand and writes its manifest. Returns the exit code.
int run_command(const std::string& name, Settings& settings, const KeyRegistry& keys);

}  // namespace fame::cli
