#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "fame/errors.hpp"
#include "settings.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitService = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace fame;
  cli::Settings settings;
  cli::KeyRegistry keys(settings);

  CLI::App app{"Impact forecasting on a spatiotemporal paper manifold"};
  app.name("fame");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);
  cli::register_commands(app, settings, keys);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!settings.config_file.empty()) {
      std::ifstream in(settings.config_file);
      if (!in) throw ArgumentError("cannot read config file " + settings.config_file.string());
      keys.apply(cli::parse_config_text(in));
    }
    return cli::run_command(app.get_subcommands().front()->get_name(), settings, keys);
  } catch (const ArgumentError& e) {
    std::cerr << "fame: usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ServiceError& e) {
    std::cerr << "fame: external service error: " << e.what() << '\n';
    return kExitService;
  } catch (const std::exception& e) {
    std::cerr << "fame: error: " << e.what() << '\n';
    return kExitData;
  }
}
