#include "rpl/cli/config.hpp"
#include "rpl/cli/run.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv) {
  using namespace rpl::cli;
  CLI::App app{"Robin p-Laplacian first eigenvalue, shape derivatives and their verification"};
  app.require_subcommand(1);
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "print the configuration keys and exit");

  std::map<std::string, std::string> config_path;
  std::map<std::string, std::map<std::string, std::string>> flags;
  for (const auto& name : commands()) {
    auto* sub = app.add_subcommand(name);
    // the mesh size key is --h, so help is long-form only here
    sub->set_help_flag("--help", "print this help and exit");
    sub->add_option("-c,--config", config_path[name], "key = value configuration file");
    for (const auto& [key, help] : known_keys()) sub->add_option("--" + key, flags[name][key], help);
  }
  // --list-keys alone should not demand a subcommand
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--list-keys") {
      for (const auto& [key, help] : known_keys()) std::cout << key << "\t" << help << "\n";
      return kOk;
    }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  KeyValues kv;
  try {
    if (!config_path[command].empty()) kv = read_config_file(config_path[command]);
  } catch (const rpl::Error& e) {
    std::cerr << "rpl " << command << ": config error: " << e.what() << std::endl;
    return kConfig;
  }
  auto* sub = app.get_subcommand(command);
  for (const auto& [key, value] : flags[command])
    if (sub->count("--" + key)) kv[key] = value;
  return run_command(command, kv, std::cout, std::cerr);
}
