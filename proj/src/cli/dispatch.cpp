#include <algorithm>
#include <iostream>

#include "internal.hpp"
#include "lesionbench/cli.hpp"

#ifndef LESIONBENCH_VERSION
#define LESIONBENCH_VERSION "0.0.0"
#endif

namespace lesionbench::cli {

std::string version() { return LESIONBENCH_VERSION; }

namespace {

bool is_help(const CLI::ParseError& e) {
  const std::string name = e.get_name();
  return name == "CallForHelp" || name == "CallForAllHelp" || name == "CallForVersion";
}

/// Long option names given on the command line, without dashes.
std::set<std::string> given_options(const std::vector<std::string>& args) {
  std::set<std::string> names;
  for (const auto& a : args) {
    if (a.size() > 2 && a.rfind("--", 0) == 0) names.insert(a.substr(2, a.find('=') - 2));
  }
  return names;
}

std::optional<std::string> config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) fail("--config requires a path");
      return args[i + 1];
    }
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

}  // namespace

int dispatch(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"lesionbench: deterministic lesion model evaluation toolkit", "lesionbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  RunContext ctx;
  std::string config_file;
  std::vector<Command> commands = {add_prep(app),     add_eval_class(app),  add_eval_uq(app), add_eval_cal(app),
                                   add_eval_dca(app), add_eval_detect(app), add_harmonize(app), add_report(app)};
  for (auto& c : commands) {
    c.app->add_option("--seed", ctx.seed, "Random seed")->capture_default_str();
    c.app->add_option("--threads", ctx.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1, 256));
    c.app->add_option("--config", config_file, "JSON or TOML file supplying any flag; flags win");
  }

  std::vector<std::string> args = args_in;
  CLI::App* target = nullptr;
  try {
    if (!args.empty()) {
      for (auto& c : commands) {
        if (c.app->get_name() == args.front()) target = c.app;
      }
    }
    if (target == nullptr && !args.empty() && args.front().rfind("-", 0) != 0) {
      err << "error: unknown subcommand \"" << args.front() << "\"\n\n" << app.help();
      return 1;
    }
    if (target != nullptr) {
      if (const auto path = config_path(args)) {
        const auto extra = config_tokens(*path, *target, given_options(args));
        args.insert(args.end(), extra.begin(), extra.end());
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (is_help(e)) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << (target != nullptr ? target->help() : app.help());
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    ctx.subcommand = c.app->get_name();
    ctx.config = config_snapshot(*c.app);
    if (!config_file.empty()) ctx.config["config_file"] = config_file;
    try {
      c.run(ctx);
      return 0;
    } catch (const ValidationError& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      err << "internal error: " << e.what() << "\n";
      return 2;
    }
  }
  err << "error: no subcommand\n\n" << app.help();
  return 1;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace lesionbench::cli
