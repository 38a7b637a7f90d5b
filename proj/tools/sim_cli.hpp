#pragma once

// Command-line front end. Kept in a header so the tests can drive it
// in-process.
//
//   sim <scenario> --config <file> [--out <path>] [--format csv|json] [--threads N]
//   sim validate --config <file>
//   sim list-scenarios
//
// Exit codes: 0 ok, 1 I/O or usage, 2 config, 3 capacity, 4 numerical.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "optocav/scenarios.hpp"

namespace optocav::cli {

enum ExitCode : int { kOk = 0, kIoError = 1, kConfigError = 2, kCapacityError = 3, kNumericalError = 4 };

inline void write_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::ios_base::failure("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::ios_base::failure("write failed for " + path);
}

// Writes every table; returns the paths written (empty when printing to `out`).
inline std::vector<std::string> emit(const std::vector<Table>& tables, const ScenarioConfig& cfg, std::ostream& out) {
  std::vector<std::string> written;
  if (cfg.format == OutputFormat::json) {
    const auto doc = write_json(tables, scenario_name(cfg.scenario));
    if (cfg.out_path.empty()) {
      out << doc;
    } else {
      write_file(cfg.out_path, doc);
      written.push_back(cfg.out_path);
    }
    return written;
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto csv = write_csv(tables[i]);
    if (cfg.out_path.empty()) {
      if (i) out << '\n';
      out << csv;
    } else {
      const auto path = table_path(cfg.out_path, tables[i].name, tables.size());
      write_file(path, csv);
      written.push_back(path);
    }
  }
  return written;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"optomechanical cavity simulator", "sim"};
  app.require_subcommand(1);

  std::string config_path, out_path, format;
  unsigned threads = 1;

  auto* validate = app.add_subcommand("validate", "check a config file and print the resolved scenario");
  validate->add_option("--config", config_path, "JSON config")->required();
  app.add_subcommand("list-scenarios", "print the available scenarios");

  std::vector<CLI::App*> runs;
  for (const auto& s : kScenarios) {
    auto* sub = app.add_subcommand(s.name, s.summary);
    sub->add_option("--config", config_path, "JSON config")->required();
    sub->add_option("--out", out_path, "output path (default stdout)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", threads, "worker threads for per-alpha / per-G items")->check(CLI::Range(1u, 256u));
    runs.push_back(sub);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kIoError;
  }

  try {
    if (app.got_subcommand("list-scenarios")) {
      for (const auto& s : kScenarios) out << s.name << "\t" << s.summary << "\n";
      return kOk;
    }
    if (validate->parsed()) {
      const auto cfg = load_config_file(config_path);
      out << "ok: " << scenario_name(cfg.scenario) << "\n";
      return kOk;
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (!runs[i]->parsed()) continue;
      auto cfg = load_config_file(config_path, kScenarios[i].id);
      if (!out_path.empty()) cfg.out_path = out_path;
      if (format == "csv") cfg.format = OutputFormat::csv;
      if (format == "json") cfg.format = OutputFormat::json;
      const auto tables = run_scenario(cfg, threads);
      for (const auto& t : tables)
        for (const auto& [k, v] : t.metadata)
          if (k.rfind("warning.", 0) == 0) err << "warning [" << t.name << "]: " << v << "\n";
      for (const auto& p : emit(tables, cfg, out)) err << "wrote " << p << "\n";
      return kOk;
    }
  } catch (const ConfigError& e) {
    err << "config error " << e.what() << "\n";
    return e.code() == "config.io" ? kIoError : kConfigError;
  } catch (const CapacityError& e) {
    err << "capacity error: " << e.what() << "\n";
    return kCapacityError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kIoError;
}

}  // namespace optocav::cli
