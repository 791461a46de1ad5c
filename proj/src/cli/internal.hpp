#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lesionbench/core.hpp"

namespace lesionbench::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kSchema = "lesionbench/1";

/// State shared by every subcommand run: global options plus the files read
/// and written, which end up in the manifest.
struct RunContext {
  std::string subcommand;
  std::uint64_t seed = 42;
  int threads = 1;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  json config = json::object();

  /// Stream seed for this subcommand: seed XOR a stable tag of its name, so
  /// one subcommand's streams never depend on another's.
  std::uint64_t module_seed() const;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<void(RunContext&)> run;
};

// Each registers its options on `parent` and returns the handler.
Command add_prep(CLI::App& parent);
Command add_eval_class(CLI::App& parent);
Command add_eval_uq(CLI::App& parent);
Command add_eval_cal(CLI::App& parent);
Command add_eval_dca(CLI::App& parent);
Command add_eval_detect(CLI::App& parent);
Command add_harmonize(CLI::App& parent);
Command add_report(CLI::App& parent);

/// Turns a JSON or TOML config file into `--flag value...` tokens for the
/// options of `app`. Keys may use underscores or dashes. A table named after
/// the subcommand is merged over top-level keys; other tables are ignored.
/// Keys named in `skip` (already given on the command line) are dropped.
std::vector<std::string> config_tokens(const fs::path& path, const CLI::App& app, const std::set<std::string>& skip);

/// Effective option values after parsing, for the manifest.
json config_snapshot(const CLI::App& app);

std::uint64_t fnv1a64(const std::string& text);
std::string sha256_file(const fs::path& path);

/// Writes `<out>.manifest.json` (or `path` verbatim when given) describing the run.
void write_manifest(const RunContext& ctx, const fs::path& manifest_path);
fs::path manifest_path_for(const fs::path& output);

/// Header common to every output document.
json document(const std::string& kind);

json metric_json(const MaybeMetric& m);
json optional_json(const std::optional<double>& v);

/// Writes pretty JSON with a trailing newline, creating parent directories.
void write_json(const fs::path& path, const json& j);
void write_file(const fs::path& path, const std::string& text);

/// Reads a lesionbench output document and checks schema and kind.
json read_document(const fs::path& path, const std::string& expected_kind);

// SVG views of output documents.
std::string plot_classification(const json& doc);
std::string plot_uncertainty(const json& doc);
std::string plot_calibration(const json& doc);
std::string plot_dca(const json& doc);
std::string plot_detection(const json& doc);

}  // namespace lesionbench::cli
