#include <openssl/evp.h>

#include <cctype>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "internal.hpp"
#include "lesionbench/cli.hpp"
#include "lesionbench/io.hpp"

namespace lesionbench::cli {

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t RunContext::module_seed() const { return seed ^ fnv1a64(subcommand); }

namespace {

std::string normalize_key(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

using Entries = std::map<std::string, std::vector<std::string>>;

std::string scalar_text(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  fail(where + ": unsupported value " + v.dump());
}

void json_entries(const json& obj, const std::string& path, Entries& out) {
  for (const auto& [key, v] : obj.items()) {
    if (v.is_object()) continue;
    if (v.is_null()) continue;
    std::vector<std::string> values;
    if (v.is_array()) {
      for (const auto& e : v) values.push_back(scalar_text(e, path + ": key \"" + key + "\""));
    } else {
      values.push_back(scalar_text(v, path + ": key \"" + key + "\""));
    }
    out[normalize_key(key)] = std::move(values);
  }
}

Entries read_entries(const fs::path& path, const std::string& section) {
  const std::string text = io::read_text(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  Entries top;
  Entries mine;
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(path.string() + ": malformed JSON config: " + e.what());
    }
    json_entries(j, path.string(), top);
    if (j.contains(section) && j[section].is_object()) json_entries(j[section], path.string(), mine);
  } else {
    std::istringstream in(text);
    std::vector<CLI::ConfigItem> items;
    try {
      items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
      fail(path.string() + ": malformed TOML config: " + e.what());
    }
    for (const auto& item : items) {
      if (item.name == "++" || item.name == "--") continue;
      if (item.parents.empty()) {
        top[normalize_key(item.name)] = item.inputs;
      } else if (item.parents.size() == 1 && item.parents[0] == section) {
        mine[normalize_key(item.name)] = item.inputs;
      }
    }
  }
  for (auto& [k, v] : mine) top[k] = v;
  return top;
}

}  // namespace

std::vector<std::string> config_tokens(const fs::path& path, const CLI::App& app, const std::set<std::string>& skip) {
  std::vector<std::string> tokens;
  for (const auto& [key, values] : read_entries(path, app.get_name())) {
    if (key == "config") fail(path.string() + ": a config file cannot name another config");
    if (skip.count(key)) continue;
    const CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr) fail(path.string() + ": unknown key \"" + key + "\" for " + app.get_name());
    if (opt->get_expected_max() == 0) {
      if (values.size() != 1 || (values[0] != "true" && values[0] != "false"))
        fail(path.string() + ": key \"" + key + "\" is a switch and takes true or false");
      if (values[0] == "true") tokens.push_back("--" + key);
      continue;
    }
    tokens.push_back("--" + key);
    tokens.insert(tokens.end(), values.begin(), values.end());
  }
  return tokens;
}

json config_snapshot(const CLI::App& app) {
  json snap = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || name.empty()) continue;
    const bool is_switch = opt->get_expected_max() == 0;
    if (opt->count() > 0) {
      if (is_switch) {
        snap[name] = true;
        continue;
      }
      const auto& r = opt->results();
      if (r.size() == 1 && opt->get_expected_max() <= 1) {
        snap[name] = r.front();
      } else {
        snap[name] = r;
      }
    } else if (is_switch) {
      snap[name] = false;
    } else if (!opt->get_default_str().empty()) {
      snap[name] = opt->get_default_str();
    } else {
      snap[name] = nullptr;
    }
  }
  return snap;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path.string() + ": cannot open file for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest initialisation failed");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

namespace {

std::string timestamp() {
  std::time_t t = std::time(nullptr);
  // Reproducible builds convention: honour a pinned epoch when one is set.
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::atoll(epoch));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json file_list(const std::vector<fs::path>& files) {
  json arr = json::array();
  std::set<std::string> seen;
  for (const auto& f : files) {
    if (!seen.insert(f.string()).second) continue;
    arr.push_back({{"path", f.string()}, {"sha256", sha256_file(f)}});
  }
  return arr;
}

}  // namespace

fs::path manifest_path_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

void write_manifest(const RunContext& ctx, const fs::path& manifest_path) {
  json m = document("manifest");
  m["tool"] = "lesionbench";
  m["version"] = version();
  m["subcommand"] = ctx.subcommand;
  m["seed"] = ctx.seed;
  m["threads"] = ctx.threads;
  m["timestamp"] = timestamp();
  m["config"] = ctx.config;
  m["inputs"] = file_list(ctx.inputs);
  m["outputs"] = file_list(ctx.outputs);
  write_json(manifest_path, m);
}

json document(const std::string& kind) {
  json j = json::object();
  j["schema"] = kSchema;
  j["kind"] = kind;
  return j;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json("undefined"); }

json metric_json(const MaybeMetric& m) {
  if (!m) return "undefined";
  return {{"value", m->value},
          {"ci_low", m->ci_low},
          {"ci_high", m->ci_high},
          {"n_resamples", m->n_resamples},
          {"n_skipped", m->n_skipped}};
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_text(path, text);
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

json read_document(const fs::path& path, const std::string& expected_kind) {
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    fail(path.string() + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) fail(path.string() + ": expected a JSON object");
  const std::string schema = j.value("schema", "<missing>");
  if (schema != kSchema)
    fail(path.string() + ": schema version mismatch (expected " + std::string(kSchema) + ", found " + schema + ")");
  if (!expected_kind.empty() && j.value("kind", "") != expected_kind)
    fail(path.string() + ": expected a " + expected_kind + " document, found kind \"" + j.value("kind", "") + "\"");
  return j;
}

}  // namespace lesionbench::cli
