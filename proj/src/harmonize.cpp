#include "lesionbench/harmonize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lesionbench/io.hpp"
#include "lesionbench/numeric.hpp"

namespace lesionbench::harmonize {

using nlohmann::json;

namespace {

constexpr double kEbTolerance = 1e-8;
constexpr int kEbMaxIterations = 500;

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double sample_variance(std::span<const double> v, double mean) {
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  return compensated_sum(sq) / static_cast<double>(v.size() - 1);
}

struct Layout {
  std::vector<std::string> batches;
  std::map<std::string, std::vector<std::size_t>> rows_of;
};

Layout layout_of(const FeatureMatrix& x) {
  Layout l;
  for (std::size_t r = 0; r < x.rows(); ++r) l.rows_of[x.batch[r]].push_back(r);
  for (const auto& [b, _] : l.rows_of) l.batches.push_back(b);
  return l;
}

std::vector<double> column(const FeatureMatrix& x, std::span<const std::size_t> rows, std::size_t c) {
  std::vector<double> v;
  v.reserve(rows.size());
  for (std::size_t r : rows) v.push_back(x.at(r, c));
  return v;
}

// Location/scale shrinkage for one batch over all features.
void empirical_bayes(BatchParams& p, const std::vector<std::vector<double>>& standardized) {
  const std::size_t d = p.gamma_hat.size();
  const auto n = static_cast<double>(standardized.front().size());
  require(d >= 2, "combat_fit: empirical_bayes mode needs at least 2 features");

  p.gamma_bar = compensated_mean(p.gamma_hat);
  p.tau2 = sample_variance(p.gamma_hat, p.gamma_bar);
  const double m = compensated_mean(p.delta2_hat);
  const double s2 = sample_variance(p.delta2_hat, m);
  const bool scale_prior_degenerate = !(s2 > 0.0);
  if (!scale_prior_degenerate) {
    p.a_prior = (2.0 * s2 + m * m) / s2;
    p.b_prior = (m * s2 + m * m * m) / s2;
  }

  std::vector<double> g_old = p.gamma_hat;
  std::vector<double> d_old = p.delta2_hat;
  std::vector<double> g_new(d), d_new(d);
  p.iterations = 0;
  for (int it = 1; it <= kEbMaxIterations; ++it) {
    double change = 0.0;
    for (std::size_t f = 0; f < d; ++f) {
      g_new[f] = (n * p.tau2 * p.gamma_hat[f] + d_old[f] * p.gamma_bar) / (n * p.tau2 + d_old[f]);
      if (scale_prior_degenerate) {
        d_new[f] = m;
      } else {
        std::vector<double> sq(standardized[f].size());
        for (std::size_t i = 0; i < sq.size(); ++i) {
          const double r = standardized[f][i] - g_new[f];
          sq[i] = r * r;
        }
        d_new[f] = (0.5 * compensated_sum(sq) + p.b_prior) / (n / 2.0 + p.a_prior - 1.0);
      }
      change = std::max({change, std::abs(g_new[f] - g_old[f]), std::abs(d_new[f] - d_old[f])});
    }
    g_old = g_new;
    d_old = d_new;
    p.iterations = it;
    if (change < kEbTolerance) break;
  }
  p.gamma = g_old;
  p.delta.resize(d);
  for (std::size_t f = 0; f < d; ++f) p.delta[f] = std::sqrt(d_old[f]);
}

}  // namespace

void FeatureMatrix::validate() const {
  require(cols() >= 1, "features: need at least one feature column");
  require(values.size() == rows() * cols(), "features: value count does not match rows x cols");
  require(sample_ids.empty() || sample_ids.size() == rows(), "features: sample_ids length mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      fail("features: non-finite value at row " + std::to_string(i / cols() + 1) + ", column " +
           feature_names[i % cols()]);
  }
}

std::string to_string(CombatMode mode) { return mode == CombatMode::exact ? "exact" : "empirical_bayes"; }

CombatMode parse_mode(const std::string& text) {
  if (text == "exact") return CombatMode::exact;
  if (text == "empirical_bayes" || text == "eb") return CombatMode::empirical_bayes;
  fail("combat mode: expected \"exact\" or \"empirical_bayes\", got \"" + text + "\"");
}

CombatModel combat_fit(const FeatureMatrix& x, CombatMode mode) {
  x.validate();
  const Layout layout = layout_of(x);
  require(layout.batches.size() >= 2, "combat_fit: need >= 2 batches");
  for (const auto& [b, rows] : layout.rows_of)
    require(rows.size() >= 2, "combat_fit: singleton batch \"" + b + "\" (every batch needs >= 2 samples)");

  const std::size_t d = x.cols();
  const auto n = static_cast<double>(x.rows());
  const auto n_batches = static_cast<double>(layout.batches.size());
  CombatModel model;
  model.mode = mode;
  model.feature_names = x.feature_names;
  model.grand_mean.resize(d);
  model.pooled_std.resize(d);

  // Batch means per feature, then grand mean and pooled within-batch variance.
  std::map<std::string, std::vector<double>> batch_mean;
  for (const auto& b : layout.batches) batch_mean[b].resize(d);
  for (std::size_t f = 0; f < d; ++f) {
    std::vector<double> all = column(x, std::vector<std::size_t>(), f);
    std::vector<double> residual_sq;
    std::vector<double> weighted;
    for (const auto& b : layout.batches) {
      const auto& rows = layout.rows_of.at(b);
      const auto v = column(x, rows, f);
      const double mu = compensated_mean(v);
      batch_mean[b][f] = mu;
      weighted.push_back(mu * static_cast<double>(rows.size()));
      for (double val : v) residual_sq.push_back((val - mu) * (val - mu));
    }
    model.grand_mean[f] = compensated_sum(weighted) / n;
    const double pooled_var = compensated_sum(residual_sq) / (n - n_batches);
    require(pooled_var > 0.0, "combat_fit: feature " + x.feature_names[f] + " has zero pooled variance");
    model.pooled_std[f] = std::sqrt(pooled_var);
  }

  for (const auto& b : layout.batches) {
    const auto& rows = layout.rows_of.at(b);
    BatchParams p;
    p.gamma_hat.resize(d);
    p.delta2_hat.resize(d);
    std::vector<std::vector<double>> standardized(d);
    for (std::size_t f = 0; f < d; ++f) {
      auto& z = standardized[f];
      z.reserve(rows.size());
      for (std::size_t r : rows) z.push_back((x.at(r, f) - model.grand_mean[f]) / model.pooled_std[f]);
      p.gamma_hat[f] = compensated_mean(z);
      p.delta2_hat[f] = sample_variance(z, p.gamma_hat[f]);
      // Rounding in the standardized mean can leave a constant column with a tiny nonzero variance.
      const auto raw = column(x, rows, f);
      const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
      require(*lo != *hi && p.delta2_hat[f] > 0.0,
              "combat_fit: feature " + x.feature_names[f] + " has zero variance within batch \"" + b + "\"");
    }
    if (mode == CombatMode::exact) {
      p.gamma = p.gamma_hat;
      p.delta.resize(d);
      for (std::size_t f = 0; f < d; ++f) p.delta[f] = std::sqrt(p.delta2_hat[f]);
    } else {
      empirical_bayes(p, standardized);
    }
    model.batches.emplace(b, std::move(p));
  }
  return model;
}

FeatureMatrix combat_transform(const CombatModel& model, const FeatureMatrix& x) {
  x.validate();
  require(x.cols() == model.feature_names.size(),
          "combat_transform: feature count " + std::to_string(x.cols()) + " differs from model's " +
              std::to_string(model.feature_names.size()));
  FeatureMatrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto it = model.batches.find(x.batch[r]);
    require(it != model.batches.end(), "combat_transform: unseen batch \"" + x.batch[r] + "\"");
    const BatchParams& p = it->second;
    for (std::size_t f = 0; f < x.cols(); ++f) {
      const double z = (x.at(r, f) - model.grand_mean[f]) / model.pooled_std[f];
      out.at(r, f) = model.pooled_std[f] * (z - p.gamma[f]) / p.delta[f] + model.grand_mean[f];
    }
  }
  return out;
}

FeatureMatrix parse_features(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) fail(source + ": empty file (missing header)");
  const auto header = split(line);
  std::optional<std::size_t> batch_col;
  std::optional<std::size_t> id_col;
  std::vector<std::size_t> feature_cols;
  FeatureMatrix x;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "batch") {
      batch_col = c;
    } else if (header[c] == "sample_id") {
      id_col = c;
    } else {
      feature_cols.push_back(c);
      x.feature_names.push_back(header[c]);
    }
  }
  if (!batch_col) fail(source + ": header: missing column \"batch\"");
  if (feature_cols.empty()) fail(source + ": header: no feature columns");

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    const std::string where = source + ": row " + std::to_string(row);
    if (cells.size() != header.size())
      fail(where + ": expected " + std::to_string(header.size()) + " columns, got " + std::to_string(cells.size()));
    x.batch.push_back(cells[*batch_col]);
    if (id_col) x.sample_ids.push_back(cells[*id_col]);
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const std::string& t = cells[feature_cols[k]];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        fail(where + ": column " + x.feature_names[k] + ": not a number: \"" + t + "\"");
      if (!std::isfinite(v)) fail(where + ": column " + x.feature_names[k] + ": non-finite value");
      x.values.push_back(v);
    }
  }
  x.validate();
  return x;
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path.string() + ": cannot open file");
  return parse_features(in, path.string());
}

std::string format_features(const FeatureMatrix& x) {
  std::ostringstream out;
  const bool ids = !x.sample_ids.empty();
  if (ids) out << "sample_id,";
  out << "batch";
  for (const auto& f : x.feature_names) out << ',' << f;
  out << '\n';
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (ids) out << x.sample_ids[r] << ',';
    out << x.batch[r];
    for (std::size_t c = 0; c < x.cols(); ++c) out << ',' << io::format_double(x.at(r, c));
    out << '\n';
  }
  return out.str();
}

std::string model_to_json(const CombatModel& model) {
  json j;
  j["schema"] = "lesionbench/1";
  j["kind"] = "combat-model";
  j["mode"] = to_string(model.mode);
  j["features"] = model.feature_names;
  j["grand_mean"] = model.grand_mean;
  j["pooled_std"] = model.pooled_std;
  json batches = json::object();
  for (const auto& [name, p] : model.batches) {
    batches[name] = {{"gamma", p.gamma},         {"delta", p.delta},       {"gamma_hat", p.gamma_hat},
                     {"delta2_hat", p.delta2_hat}, {"gamma_bar", p.gamma_bar}, {"tau2", p.tau2},
                     {"a_prior", p.a_prior},     {"b_prior", p.b_prior},   {"iterations", p.iterations}};
  }
  j["batches"] = std::move(batches);
  return j.dump(2) + "\n";
}

CombatModel model_from_json(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(source + ": malformed JSON: " + e.what());
  }
  try {
    if (j.value("schema", "") != "lesionbench/1") fail(source + ": schema version mismatch (expected lesionbench/1)");
    if (j.value("kind", "") != "combat-model") fail(source + ": not a combat model (kind != combat-model)");
    CombatModel m;
    m.mode = parse_mode(j.at("mode").get<std::string>());
    m.feature_names = j.at("features").get<std::vector<std::string>>();
    m.grand_mean = j.at("grand_mean").get<std::vector<double>>();
    m.pooled_std = j.at("pooled_std").get<std::vector<double>>();
    const std::size_t d = m.feature_names.size();
    require(m.grand_mean.size() == d && m.pooled_std.size() == d, source + ": parameter length mismatch");
    for (const auto& [name, b] : j.at("batches").items()) {
      BatchParams p;
      p.gamma = b.at("gamma").get<std::vector<double>>();
      p.delta = b.at("delta").get<std::vector<double>>();
      p.gamma_hat = b.value("gamma_hat", std::vector<double>{});
      p.delta2_hat = b.value("delta2_hat", std::vector<double>{});
      p.gamma_bar = b.value("gamma_bar", 0.0);
      p.tau2 = b.value("tau2", 0.0);
      p.a_prior = b.value("a_prior", 0.0);
      p.b_prior = b.value("b_prior", 0.0);
      p.iterations = b.value("iterations", 0);
      require(p.gamma.size() == d && p.delta.size() == d, source + ": batch \"" + name + "\" length mismatch");
      for (double s : p.delta) require(s > 0.0, source + ": batch \"" + name + "\" has non-positive delta");
      m.batches.emplace(name, std::move(p));
    }
    require(m.batches.size() >= 2, source + ": model must contain >= 2 batches");
    return m;
  } catch (const json::exception& e) {
    fail(source + ": invalid combat model: " + e.what());
  }
}

}  // namespace lesionbench::harmonize
