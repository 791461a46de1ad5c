#include "lesionbench/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lesionbench::io {

using nlohmann::json;

namespace {

constexpr const char* kHeaderSuffix = ".volhdr.json";

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty())
    fail(where + ": not a number: \"" + text + "\"");
  return value;
}

const json& field(const json& obj, const char* name, const std::string& where) {
  if (!obj.is_object() || !obj.contains(name)) fail(where + ": missing field \"" + name + "\"");
  return obj.at(name);
}

Box3D parse_box(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 6) fail(where + ".box: expected array of 6 numbers");
  std::array<double, 6> c{};
  for (std::size_t i = 0; i < 6; ++i) {
    if (!j[i].is_number()) fail(where + ".box[" + std::to_string(i) + "]: not a number");
    c[i] = j[i].get<double>();
  }
  Box3D b = Box3D::from_corners(c);
  if (!b.valid()) fail(where + ".box: degenerate box (every max corner must exceed its min corner)");
  return b;
}

json box_json(const Box3D& b) {
  return json::array({b.min[0], b.min[1], b.min[2], b.max[0], b.max[1], b.max[2]});
}

fs::path payload_path_for(const fs::path& header_path) {
  std::string name = header_path.filename().string();
  const std::string suffix = kHeaderSuffix;
  if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
    name.resize(name.size() - suffix.size());
  return header_path.parent_path() / (name + ".volraw");
}

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path.string() + ": cannot open file for writing");
  out << text;
  if (!out) fail(path.string() + ": write failed");
}

std::string format_double(double value) {
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Volume read_volume(const fs::path& header_path) {
  const std::string where = header_path.string();
  json hdr;
  try {
    hdr = json::parse(read_text(header_path));
  } catch (const json::parse_error& e) {
    fail(where + ": malformed header: " + e.what());
  }
  const json& dims_j = field(hdr, "dims", where);
  const json& spacing_j = field(hdr, "spacing", where);
  const json& unit_j = field(hdr, "unit", where);
  const json& payload_j = field(hdr, "payload", where);
  if (!dims_j.is_array() || dims_j.size() != 3) fail(where + ": dims: expected 3 integers");
  if (!spacing_j.is_array() || spacing_j.size() != 3) fail(where + ": spacing: expected 3 numbers");
  if (!unit_j.is_string()) fail(where + ": unit: expected string");
  if (!payload_j.is_string()) fail(where + ": payload: expected string");

  Dims dims{};
  Spacing spacing{};
  for (std::size_t a = 0; a < 3; ++a) {
    if (!dims_j[a].is_number_integer() || dims_j[a].get<long long>() <= 0)
      fail(where + ": dims[" + std::to_string(a) + "]: expected positive integer");
    dims[a] = dims_j[a].get<std::size_t>();
    if (!spacing_j[a].is_number()) fail(where + ": spacing[" + std::to_string(a) + "]: not a number");
    spacing[a] = spacing_j[a].get<double>();
  }
  const IntensityUnit unit = parse_unit(unit_j.get<std::string>());

  const fs::path payload = header_path.parent_path() / payload_j.get<std::string>();
  const std::string raw = read_text(payload);
  const std::size_t expected = dims[0] * dims[1] * dims[2];
  if (raw.size() != expected * sizeof(float))
    fail(payload.string() + ": payload length mismatch: expected " + std::to_string(expected * sizeof(float)) +
         " bytes, got " + std::to_string(raw.size()));

  std::vector<float> voxels(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, raw.data() + i * sizeof(float), sizeof(float));
    voxels[i] = std::bit_cast<float>(to_little_endian(bits));
    if (std::isnan(voxels[i])) fail(payload.string() + ": voxel at offset " + std::to_string(i) + " is NaN");
  }
  try {
    return Volume(dims, spacing, std::move(voxels), unit);
  } catch (const ValidationError& e) {
    fail(where + ": " + e.what());
  }
}

Mask read_mask(const fs::path& header_path) {
  Volume v = read_volume(header_path);
  try {
    return Mask(std::move(v));
  } catch (const ValidationError& e) {
    fail(header_path.string() + ": " + e.what());
  }
}

void write_volume(const fs::path& header_path, const Volume& volume) {
  const fs::path payload = payload_path_for(header_path);
  json hdr;
  hdr["dims"] = {volume.dims()[0], volume.dims()[1], volume.dims()[2]};
  hdr["spacing"] = {volume.spacing()[0], volume.spacing()[1], volume.spacing()[2]};
  hdr["unit"] = to_string(volume.unit());
  hdr["payload"] = payload.filename().string();
  write_text(header_path, hdr.dump(2) + "\n");

  std::string raw(volume.size() * sizeof(float), '\0');
  const auto v = volume.voxels();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(v[i]));
    std::memcpy(raw.data() + i * sizeof(float), &bits, sizeof(float));
  }
  write_text(payload, raw);
}

void write_mask(const fs::path& header_path, const Mask& mask) { write_volume(header_path, mask.grid()); }

std::vector<PredictionRecord> parse_predictions(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) fail(source + ": empty file (missing header)");
  line = strip_cr(line);
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const auto header = split_csv_line(line);

  const char* fixed[] = {"patient_id", "site", "phase", "label"};
  for (std::size_t i = 0; i < 4; ++i) {
    if (header.size() <= i || header[i] != fixed[i])
      fail(source + ": header: missing column \"" + fixed[i] + "\" at position " + std::to_string(i + 1));
  }
  std::size_t k = 0;
  while (4 + k < header.size() && header[4 + k] == "prob_" + std::to_string(k + 1)) ++k;
  if (k == 0) fail(source + ": header: missing column \"prob_1\"");
  bool has_subgroup = false;
  if (4 + k < header.size()) {
    if (header[4 + k] != "subgroup" || 4 + k + 1 != header.size())
      fail(source + ": header: unexpected column \"" + header[4 + k] + "\"");
    has_subgroup = true;
  }
  const std::size_t n_cols = header.size();

  std::vector<PredictionRecord> records;
  std::set<std::string> seen;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = source + ": row " + std::to_string(row);
    if (cells.size() != n_cols)
      fail(where + ": expected " + std::to_string(n_cols) + " columns, got " + std::to_string(cells.size()));

    PredictionRecord r;
    r.patient_id = cells[0];
    r.site = cells[1];
    r.phase = cells[2];
    if (r.patient_id.empty()) fail(where + ": column patient_id is empty");
    if (cells[3] == "1") {
      r.label = 1;
    } else if (cells[3] == "0") {
      r.label = 0;
    } else {
      fail(where + ": column label: non-binary label \"" + cells[3] + "\"");
    }
    r.fold_probs.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      const std::string col = where + ": column prob_" + std::to_string(j + 1);
      const double p = parse_number(cells[4 + j], col);
      if (!(p >= 0.0 && p <= 1.0)) fail(col + ": probability out of range [0,1]: " + cells[4 + j]);
      r.fold_probs.push_back(p);
    }
    if (has_subgroup && !cells[4 + k].empty()) r.subgroup = cells[4 + k];
    if (!seen.insert(r.patient_id).second) fail(where + ": duplicate patient \"" + r.patient_id + "\"");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PredictionRecord> read_predictions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path.string() + ": cannot open file");
  return parse_predictions(in, path.string());
}

void write_predictions(std::ostream& out, const std::vector<PredictionRecord>& records) {
  const std::size_t k = records.empty() ? 1 : records.front().fold_probs.size();
  bool has_subgroup = false;
  for (const auto& r : records) {
    require(r.fold_probs.size() == k, "write_predictions: inconsistent fold count for " + r.patient_id);
    has_subgroup = has_subgroup || r.subgroup.has_value();
  }
  out << "patient_id,site,phase,label";
  for (std::size_t j = 0; j < k; ++j) out << ",prob_" << (j + 1);
  if (has_subgroup) out << ",subgroup";
  out << "\n";
  for (const auto& r : records) {
    out << r.patient_id << ',' << r.site << ',' << r.phase << ',' << r.label;
    for (double p : r.fold_probs) out << ',' << format_double(p);
    if (has_subgroup) out << ',' << r.subgroup.value_or("");
    out << "\n";
  }
}

void write_predictions(const fs::path& path, const std::vector<PredictionRecord>& records) {
  std::ostringstream ss;
  write_predictions(ss, records);
  write_text(path, ss.str());
}

std::vector<DetectionCase> parse_detections(const std::string& json_text, const std::string& source) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(source + ": malformed JSON: " + e.what());
  }
  if (!root.is_array()) fail(source + ": expected a top-level array of cases");

  std::vector<DetectionCase> cases;
  cases.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string where = source + ": case[" + std::to_string(i) + "]";
    const json& c = root[i];
    DetectionCase dc;
    const json& id = field(c, "image_id", where);
    if (!id.is_string()) fail(where + ".image_id: expected string");
    dc.image_id = id.get<std::string>();

    const json& preds = field(c, "predictions", where);
    const json& gts = field(c, "ground_truth", where);
    if (!preds.is_array()) fail(where + ".predictions: expected array");
    if (!gts.is_array()) fail(where + ".ground_truth: expected array");

    for (std::size_t j = 0; j < preds.size(); ++j) {
      const std::string pw = where + ".predictions[" + std::to_string(j) + "]";
      ScoredBox sb;
      sb.box = parse_box(field(preds[j], "box", pw), pw);
      const json& s = field(preds[j], "score", pw);
      if (!s.is_number()) fail(pw + ".score: not a number");
      sb.score = s.get<double>();
      if (!(sb.score >= 0.0 && sb.score <= 1.0)) fail(pw + ".score: out of range [0,1]");
      dc.predictions.push_back(sb);
    }
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const std::string gw = where + ".ground_truth[" + std::to_string(j) + "]";
      GroundTruthLesion g;
      g.box = parse_box(field(gts[j], "box", gw), gw);
      const json& v = field(gts[j], "voxel_count", gw);
      if (!v.is_number_integer()) fail(gw + ".voxel_count: expected integer");
      g.voxel_count = v.get<std::int64_t>();
      if (g.voxel_count < 1) fail(gw + ".voxel_count: must be >= 1");
      dc.ground_truth.push_back(g);
    }
    cases.push_back(std::move(dc));
  }
  return cases;
}

std::vector<DetectionCase> read_detections(const fs::path& path) {
  return parse_detections(read_text(path), path.string());
}

std::string format_detections(const std::vector<DetectionCase>& cases) {
  json root = json::array();
  for (const auto& c : cases) {
    json jc;
    jc["image_id"] = c.image_id;
    jc["predictions"] = json::array();
    for (const auto& p : c.predictions) jc["predictions"].push_back({{"box", box_json(p.box)}, {"score", p.score}});
    jc["ground_truth"] = json::array();
    for (const auto& g : c.ground_truth)
      jc["ground_truth"].push_back({{"box", box_json(g.box)}, {"voxel_count", g.voxel_count}});
    root.push_back(std::move(jc));
  }
  return root.dump(1) + "\n";
}

void write_detections(const fs::path& path, const std::vector<DetectionCase>& cases) {
  write_text(path, format_detections(cases));
}

}  // namespace lesionbench::io
