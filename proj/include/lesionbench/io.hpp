#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lesionbench/core.hpp"

namespace lesionbench::io {

namespace fs = std::filesystem;

// Volume format: `<name>.volhdr.json` header
//   {"dims":[nx,ny,nz],"spacing":[sx,sy,sz],"unit":"HU"|"normalized","payload":"<name>.volraw"}
// plus a raw payload of nx*ny*nz little-endian float32 values, x-fastest.
// The payload path is resolved relative to the header's directory.

Volume read_volume(const fs::path& header_path);
Mask read_mask(const fs::path& header_path);

/// Writes `<header_path>` and its payload next to it. The payload name is the
/// header name with `.volhdr.json` replaced by `.volraw`.
void write_volume(const fs::path& header_path, const Volume& volume);
void write_mask(const fs::path& header_path, const Mask& mask);

// Prediction CSV: header `patient_id,site,phase,label,prob_1,...,prob_K[,subgroup]`.

std::vector<PredictionRecord> parse_predictions(std::istream& in, const std::string& source = "<stream>");
std::vector<PredictionRecord> read_predictions(const fs::path& path);
void write_predictions(std::ostream& out, const std::vector<PredictionRecord>& records);
void write_predictions(const fs::path& path, const std::vector<PredictionRecord>& records);

// Detection JSON:
//   [{"image_id":..., "predictions":[{"box":[x0,y0,z0,x1,y1,z1],"score":s}],
//     "ground_truth":[{"box":[...],"voxel_count":v}]}]

std::vector<DetectionCase> parse_detections(const std::string& json_text, const std::string& source = "<string>");
std::vector<DetectionCase> read_detections(const fs::path& path);
std::string format_detections(const std::vector<DetectionCase>& cases);
void write_detections(const fs::path& path, const std::vector<DetectionCase>& cases);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace lesionbench::io
