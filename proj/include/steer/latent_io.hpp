#pragma once

#include "steer/latent.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace steer {

// Latent file: {"shape": [layers, channels], "data": [d floats]}, row-major.
std::string serialize_latent(const LatentVector& latent);
LatentVector parse_latent(std::string_view json_text);
LatentVector read_latent_file(const std::filesystem::path& path);
void write_latent_file(const std::filesystem::path& path, const LatentVector& latent);

// Directions file: {"latent_dim": d, "feature_ids": [...], "directions": [[d floats] x K]}.
// An optional "valid": [bool x K] marks rows that could not be fitted.
std::string serialize_directions(const DirectionSet& dirs);
DirectionSet parse_directions(std::string_view json_text);
DirectionSet read_directions_file(const std::filesystem::path& path);
void write_directions_file(const std::filesystem::path& path, const DirectionSet& dirs);

/// Angle report: header row of feature ids, then K rows of degrees with one
/// decimal. Entries for unfitted features are written as "nan".
std::string format_angle_csv(const std::vector<std::string>& ids, const Eigen::MatrixXd& angles);

struct AngleReport {
    std::vector<std::string> ids;
    Eigen::MatrixXd angles;
};

AngleReport parse_angle_csv(std::string_view csv);

} // namespace steer
