#include "steer/latent_io.hpp"

#include "steer/error.hpp"

#include "detail.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace steer {

using detail::json;

namespace {

std::vector<std::string> split(std::string_view line, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

template <typename Fn>
auto with_path_context(const std::filesystem::path& path, Fn&& fn)
{
    try {
        return fn(detail::read_text_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace

std::string serialize_latent(const LatentVector& latent)
{
    const auto& data = latent.data();
    json doc;
    doc["shape"] = {latent.shape().layers, latent.shape().channels};
    doc["data"] = std::vector<double>(data.data(), data.data() + data.size());
    return doc.dump() + "\n";
}

LatentVector parse_latent(std::string_view json_text)
{
    const json doc = detail::parse_json(json_text, "latent");
    const auto& shape = detail::require_array(detail::require_field(doc, "shape", "latent"), "latent.shape");
    if (shape.size() != 2 || !shape[0].is_number_unsigned() || !shape[1].is_number_unsigned()) {
        throw FormatError("latent.shape: expected [layers, channels] as non-negative integers");
    }
    const auto& data = detail::require_array(detail::require_field(doc, "data", "latent"), "latent.data");
    Eigen::VectorXd values(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        values(static_cast<Eigen::Index>(i)) = detail::require_number(data[i], "latent.data[" + std::to_string(i) + "]");
    }
    return LatentVector(std::move(values), LatentShape{shape[0].get<std::size_t>(), shape[1].get<std::size_t>()});
}

LatentVector read_latent_file(const std::filesystem::path& path)
{
    return with_path_context(path, [](const std::string& text) { return parse_latent(text); });
}

void write_latent_file(const std::filesystem::path& path, const LatentVector& latent)
{
    detail::write_text_file(path, serialize_latent(latent));
}

std::string serialize_directions(const DirectionSet& dirs)
{
    json rows = json::array();
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        const auto r = dirs.row(i);
        rows.push_back(std::vector<double>(r.data(), r.data() + r.size()));
    }
    json doc;
    doc["latent_dim"] = dirs.dim();
    doc["feature_ids"] = dirs.ids();
    doc["directions"] = std::move(rows);
    if (dirs.valid_count() != dirs.size()) {
        doc["valid"] = dirs.validity();
    }
    return doc.dump() + "\n";
}

DirectionSet parse_directions(std::string_view json_text)
{
    const json doc = detail::parse_json(json_text, "directions");
    const auto& dim_field = detail::require_field(doc, "latent_dim", "directions");
    if (!dim_field.is_number_unsigned() || dim_field.get<std::size_t>() == 0) {
        throw FormatError("directions.latent_dim: expected a positive integer");
    }
    const auto dim = dim_field.get<std::size_t>();
    const auto& ids_json = detail::require_array(detail::require_field(doc, "feature_ids", "directions"), "directions.feature_ids");
    const auto& rows_json = detail::require_array(detail::require_field(doc, "directions", "directions"), "directions.directions");
    if (ids_json.size() != rows_json.size()) {
        throw FormatError("directions: " + std::to_string(ids_json.size()) + " feature ids but " +
                          std::to_string(rows_json.size()) + " rows");
    }

    std::vector<std::string> ids;
    RowMatrix rows(static_cast<Eigen::Index>(rows_json.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < ids_json.size(); ++i) {
        ids.push_back(detail::require_string(ids_json[i], "directions.feature_ids[" + std::to_string(i) + "]"));
        const std::string where = "directions.directions[" + std::to_string(i) + "]";
        const auto& row = detail::require_array(rows_json[i], where);
        if (row.size() != dim) {
            throw DimensionError(where + ": expected " + std::to_string(dim) + " values, got " + std::to_string(row.size()));
        }
        for (std::size_t j = 0; j < dim; ++j) {
            rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = detail::require_number(row[j], where);
        }
    }

    std::vector<bool> valid;
    if (doc.contains("valid")) {
        const auto& flags = detail::require_array(doc["valid"], "directions.valid");
        if (flags.size() != ids.size()) {
            throw FormatError("directions.valid: expected one flag per feature");
        }
        for (const auto& f : flags) {
            if (!f.is_boolean()) {
                throw FormatError("directions.valid: expected booleans");
            }
            valid.push_back(f.get<bool>());
        }
    }
    return DirectionSet(std::move(ids), std::move(rows), std::move(valid));
}

DirectionSet read_directions_file(const std::filesystem::path& path)
{
    return with_path_context(path, [](const std::string& text) { return parse_directions(text); });
}

void write_directions_file(const std::filesystem::path& path, const DirectionSet& dirs)
{
    detail::write_text_file(path, serialize_directions(dirs));
}

std::string format_angle_csv(const std::vector<std::string>& ids, const Eigen::MatrixXd& angles)
{
    if (angles.rows() != static_cast<Eigen::Index>(ids.size()) || angles.cols() != angles.rows()) {
        throw DimensionError("angle matrix does not match the feature ids");
    }
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out += (i ? "," : "") + ids[i];
    }
    out += '\n';
    char cell[32];
    for (Eigen::Index i = 0; i < angles.rows(); ++i) {
        for (Eigen::Index j = 0; j < angles.cols(); ++j) {
            const double a = angles(i, j);
            if (std::isfinite(a)) {
                std::snprintf(cell, sizeof cell, "%.1f", a);
            } else {
                std::snprintf(cell, sizeof cell, "nan");
            }
            if (j) {
                out += ',';
            }
            out += cell;
        }
        out += '\n';
    }
    return out;
}

AngleReport parse_angle_csv(std::string_view csv)
{
    std::vector<std::string> lines;
    for (auto& line : split(csv, '\n')) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            lines.push_back(std::move(line));
        }
    }
    if (lines.empty()) {
        throw FormatError("angle report: missing header row");
    }
    AngleReport report;
    report.ids = split(lines[0], ',');
    const auto k = static_cast<Eigen::Index>(report.ids.size());
    if (static_cast<Eigen::Index>(lines.size()) - 1 != k) {
        throw FormatError("angle report: expected " + std::to_string(k) + " data rows, got " +
                          std::to_string(lines.size() - 1));
    }
    report.angles.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto cells = split(lines[static_cast<std::size_t>(i) + 1], ',');
        if (static_cast<Eigen::Index>(cells.size()) != k) {
            throw FormatError("angle report: row " + std::to_string(i + 1) + " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(k));
        }
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto& c = cells[static_cast<std::size_t>(j)];
            if (c == "nan") {
                report.angles(i, j) = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (ec != std::errc() || ptr != c.data() + c.size()) {
                throw FormatError("angle report: row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1) +
                                  ": not a number \"" + c + "\"");
            }
            report.angles(i, j) = v;
        }
    }
    return report;
}

} // namespace steer
