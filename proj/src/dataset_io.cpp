#include "steer/fit.hpp"

#include "steer/error.hpp"
#include "steer/latent_io.hpp"

#include "detail.hpp"

#include <charconv>
#include <unordered_map>

namespace steer {

using detail::json;

namespace {

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

bool is_blank(std::string_view line)
{
    return line.find_first_not_of(" \t") == std::string_view::npos;
}

LatentVector latent_from_json(const json& value, const std::string& where)
{
    const auto& arr = detail::require_array(value, where);
    Eigen::VectorXd data(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        data(static_cast<Eigen::Index>(i)) = detail::require_number(arr[i], where);
    }
    return LatentVector(std::move(data));
}

/// Resolves {"ref": "path#index"} references, caching the referenced files.
class RefResolver {
public:
    explicit RefResolver(std::filesystem::path base) : base_(std::move(base)) {}

    LatentVector resolve(const std::string& ref, const std::string& where)
    {
        std::string file = ref;
        std::optional<std::size_t> index;
        if (auto hash = ref.rfind('#'); hash != std::string::npos) {
            file = ref.substr(0, hash);
            std::size_t idx = 0;
            const auto digits = std::string_view(ref).substr(hash + 1);
            const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
            if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size()) {
                throw FormatError(where + ": bad ref index in \"" + ref + "\"");
            }
            index = idx;
        }
        std::filesystem::path path(file);
        if (path.is_relative()) {
            path = base_ / path;
        }
        if (!index) {
            return read_latent_file(path);
        }
        const auto& lines = lines_of(path);
        if (*index >= lines.size()) {
            throw FormatError(where + ": ref \"" + ref + "\" points past the end of " + path.string());
        }
        const json item = detail::parse_json(lines[*index], where + " (ref " + ref + ")");
        if (item.contains("latent")) {
            return latent_from_json(item["latent"], where + " (ref " + ref + ")");
        }
        return parse_latent(lines[*index]);
    }

private:
    const std::vector<std::string>& lines_of(const std::filesystem::path& path)
    {
        auto key = path.lexically_normal().string();
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            const std::string text = detail::read_text_file(path);
            std::vector<std::string> kept;
            for (auto line : split_lines(text)) {
                if (!is_blank(line)) {
                    kept.emplace_back(line);
                }
            }
            it = cache_.emplace(key, std::move(kept)).first;
        }
        return it->second;
    }

    std::filesystem::path base_;
    std::unordered_map<std::string, std::vector<std::string>> cache_;
};

} // namespace

std::vector<LabeledSample> parse_dataset(std::string_view jsonl, const FeatureRegistry& reg, const std::filesystem::path& base_dir)
{
    RefResolver refs(base_dir);
    std::vector<LabeledSample> samples;
    std::size_t line_no = 0;
    for (auto line : split_lines(jsonl)) {
        ++line_no;
        if (is_blank(line)) {
            continue;
        }
        const std::string where = "dataset line " + std::to_string(line_no);
        const json item = detail::parse_json(line, where);
        const auto& latent_json = detail::require_field(item, "latent", where);
        std::optional<LatentVector> latent;
        if (latent_json.is_object()) {
            latent = refs.resolve(detail::require_string(detail::require_field(latent_json, "ref", where + ".latent"),
                                                         where + ".latent.ref"),
                                  where);
        } else {
            latent = latent_from_json(latent_json, where + ".latent");
        }

        const auto& labels_json = detail::require_field(item, "labels", where);
        if (!labels_json.is_object()) {
            throw FormatError(where + ".labels: expected an object");
        }
        std::map<std::string, double> labels;
        for (const auto& [id, value] : labels_json.items()) {
            const auto idx = reg.index_of(id);
            if (!idx) {
                throw ValidationError(where + ": unknown feature id \"" + id + "\"");
            }
            double v = detail::require_number(value, where + ".labels." + id);
            if (reg[*idx].kind == FeatureKind::Discrete) {
                try {
                    v = normalize_discrete_label(v, id);
                } catch (const ValidationError& e) {
                    throw ValidationError(where + ": " + e.what());
                }
            } else if (!std::isfinite(v)) {
                throw ValidationError(where + ": label for \"" + id + "\" is not finite");
            }
            labels.emplace(id, v);
        }
        samples.push_back(LabeledSample{std::move(*latent), std::move(labels)});
    }
    return samples;
}

std::vector<LabeledSample> read_dataset_file(const std::filesystem::path& path, const FeatureRegistry& reg)
{
    try {
        return parse_dataset(detail::read_text_file(path), reg, path.parent_path());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string serialize_dataset(const std::vector<LabeledSample>& samples)
{
    std::string out;
    for (const auto& s : samples) {
        const auto& d = s.latent.data();
        json line;
        line["latent"] = std::vector<double>(d.data(), d.data() + d.size());
        line["labels"] = s.labels;
        out += line.dump();
        out += '\n';
    }
    return out;
}

} // namespace steer
