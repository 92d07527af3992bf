#include "steer/registry.hpp"

#include "steer/embedded.hpp"
#include "steer/error.hpp"

#include "detail.hpp"

#include <algorithm>
#include <cmath>

namespace steer {

using detail::json;

std::string_view to_string(FeatureKind kind)
{
    return kind == FeatureKind::Discrete ? "discrete" : "continuous";
}

FeatureKind feature_kind_from_string(std::string_view text)
{
    if (text == "discrete") {
        return FeatureKind::Discrete;
    }
    if (text == "continuous") {
        return FeatureKind::Continuous;
    }
    throw FormatError("unknown feature kind \"" + std::string(text) + "\"");
}

double ValueRange::clamp(double v) const
{
    return std::clamp(v, lo, hi);
}

bool is_valid_feature_id(std::string_view id)
{
    if (id.empty() || id.front() < 'a' || id.front() > 'z') {
        return false;
    }
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

std::string feature_id_from_name(std::string_view name)
{
    std::string id;
    id.reserve(name.size());
    for (char c : name) {
        if (c == ' ' || c == '-') {
            id.push_back('_');
        } else if (c >= 'A' && c <= 'Z') {
            id.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            id.push_back(c);
        }
    }
    return id;
}

FeatureRegistry::FeatureRegistry(std::vector<FeatureDef> features) : features_(std::move(features))
{
    for (std::size_t i = 0; i < features_.size(); ++i) {
        const auto& f = features_[i];
        if (!is_valid_feature_id(f.id)) {
            throw ValidationError("invalid feature id \"" + f.id + "\" (lowercase ASCII, digits and underscores)");
        }
        if (!(f.range.lo < f.range.hi)) {
            throw ValidationError("feature \"" + f.id + "\": range lo must be below hi");
        }
        if (!index_.emplace(f.id, i).second) {
            throw ValidationError("duplicate feature id \"" + f.id + "\"");
        }
    }
}

const FeatureRegistry& FeatureRegistry::builtin()
{
    static const FeatureRegistry reg = parse_registry(embedded::registry_json);
    return reg;
}

std::optional<std::size_t> FeatureRegistry::index_of(std::string_view id) const
{
    auto it = index_.find(std::string(id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t FeatureRegistry::require_index(std::string_view id) const
{
    if (auto i = index_of(id)) {
        return *i;
    }
    throw ValidationError("unknown feature id \"" + std::string(id) + "\"");
}

std::vector<std::string> FeatureRegistry::ids() const
{
    std::vector<std::string> out;
    out.reserve(features_.size());
    for (const auto& f : features_) {
        out.push_back(f.id);
    }
    return out;
}

FeatureRegistry parse_registry(std::string_view json_text)
{
    const json doc = detail::parse_json(json_text, "registry");
    const auto& list = detail::require_array(detail::require_field(doc, "features", "registry"), "registry.features");

    std::vector<FeatureDef> features;
    features.reserve(list.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string where = "features[" + std::to_string(i) + "]";
        const auto& item = list[i];
        FeatureDef f;
        f.id = detail::require_string(detail::require_field(item, "id", where), where + ".id");
        f.display_name = item.contains("name") ? detail::require_string(item["name"], where + ".name") : f.id;
        f.group = item.contains("group") ? detail::require_string(item["group"], where + ".group") : std::string();
        try {
            f.kind = feature_kind_from_string(detail::require_string(detail::require_field(item, "kind", where), where + ".kind"));
        } catch (const FormatError& e) {
            throw FormatError(where + ".kind: " + e.what());
        }
        const auto& range = detail::require_array(detail::require_field(item, "range", where), where + ".range");
        if (range.size() != 2) {
            throw FormatError(where + ".range: expected [lo, hi]");
        }
        f.range.lo = detail::require_number(range[0], where + ".range[0]");
        f.range.hi = detail::require_number(range[1], where + ".range[1]");
        features.push_back(std::move(f));
    }
    return FeatureRegistry(std::move(features));
}

std::string serialize_registry(const FeatureRegistry& reg)
{
    json list = json::array();
    for (const auto& f : reg.features()) {
        list.push_back({{"id", f.id},
                        {"name", f.display_name},
                        {"group", f.group},
                        {"kind", std::string(to_string(f.kind))},
                        {"range", {f.range.lo, f.range.hi}}});
    }
    return json{{"features", std::move(list)}}.dump(2) + "\n";
}

FeatureRegistry load_registry(const std::optional<std::filesystem::path>& path)
{
    if (!path) {
        return FeatureRegistry::builtin();
    }
    try {
        return parse_registry(detail::read_text_file(*path));
    } catch (const FormatError& e) {
        throw FormatError(path->string() + ": " + e.what());
    }
}

bool FeatureVector::any() const
{
    return std::find(mask.begin(), mask.end(), true) != mask.end();
}

std::size_t FeatureVector::count() const
{
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

FeatureVector clamp(const FeatureVector& v, const FeatureRegistry& reg)
{
    if (v.values.size() != reg.size() || v.mask.size() != reg.size()) {
        throw DimensionError("feature vector has " + std::to_string(v.values.size()) + " values, registry has " +
                             std::to_string(reg.size()) + " features");
    }
    FeatureVector out = v;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out.mask[i]) {
            out.values[i] = reg[i].range.clamp(out.values[i]);
        }
    }
    return out;
}

} // namespace steer
