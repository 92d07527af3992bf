#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace steer {

enum class FeatureKind { Discrete, Continuous };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view text);

struct ValueRange {
    double lo = -3.0;
    double hi = 3.0;

    double clamp(double v) const;
    bool contains(double v) const { return v >= lo && v <= hi; }
    bool operator==(const ValueRange&) const = default;
};

/// One facial attribute. `id` is the key used in datasets, directions and corpora.
struct FeatureDef {
    std::string id;
    std::string display_name;
    std::string group;
    FeatureKind kind = FeatureKind::Discrete;
    ValueRange range;

    bool operator==(const FeatureDef&) const = default;
};

/// Lowercase ASCII letters, digits and underscores, starting with a letter.
bool is_valid_feature_id(std::string_view id);

/// Derives a feature id from a display name: "Curly-straight hair" -> "curly_straight_hair".
std::string feature_id_from_name(std::string_view name);

/// Ordered, validated set of features. The order is the index order of every
/// FeatureVector and DirectionSet built against it.
class FeatureRegistry {
public:
    FeatureRegistry() = default;
    explicit FeatureRegistry(std::vector<FeatureDef> features);

    /// The built-in table of 34 facial features.
    static const FeatureRegistry& builtin();

    std::size_t size() const { return features_.size(); }
    bool empty() const { return features_.empty(); }
    const FeatureDef& operator[](std::size_t i) const { return features_[i]; }
    std::span<const FeatureDef> features() const { return features_; }

    std::optional<std::size_t> index_of(std::string_view id) const;
    /// Like index_of, but throws ValidationError for unknown ids.
    std::size_t require_index(std::string_view id) const;
    std::vector<std::string> ids() const;

    bool operator==(const FeatureRegistry& other) const { return features_ == other.features_; }

private:
    std::vector<FeatureDef> features_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Parses the registry JSON document. Throws FormatError or ValidationError.
FeatureRegistry parse_registry(std::string_view json_text);
std::string serialize_registry(const FeatureRegistry& reg);

/// Loads a registry file, or returns the built-in registry when no path is given.
FeatureRegistry load_registry(const std::optional<std::filesystem::path>& path = std::nullopt);

/// K feature values plus the mask of features that are actually targeted.
/// Values under a false mask entry carry no meaning.
struct FeatureVector {
    std::vector<double> values;
    std::vector<bool> mask;

    FeatureVector() = default;
    explicit FeatureVector(std::size_t k) : values(k, 0.0), mask(k, false) {}

    std::size_t size() const { return values.size(); }
    bool any() const;
    std::size_t count() const;
    void set(std::size_t i, double v)
    {
        values[i] = v;
        mask[i] = true;
    }

    bool operator==(const FeatureVector&) const = default;
};

/// Clamps every masked value into its feature's range. Throws DimensionError
/// when `v` is not indexed by `reg`.
FeatureVector clamp(const FeatureVector& v, const FeatureRegistry& reg);

} // namespace steer
