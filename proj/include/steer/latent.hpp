#pragma once

#include "steer/registry.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace steer {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Layer/channel layout of a flat latent. Metadata only; all math is on the flat vector.
struct LatentShape {
    std::size_t layers = 1;
    std::size_t channels = 0;

    std::size_t size() const { return layers * channels; }
    bool operator==(const LatentShape&) const = default;
};

/// 18x512 for the 9216-wide w+ space, a single layer otherwise.
LatentShape default_shape(std::size_t dim);

/// A point in the (flattened) extended latent space. Entries are always finite.
class LatentVector {
public:
    LatentVector(Eigen::VectorXd data, LatentShape shape);
    explicit LatentVector(Eigen::VectorXd data);

    const Eigen::VectorXd& data() const { return data_; }
    const LatentShape& shape() const { return shape_; }
    std::size_t dim() const { return static_cast<std::size_t>(data_.size()); }

    bool operator==(const LatentVector& other) const
    {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    Eigen::VectorXd data_;
    LatentShape shape_;
};

/// K unit-norm feature directions (one row each) over a d-dimensional latent
/// space, keyed by feature id. Rows marked invalid are all-zero placeholders for
/// features that could not be fitted.
class DirectionSet {
public:
    static constexpr double unit_tolerance = 1e-9;

    DirectionSet(std::vector<std::string> ids, RowMatrix rows, std::vector<bool> valid = {});

    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(rows_.cols()); }
    const std::vector<std::string>& ids() const { return ids_; }
    const RowMatrix& matrix() const { return rows_; }
    auto row(std::size_t i) const { return rows_.row(static_cast<Eigen::Index>(i)); }
    bool valid(std::size_t i) const { return valid_[i]; }
    const std::vector<bool>& validity() const { return valid_; }
    std::size_t valid_count() const;

    /// Throws ValidationError unless the ids equal the registry's ids in order.
    void check_matches(const FeatureRegistry& reg) const;

private:
    std::vector<std::string> ids_;
    RowMatrix rows_;
    std::vector<bool> valid_;
};

/// Scales each row of `rows` to unit length.
RowMatrix normalized_rows(RowMatrix rows);

struct SeedSpec {
    enum class Mode { OracleGaussian, FromFile };

    Mode mode = Mode::OracleGaussian;
    std::uint64_t rng_seed = 0;
    std::optional<std::filesystem::path> path;
};

/// Scalar value of a feature: the component of `latent` along the unit direction `dir`.
double project_feature(const LatentVector& latent, const Eigen::Ref<const Eigen::RowVectorXd>& dir);

/// Projects onto every direction. The returned mask is all-true.
FeatureVector project_all(const LatentVector& latent, const DirectionSet& dirs);

LatentVector sample_seed(const SeedSpec& spec, std::size_t dim);

/// One-shot navigation: latent + (target - current) * D over the masked features.
LatentVector navigate_vectorized(const LatentVector& start, const FeatureVector& target, const DirectionSet& dirs);

struct NavigationDefaults {
    static constexpr double tol = 1e-3;
    static constexpr int max_passes = 50;
};

struct SequentialResult {
    LatentVector latent;
    int passes = 0;
    double residual = 0.0;
};

/// Moves along one masked direction at a time, in registry order, re-projecting
/// before every step. Passes repeat until the worst masked residual is within
/// `tol` or `max_passes` is reached; non-convergence is reported, not thrown.
SequentialResult navigate_sequential(const LatentVector& start,
                                     const FeatureVector& target,
                                     const DirectionSet& dirs,
                                     double tol = NavigationDefaults::tol,
                                     int max_passes = NavigationDefaults::max_passes);

/// Pairwise angles in degrees. Entries touching an invalid row are NaN.
Eigen::MatrixXd angle_matrix(const DirectionSet& dirs);

/// Angle in degrees between two unit vectors, arccos input clamped to [-1, 1].
double angle_between(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b);

/// Smallest off-diagonal finite entry, or NaN when there is none.
double min_off_diagonal(const Eigen::MatrixXd& angles);

} // namespace steer
