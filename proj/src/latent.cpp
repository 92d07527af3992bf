#include "steer/latent.hpp"

#include "steer/error.hpp"
#include "steer/latent_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace steer {

namespace {

void check_dim(std::size_t latent_dim, std::size_t dir_dim)
{
    if (latent_dim != dir_dim) {
        throw DimensionError("latent has dimension " + std::to_string(latent_dim) + ", directions have " +
                             std::to_string(dir_dim));
    }
}

void check_target(const FeatureVector& target, const DirectionSet& dirs)
{
    if (target.values.size() != dirs.size() || target.mask.size() != dirs.size()) {
        throw DimensionError("target has " + std::to_string(target.values.size()) + " features, direction set has " +
                             std::to_string(dirs.size()));
    }
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        if (target.mask[i] && !dirs.valid(i)) {
            throw ValidationError("feature \"" + dirs.ids()[i] + "\" is targeted but has no fitted direction");
        }
    }
}

} // namespace

LatentShape default_shape(std::size_t dim)
{
    if (dim == 18 * 512) {
        return {18, 512};
    }
    return {1, dim};
}

LatentVector::LatentVector(Eigen::VectorXd data, LatentShape shape) : data_(std::move(data)), shape_(shape)
{
    if (data_.size() == 0) {
        throw DimensionError("latent vector must be non-empty");
    }
    if (shape_.size() != dim()) {
        throw DimensionError("latent shape " + std::to_string(shape_.layers) + "x" + std::to_string(shape_.channels) +
                             " does not match " + std::to_string(dim()) + " entries");
    }
    if (!data_.allFinite()) {
        throw ValidationError("latent vector has non-finite entries");
    }
}

LatentVector::LatentVector(Eigen::VectorXd data) : LatentVector(data, default_shape(static_cast<std::size_t>(data.size())))
{
}

DirectionSet::DirectionSet(std::vector<std::string> ids, RowMatrix rows, std::vector<bool> valid)
    : ids_(std::move(ids)), rows_(std::move(rows)), valid_(std::move(valid))
{
    if (valid_.empty()) {
        valid_.assign(ids_.size(), true);
    }
    if (static_cast<std::size_t>(rows_.rows()) != ids_.size() || valid_.size() != ids_.size()) {
        throw DimensionError("direction set has " + std::to_string(ids_.size()) + " ids but " +
                             std::to_string(rows_.rows()) + " rows");
    }
    if (rows_.cols() == 0) {
        throw DimensionError("directions must have positive dimension");
    }
    if (!rows_.allFinite()) {
        throw ValidationError("direction set has non-finite entries");
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const double norm = row(i).norm();
        if (valid_[i] && std::abs(norm - 1.0) > unit_tolerance) {
            throw ValidationError("direction \"" + ids_[i] + "\" has norm " + std::to_string(norm) + ", expected 1");
        }
        if (!valid_[i] && norm != 0.0) {
            throw ValidationError("invalid direction \"" + ids_[i] + "\" must be a zero row");
        }
    }
}

std::size_t DirectionSet::valid_count() const
{
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), true));
}

void DirectionSet::check_matches(const FeatureRegistry& reg) const
{
    if (ids_ != reg.ids()) {
        throw ValidationError("direction feature ids do not match the registry order");
    }
}

RowMatrix normalized_rows(RowMatrix rows)
{
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        rows.row(i).normalize();
    }
    return rows;
}

double project_feature(const LatentVector& latent, const Eigen::Ref<const Eigen::RowVectorXd>& dir)
{
    check_dim(latent.dim(), static_cast<std::size_t>(dir.size()));
    if (std::abs(dir.norm() - 1.0) > 1e-6) {
        throw ValidationError("projection direction is not unit norm");
    }
    return dir.dot(latent.data().transpose());
}

FeatureVector project_all(const LatentVector& latent, const DirectionSet& dirs)
{
    check_dim(latent.dim(), dirs.dim());
    const Eigen::VectorXd proj = dirs.matrix() * latent.data();
    FeatureVector out(dirs.size());
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        out.set(i, proj(static_cast<Eigen::Index>(i)));
    }
    return out;
}

LatentVector sample_seed(const SeedSpec& spec, std::size_t dim)
{
    if (spec.mode == SeedSpec::Mode::FromFile) {
        if (!spec.path) {
            throw ValidationError("seed mode 'file' requires a path");
        }
        LatentVector latent = read_latent_file(*spec.path);
        if (latent.dim() != dim) {
            throw DimensionError("seed file " + spec.path->string() + " has dimension " + std::to_string(latent.dim()) +
                                 ", expected " + std::to_string(dim));
        }
        return latent;
    }
    if (dim == 0) {
        throw DimensionError("gaussian seed needs a positive dimension");
    }
    std::mt19937_64 gen(spec.rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd data(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        data(i) = normal(gen);
    }
    return LatentVector(std::move(data));
}

LatentVector navigate_vectorized(const LatentVector& start, const FeatureVector& target, const DirectionSet& dirs)
{
    check_dim(start.dim(), dirs.dim());
    check_target(target, dirs);
    const FeatureVector current = project_all(start, dirs);
    Eigen::RowVectorXd delta = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(dirs.size()));
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        if (target.mask[i]) {
            delta(static_cast<Eigen::Index>(i)) = target.values[i] - current.values[i];
        }
    }
    if (!target.any()) {
        return start;
    }
    Eigen::VectorXd moved = start.data() + (delta * dirs.matrix()).transpose();
    return LatentVector(std::move(moved), start.shape());
}

SequentialResult navigate_sequential(const LatentVector& start,
                                     const FeatureVector& target,
                                     const DirectionSet& dirs,
                                     double tol,
                                     int max_passes)
{
    if (!(tol > 0.0)) {
        throw ValidationError("tolerance must be positive");
    }
    if (max_passes < 1) {
        throw ValidationError("max_passes must be at least 1");
    }
    check_dim(start.dim(), dirs.dim());
    check_target(target, dirs);
    if (!target.any()) {
        return {start, 1, 0.0};
    }

    Eigen::VectorXd latent = start.data();
    int passes = 0;
    double residual = 0.0;
    while (passes < max_passes) {
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            if (!target.mask[i]) {
                continue;
            }
            const auto dir = dirs.row(i);
            const double value = dir.dot(latent.transpose());
            latent += (target.values[i] - value) * dir.transpose();
        }
        ++passes;

        residual = 0.0;
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            if (target.mask[i]) {
                residual = std::max(residual, std::abs(dirs.row(i).dot(latent.transpose()) - target.values[i]));
            }
        }
        if (residual <= tol) {
            break;
        }
    }
    return {LatentVector(std::move(latent), start.shape()), passes, residual};
}

double angle_between(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b)
{
    const double cosine = std::clamp(a.dot(b), -1.0, 1.0);
    return std::acos(cosine) * 180.0 / std::numbers::pi;
}

Eigen::MatrixXd angle_matrix(const DirectionSet& dirs)
{
    const auto k = static_cast<Eigen::Index>(dirs.size());
    Eigen::MatrixXd angles = Eigen::MatrixXd::Zero(k, k);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (!dirs.valid(ui)) {
            continue;
        }
        for (Eigen::Index j = i + 1; j < k; ++j) {
            if (!dirs.valid(static_cast<std::size_t>(j))) {
                continue;
            }
            const double a = angle_between(dirs.row(ui), dirs.row(static_cast<std::size_t>(j)));
            angles(i, j) = a;
            angles(j, i) = a;
        }
    }
    for (Eigen::Index i = 0; i < k; ++i) {
        if (!dirs.valid(static_cast<std::size_t>(i))) {
            angles.row(i).setConstant(nan);
            angles.col(i).setConstant(nan);
        }
    }
    return angles;
}

double min_off_diagonal(const Eigen::MatrixXd& angles)
{
    double best = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index i = 0; i < angles.rows(); ++i) {
        for (Eigen::Index j = 0; j < angles.cols(); ++j) {
            const double a = angles(i, j);
            if (i != j && std::isfinite(a) && !(a >= best)) {
                best = a;
            }
        }
    }
    return best;
}

} // namespace steer
