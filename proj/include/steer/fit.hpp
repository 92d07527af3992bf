#pragma once

#include "steer/latent.hpp"
#include "steer/registry.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace steer {

/// A latent with labels for any subset of the registry's features. Discrete
/// labels are -1/+1, continuous labels are real scores.
struct LabeledSample {
    LatentVector latent;
    std::map<std::string, double> labels;
};

struct FitConfig {
    double learning_rate = 0.1;
    int epochs = 500;
    /// Ridge penalty on ||w||^2 for logistic fits.
    double l2_discrete = 1e-4;
    /// Ridge penalty on ||w||^2 for least-squares fits.
    double l2_continuous = 1e-6;
    std::uint64_t rng_seed = 0;
    std::size_t min_samples_per_feature = 2;
    /// Least-squares fits above this dimension use gradient descent instead of
    /// the (d x d) normal equations.
    std::size_t closed_form_max_dim = 4096;
    /// Worker threads for fit_all; 0 picks the hardware concurrency.
    unsigned threads = 0;

    /// Throws ValidationError on out-of-range settings.
    void validate() const;
};

struct DiscreteFit {
    Eigen::RowVectorXd direction;
    double bias = 0.0;
    double loss = 0.0;
    double accuracy = 0.0;
    int iterations = 0;
};

struct ContinuousFit {
    Eigen::RowVectorXd direction;
    double bias = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
    bool used_gradient_descent = false;
};

/// Logistic regression by full-batch gradient descent on latents (one per row)
/// with labels in {-1, +1}. The direction is the normalized hyperplane normal.
/// Latents are centered and divided by their overall RMS before descent, so
/// the penalty and learning rate act in those units; the reported bias is in
/// the original coordinates.
DiscreteFit fit_discrete(const Eigen::MatrixXd& latents, const Eigen::VectorXd& labels, const FitConfig& cfg);

/// Ridge least squares with an unpenalized bias. The direction is the
/// normalized weight vector.
ContinuousFit fit_continuous(const Eigen::MatrixXd& latents, const Eigen::VectorXd& labels, const FitConfig& cfg);

struct FeatureFitReport {
    std::string id;
    FeatureKind kind = FeatureKind::Discrete;
    bool valid = false;
    std::size_t n = 0;
    double bias = 0.0;
    // discrete
    double loss = 0.0;
    double accuracy = 0.0;
    int iterations = 0;
    // continuous
    double rmse = 0.0;
    double r2 = 0.0;
    std::string solver;
    /// Why the feature was skipped, empty when valid.
    std::string note;
};

struct FitResult {
    DirectionSet directions;
    std::vector<FeatureFitReport> reports;

    std::size_t valid_count() const { return directions.valid_count(); }
    bool complete() const { return valid_count() == directions.size(); }
};

/// Fits one direction per registry feature from the samples that label it.
/// Features that cannot be fitted get a zero row flagged invalid; throws
/// EmptyFitError when none can be fitted.
FitResult fit_all(const std::vector<LabeledSample>& dataset, const FeatureRegistry& reg, const FitConfig& cfg);

std::string fit_report_json(const FitResult& result);

/// Maps a discrete label from {0, 1} or {-1, +1} onto {-1, +1}.
double normalize_discrete_label(double value, std::string_view feature_id);

// Dataset file: JSON Lines, each {"latent": [d floats] | {"ref": "path#index"}, "labels": {id: value}}.
// A ref names a latent file; with "#index" the file is read as JSON Lines and
// the index-th (0-based) line is used, either a latent object or a dataset line.
// Relative refs resolve against `base_dir`.
std::vector<LabeledSample> parse_dataset(std::string_view jsonl,
                                         const FeatureRegistry& reg,
                                         const std::filesystem::path& base_dir = {});
std::vector<LabeledSample> read_dataset_file(const std::filesystem::path& path, const FeatureRegistry& reg);
std::string serialize_dataset(const std::vector<LabeledSample>& samples);

} // namespace steer
