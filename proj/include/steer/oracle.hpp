#pragma once

#include "steer/fit.hpp"
#include "steer/latent.hpp"
#include "steer/registry.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace steer {

struct WorldSpec {
    std::size_t dim = 64;
    /// One kind per planted feature; K = kinds.size().
    std::vector<FeatureKind> kinds;
    /// Feature ids, defaulting to "feature_0", "feature_1", ...
    std::vector<std::string> ids;
    /// Minimum pairwise angle between planted directions, in [0, 90].
    double entanglement_deg = 90.0;
    double noise_sigma = 0.0;
    std::uint64_t rng_seed = 0;
};

/// Ground-truth latent world with planted feature directions and a noisy labeler.
struct OracleWorld {
    std::size_t dim = 0;
    DirectionSet planted;
    std::vector<FeatureKind> kinds;
    double noise_sigma = 0.0;
    double entanglement_deg = 90.0;
    std::uint64_t rng_seed = 0;

    std::size_t size() const { return kinds.size(); }
    /// Registry over the planted ids and kinds, default ranges.
    FeatureRegistry registry() const;
};

/// Plants K directions: Gaussian draws, orthonormalized, then disjoint pairs
/// (0,1), (2,3), ... rotated toward each other so each pair sits exactly at
/// `entanglement_deg`; all other pairs stay orthogonal. Throws InfeasibleError
/// when K > d or the angle is outside [0, 90].
OracleWorld make_world(const WorldSpec& spec);

/// Kinds of the first K built-in registry features; cycles past the end.
std::vector<FeatureKind> registry_kinds(std::size_t k);

/// Labels every feature of `latent`: continuous -> projection + noise,
/// discrete -> sign(projection + noise) as +/-1 (zero maps to +1).
std::map<std::string, double> label(const OracleWorld& world, const LatentVector& latent, std::mt19937_64& gen);

/// n standard-normal latents, each fully labeled. Deterministic in the world seed.
std::vector<LabeledSample> generate_dataset(const OracleWorld& world, std::size_t n);

/// Sign-agnostic angle in degrees between each fitted row and its planted row.
/// Rows that are invalid in `fitted` report NaN.
std::vector<double> angular_error(const DirectionSet& fitted, const OracleWorld& world);

struct OracleEvalConfig {
    WorldSpec world;
    std::size_t samples = 3000;
    FitConfig fit;
    double threshold_deg = 10.0;
    /// Max allowed |planted projection - target| in the navigation check.
    double navigation_tolerance = 0.15;
};

struct OracleEvalReport {
    std::vector<std::string> ids;
    std::vector<FeatureKind> kinds;
    std::vector<double> errors_deg;
    double max_error_deg = 0.0;
    double mean_error_deg = 0.0;
    std::size_t invalid = 0;
    double planted_min_angle_deg = 0.0;
    /// Over continuous features: |planted projection - target| after navigation.
    double navigation_max_deviation = 0.0;
    /// Same measure over discrete features; informational only, since their
    /// labels are signs.
    double navigation_discrete_max_deviation = 0.0;
    int navigation_passes = 0;
    double navigation_residual = 0.0;
    double threshold_deg = 0.0;
    double navigation_tolerance = 0.0;
    /// Wall time; printed, but kept out of the JSON so reports stay reproducible.
    double seconds = 0.0;

    /// Every feature fitted and within the angular threshold.
    bool passed() const { return invalid == 0 && max_error_deg <= threshold_deg; }
    bool navigation_passed() const { return navigation_max_deviation <= navigation_tolerance; }
    std::string to_json() const;
};

/// make_world -> generate_dataset -> fit_all -> angular_error, then navigates a
/// fresh seed to random targets with the fitted directions and measures the
/// targets against the planted directions.
OracleEvalReport run_oracle_eval(const OracleEvalConfig& cfg);

} // namespace steer
