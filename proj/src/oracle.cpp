#include "steer/oracle.hpp"

#include "steer/error.hpp"

#include "detail.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

namespace steer {

using detail::json;

namespace {

constexpr double deg_to_rad = std::numbers::pi / 180.0;

std::mt19937_64 derived_generator(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

} // namespace

FeatureRegistry OracleWorld::registry() const
{
    std::vector<FeatureDef> defs;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        FeatureDef f;
        f.id = planted.ids()[i];
        f.display_name = f.id;
        f.group = "oracle";
        f.kind = kinds[i];
        defs.push_back(std::move(f));
    }
    return FeatureRegistry(std::move(defs));
}

std::vector<FeatureKind> registry_kinds(std::size_t k)
{
    const auto& reg = FeatureRegistry::builtin();
    std::vector<FeatureKind> kinds;
    for (std::size_t i = 0; i < k; ++i) {
        kinds.push_back(reg[i % reg.size()].kind);
    }
    return kinds;
}

OracleWorld make_world(const WorldSpec& spec)
{
    const std::size_t k = spec.kinds.size();
    const std::size_t d = spec.dim;
    if (k == 0) {
        throw InfeasibleError("oracle world needs at least one feature");
    }
    if (k > d) {
        throw InfeasibleError("cannot plant " + std::to_string(k) + " independent directions in dimension " +
                              std::to_string(d));
    }
    if (!(spec.entanglement_deg >= 0.0 && spec.entanglement_deg <= 90.0)) {
        throw InfeasibleError("entanglement angle must lie in [0, 90] degrees");
    }
    if (!(spec.noise_sigma >= 0.0)) {
        throw ValidationError("noise sigma must be non-negative");
    }
    std::vector<std::string> ids = spec.ids;
    if (ids.empty()) {
        for (std::size_t i = 0; i < k; ++i) {
            ids.push_back("feature_" + std::to_string(i));
        }
    }
    if (ids.size() != k) {
        throw DimensionError("oracle world has " + std::to_string(k) + " kinds but " + std::to_string(ids.size()) + " ids");
    }

    auto gen = derived_generator(spec.rng_seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd gaussian(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < gaussian.cols(); ++j) {
        for (Eigen::Index i = 0; i < gaussian.rows(); ++i) {
            gaussian(i, j) = normal(gen);
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
    const Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(gaussian.rows(), gaussian.cols());
    RowMatrix rows = basis.transpose();

    if (spec.entanglement_deg < 90.0) {
        const double c = std::cos(spec.entanglement_deg * deg_to_rad);
        const double s = std::sin(spec.entanglement_deg * deg_to_rad);
        for (Eigen::Index a = 0; a + 1 < rows.rows(); a += 2) {
            rows.row(a + 1) = c * rows.row(a) + s * rows.row(a + 1);
        }
    }
    rows = normalized_rows(std::move(rows));

    return OracleWorld{d, DirectionSet(std::move(ids), std::move(rows)), spec.kinds, spec.noise_sigma,
                       spec.entanglement_deg, spec.rng_seed};
}

std::map<std::string, double> label(const OracleWorld& world, const LatentVector& latent, std::mt19937_64& gen)
{
    if (latent.dim() != world.dim) {
        throw DimensionError("latent dimension " + std::to_string(latent.dim()) + " does not match world dimension " +
                             std::to_string(world.dim));
    }
    std::normal_distribution<double> noise(0.0, world.noise_sigma > 0.0 ? world.noise_sigma : 1.0);
    std::map<std::string, double> labels;
    for (std::size_t i = 0; i < world.size(); ++i) {
        double y = project_feature(latent, world.planted.row(i));
        if (world.noise_sigma > 0.0) {
            y += noise(gen);
        }
        if (world.kinds[i] == FeatureKind::Discrete) {
            y = y >= 0.0 ? 1.0 : -1.0;
        }
        labels.emplace(world.planted.ids()[i], y);
    }
    return labels;
}

std::vector<LabeledSample> generate_dataset(const OracleWorld& world, std::size_t n)
{
    auto gen = derived_generator(world.rng_seed, 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<LabeledSample> samples;
    samples.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        Eigen::VectorXd data(static_cast<Eigen::Index>(world.dim));
        for (Eigen::Index i = 0; i < data.size(); ++i) {
            data(i) = normal(gen);
        }
        LatentVector latent(std::move(data));
        auto labels = label(world, latent, gen);
        samples.push_back(LabeledSample{std::move(latent), std::move(labels)});
    }
    return samples;
}

std::vector<double> angular_error(const DirectionSet& fitted, const OracleWorld& world)
{
    if (fitted.size() != world.size() || fitted.dim() != world.dim) {
        throw DimensionError("fitted directions (" + std::to_string(fitted.size()) + "x" + std::to_string(fitted.dim()) +
                             ") do not match the world (" + std::to_string(world.size()) + "x" +
                             std::to_string(world.dim) + ")");
    }
    std::vector<double> errors(fitted.size());
    for (std::size_t i = 0; i < fitted.size(); ++i) {
        if (!fitted.valid(i)) {
            errors[i] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double a = angle_between(fitted.row(i), world.planted.row(i));
        errors[i] = std::min(a, 180.0 - a);
    }
    return errors;
}

OracleEvalReport run_oracle_eval(const OracleEvalConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    const OracleWorld world = make_world(cfg.world);
    const FeatureRegistry reg = world.registry();
    const auto dataset = generate_dataset(world, cfg.samples);
    const FitResult fit = fit_all(dataset, reg, cfg.fit);

    OracleEvalReport report;
    report.ids = reg.ids();
    report.kinds = world.kinds;
    report.errors_deg = angular_error(fit.directions, world);
    report.threshold_deg = cfg.threshold_deg;
    report.navigation_tolerance = cfg.navigation_tolerance;
    report.planted_min_angle_deg = min_off_diagonal(angle_matrix(world.planted));

    double sum = 0.0;
    std::size_t counted = 0;
    for (double e : report.errors_deg) {
        if (std::isnan(e)) {
            ++report.invalid;
            continue;
        }
        report.max_error_deg = std::max(report.max_error_deg, e);
        sum += e;
        ++counted;
    }
    report.mean_error_deg = counted ? sum / static_cast<double>(counted) : 0.0;

    // Navigate a fresh seed with the fitted directions, then read the result
    // back through the planted ones.
    auto gen = derived_generator(cfg.world.rng_seed, 2);
    std::uniform_real_distribution<double> target_value(-2.0, 2.0);
    FeatureVector target(world.size());
    for (std::size_t i = 0; i < world.size(); ++i) {
        if (fit.directions.valid(i)) {
            target.set(i, target_value(gen));
        }
    }
    const LatentVector seed = sample_seed({SeedSpec::Mode::OracleGaussian, gen(), std::nullopt}, world.dim);
    const SequentialResult nav = navigate_sequential(seed, target, fit.directions, 1e-9, 1000);
    report.navigation_passes = nav.passes;
    report.navigation_residual = nav.residual;
    for (std::size_t i = 0; i < world.size(); ++i) {
        if (!target.mask[i]) {
            continue;
        }
        const double deviation = std::abs(project_feature(nav.latent, world.planted.row(i)) - target.values[i]);
        double& slot = world.kinds[i] == FeatureKind::Continuous ? report.navigation_max_deviation
                                                                 : report.navigation_discrete_max_deviation;
        slot = std::max(slot, deviation);
    }

    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::string OracleEvalReport::to_json() const
{
    auto number = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json features = json::array();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        features.push_back({{"id", ids[i]}, {"kind", std::string(to_string(kinds[i]))}, {"angular_error_deg", number(errors_deg[i])}});
    }
    json doc{{"features", std::move(features)},
             {"summary",
              {{"max_error_deg", max_error_deg},
               {"mean_error_deg", mean_error_deg},
               {"invalid", invalid},
               {"threshold_deg", threshold_deg},
               {"passed", passed()},
               {"planted_min_angle_deg", number(planted_min_angle_deg)}}},
             {"navigation",
              {{"max_deviation", navigation_max_deviation},
               {"discrete_max_deviation", navigation_discrete_max_deviation},
               {"tolerance", navigation_tolerance},
               {"passed", navigation_passed()},
               {"passes", navigation_passes},
               {"residual", navigation_residual}}}};
    return doc.dump(2) + "\n";
}

} // namespace steer
