#include "steer/fit.hpp"

#include "steer/error.hpp"

#include "detail.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace steer {

using detail::json;

namespace {

double softplus(double x)
{
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void check_inputs(const Eigen::MatrixXd& latents, const Eigen::VectorXd& labels, const FitConfig& cfg)
{
    cfg.validate();
    if (latents.rows() != labels.size()) {
        throw DimensionError(std::to_string(latents.rows()) + " latents but " + std::to_string(labels.size()) + " labels");
    }
    if (latents.cols() == 0) {
        throw DimensionError("latents must have positive dimension");
    }
    if (static_cast<std::size_t>(latents.rows()) < cfg.min_samples_per_feature) {
        throw ValidationError("need at least " + std::to_string(cfg.min_samples_per_feature) + " samples, got " +
                              std::to_string(latents.rows()));
    }
    if (!latents.allFinite() || !labels.allFinite()) {
        throw ValidationError("non-finite latent or label values");
    }
}

Eigen::RowVectorXd unit_direction(const Eigen::VectorXd& w)
{
    const double norm = w.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw DegenerateLabelsError("fitted weight vector is zero; labels carry no linear signal");
    }
    return (w / norm).transpose();
}

} // namespace

void FitConfig::validate() const
{
    if (!(learning_rate > 0.0)) {
        throw ValidationError("learning_rate must be positive");
    }
    if (epochs < 1) {
        throw ValidationError("epochs must be at least 1");
    }
    if (!(l2_discrete >= 0.0) || !(l2_continuous >= 0.0)) {
        throw ValidationError("l2 penalties must be non-negative");
    }
    if (min_samples_per_feature < 2) {
        throw ValidationError("min_samples_per_feature must be at least 2");
    }
}

DiscreteFit fit_discrete(const Eigen::MatrixXd& latents, const Eigen::VectorXd& labels, const FitConfig& cfg)
{
    check_inputs(latents, labels, cfg);
    bool has_pos = false;
    bool has_neg = false;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels(i) == 1.0) {
            has_pos = true;
        } else if (labels(i) == -1.0) {
            has_neg = true;
        } else {
            throw ValidationError("discrete labels must be -1 or +1");
        }
    }
    if (!has_pos || !has_neg) {
        throw DegenerateLabelsError("discrete labels contain a single class");
    }

    // Centering and one global scale leave the hyperplane normal unchanged.
    const Eigen::RowVectorXd mean_x = latents.colwise().mean();
    Eigen::MatrixXd z = latents.rowwise() - mean_x;
    const double scale = std::sqrt(z.squaredNorm() / static_cast<double>(z.size()));
    if (!(scale > 0.0)) {
        throw DegenerateLabelsError("all latents are identical; labels carry no linear signal");
    }
    z /= scale;

    const auto n = static_cast<double>(latents.rows());
    Eigen::VectorXd w = Eigen::VectorXd::Zero(latents.cols());
    double b = 0.0;
    Eigen::ArrayXd margins(latents.rows());
    Eigen::VectorXd coeff(latents.rows());
    DiscreteFit fit;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        margins = labels.array() * ((z * w).array() + b);
        // d/dz softplus(-y z) = -y * sigmoid(-y z)
        coeff = (-labels.array() / (1.0 + margins.exp()) / n).matrix();
        const Eigen::VectorXd grad_w = z.transpose() * coeff + 2.0 * cfg.l2_discrete * w;
        const double grad_b = coeff.sum();
        w -= cfg.learning_rate * grad_w;
        b -= cfg.learning_rate * grad_b;
        fit.iterations = epoch + 1;
        if (!w.allFinite() || !std::isfinite(b)) {
            throw DivergenceError("logistic regression diverged after " + std::to_string(epoch + 1) +
                                  " epochs; try a smaller learning_rate");
        }
        if (grad_w.squaredNorm() + grad_b * grad_b < 1e-24) {
            break;
        }
    }

    margins = labels.array() * ((z * w).array() + b);
    fit.loss = margins.unaryExpr([](double m) { return softplus(-m); }).mean() + cfg.l2_discrete * w.squaredNorm();
    if (!std::isfinite(fit.loss)) {
        throw DivergenceError("logistic loss is not finite; try a smaller learning_rate");
    }
    w /= scale;
    b -= mean_x.dot(w);
    fit.accuracy = (margins > 0.0).cast<double>().mean();
    fit.bias = b;
    fit.direction = unit_direction(w);
    return fit;
}

ContinuousFit fit_continuous(const Eigen::MatrixXd& latents, const Eigen::VectorXd& labels, const FitConfig& cfg)
{
    check_inputs(latents, labels, cfg);
    if (labels.maxCoeff() == labels.minCoeff()) {
        throw DegenerateLabelsError("continuous labels are constant");
    }

    const Eigen::Index d = latents.cols();
    const auto n = static_cast<double>(latents.rows());
    const Eigen::RowVectorXd mean_x = latents.colwise().mean();
    const double mean_y = labels.mean();
    const Eigen::MatrixXd centered = latents.rowwise() - mean_x;
    const Eigen::VectorXd target = labels.array() - mean_y;
    const double l2 = cfg.l2_continuous;

    ContinuousFit fit;
    Eigen::VectorXd w;
    if (static_cast<std::size_t>(d) <= cfg.closed_form_max_dim) {
        if (l2 == 0.0) {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centered);
            if (qr.rank() < d) {
                throw SingularSystemError("least-squares system is rank deficient (rank " + std::to_string(qr.rank()) +
                                          " < " + std::to_string(d) + "); use l2 > 0");
            }
        }
        Eigen::MatrixXd gram = centered.transpose() * centered;
        gram.diagonal().array() += l2;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            throw SingularSystemError("normal equations are not positive definite; use l2 > 0");
        }
        w = ldlt.solve(centered.transpose() * target);
    } else {
        fit.used_gradient_descent = true;
        w = Eigen::VectorXd::Zero(d);
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            const Eigen::VectorXd residual = centered * w - target;
            const Eigen::VectorXd grad = (2.0 / n) * (centered.transpose() * residual + l2 * w);
            w -= cfg.learning_rate * grad;
            if (!w.allFinite()) {
                throw DivergenceError("least-squares gradient descent diverged; try a smaller learning_rate");
            }
        }
    }
    if (!w.allFinite()) {
        throw SingularSystemError("least-squares solution is not finite; use l2 > 0");
    }

    fit.bias = mean_y - mean_x.dot(w);
    const Eigen::VectorXd residual = (latents * w).array() + fit.bias - labels.array();
    const double ss_res = residual.squaredNorm();
    const double ss_tot = target.squaredNorm();
    fit.rmse = std::sqrt(ss_res / n);
    fit.r2 = 1.0 - ss_res / ss_tot;
    fit.direction = unit_direction(w);
    return fit;
}

double normalize_discrete_label(double value, std::string_view feature_id)
{
    if (value == 1.0) {
        return 1.0;
    }
    if (value == -1.0 || value == 0.0) {
        return -1.0;
    }
    throw ValidationError("discrete feature \"" + std::string(feature_id) + "\" has label " + std::to_string(value) +
                          "; expected -1/+1 or 0/1");
}

FitResult fit_all(const std::vector<LabeledSample>& dataset, const FeatureRegistry& reg, const FitConfig& cfg)
{
    cfg.validate();
    if (dataset.empty()) {
        throw EmptyFitError("dataset is empty; no direction can be fitted");
    }
    const std::size_t dim = dataset.front().latent.dim();
    for (const auto& s : dataset) {
        if (s.latent.dim() != dim) {
            throw DimensionError("dataset mixes latent dimensions " + std::to_string(dim) + " and " +
                                 std::to_string(s.latent.dim()));
        }
        for (const auto& [id, value] : s.labels) {
            reg.require_index(id);
        }
    }

    const std::size_t k = reg.size();
    RowMatrix rows = RowMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dim));
    std::vector<FeatureFitReport> reports(k);

    auto fit_one = [&](std::size_t f) {
        const FeatureDef& def = reg[f];
        FeatureFitReport& rep = reports[f];
        rep.id = def.id;
        rep.kind = def.kind;

        std::vector<std::pair<const LatentVector*, double>> subset;
        for (const auto& s : dataset) {
            if (auto it = s.labels.find(def.id); it != s.labels.end()) {
                subset.emplace_back(&s.latent, it->second);
            }
        }
        rep.n = subset.size();
        if (subset.size() < cfg.min_samples_per_feature) {
            rep.note = "insufficient samples: " + std::to_string(subset.size()) + " labeled, need " +
                       std::to_string(cfg.min_samples_per_feature);
            return;
        }

        Eigen::MatrixXd latents(static_cast<Eigen::Index>(subset.size()), static_cast<Eigen::Index>(dim));
        Eigen::VectorXd labels(static_cast<Eigen::Index>(subset.size()));
        for (std::size_t i = 0; i < subset.size(); ++i) {
            latents.row(static_cast<Eigen::Index>(i)) = subset[i].first->data().transpose();
            labels(static_cast<Eigen::Index>(i)) = subset[i].second;
        }

        try {
            if (def.kind == FeatureKind::Discrete) {
                for (Eigen::Index i = 0; i < labels.size(); ++i) {
                    labels(i) = normalize_discrete_label(labels(i), def.id);
                }
                const DiscreteFit fit = fit_discrete(latents, labels, cfg);
                rows.row(static_cast<Eigen::Index>(f)) = fit.direction;
                rep.bias = fit.bias;
                rep.loss = fit.loss;
                rep.accuracy = fit.accuracy;
                rep.iterations = fit.iterations;
            } else {
                const ContinuousFit fit = fit_continuous(latents, labels, cfg);
                rows.row(static_cast<Eigen::Index>(f)) = fit.direction;
                rep.bias = fit.bias;
                rep.rmse = fit.rmse;
                rep.r2 = fit.r2;
                rep.solver = fit.used_gradient_descent ? "gradient_descent" : "normal_equations";
            }
            rep.valid = true;
        } catch (const Error& e) {
            rows.row(static_cast<Eigen::Index>(f)).setZero();
            rep.note = e.what();
        }
    };

    unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, k));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t f = next++; f < k; f = next++) {
            try {
                fit_one(f);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < workers; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    std::vector<bool> valid(k);
    for (std::size_t f = 0; f < k; ++f) {
        valid[f] = reports[f].valid;
    }
    if (std::none_of(valid.begin(), valid.end(), [](bool v) { return v; })) {
        std::string reasons;
        for (const auto& r : reports) {
            if (reasons.size() < 400) {
                reasons += "\n  " + r.id + ": " + r.note;
            }
        }
        throw EmptyFitError("no feature could be fitted:" + reasons);
    }
    return FitResult{DirectionSet(reg.ids(), std::move(rows), std::move(valid)), std::move(reports)};
}

std::string fit_report_json(const FitResult& result)
{
    json features = json::array();
    std::vector<std::string> skipped;
    for (const auto& r : result.reports) {
        json item{{"id", r.id}, {"kind", std::string(to_string(r.kind))}, {"valid", r.valid}, {"n", r.n}};
        if (r.valid) {
            item["bias"] = r.bias;
            if (r.kind == FeatureKind::Discrete) {
                item["loss"] = r.loss;
                item["accuracy"] = r.accuracy;
                item["iterations"] = r.iterations;
            } else {
                item["rmse"] = r.rmse;
                item["r2"] = r.r2;
                item["solver"] = r.solver;
            }
        } else {
            item["note"] = r.note;
            skipped.push_back(r.id);
        }
        features.push_back(std::move(item));
    }
    json doc{{"features", std::move(features)},
             {"valid_count", result.valid_count()},
             {"skipped", skipped},
             {"latent_dim", result.directions.dim()}};
    return doc.dump(2) + "\n";
}

} // namespace steer
