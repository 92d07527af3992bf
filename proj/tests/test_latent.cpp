#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "steer/error.hpp"
#include "steer/latent.hpp"
#include "steer/latent_io.hpp"

#include "support.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

using namespace steer;
using test::Vec;

namespace {

FeatureVector target_of(std::size_t k, std::initializer_list<std::pair<std::size_t, double>> entries)
{
    FeatureVector t(k);
    for (const auto& [i, v] : entries) {
        t.set(i, v);
    }
    return t;
}

FeatureVector random_target(std::size_t k, std::mt19937_64& gen, double on_probability = 0.6)
{
    std::uniform_real_distribution<double> value(-3.0, 3.0);
    std::bernoulli_distribution on(on_probability);
    FeatureVector t(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (on(gen)) {
            t.set(i, value(gen));
        }
    }
    return t;
}

} // namespace

TEST_CASE("projection examples")
{
    const Eigen::RowVector2d x(1.0, 0.0);
    CHECK(project_feature(test::latent({3.0, 4.0}), x) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(project_feature(test::latent({0.0, 0.0}), x) == 0.0);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(project_feature(test::latent({1.0, 1.0}), Eigen::RowVector2d(r, r)) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("projection rejects mismatched or non-unit directions")
{
    CHECK_THROWS_AS(project_feature(test::latent({1.0, 2.0, 3.0}), Eigen::RowVector2d(1.0, 0.0)), DimensionError);
    CHECK_THROWS_AS(project_feature(test::latent({1.0, 2.0}), Eigen::RowVector2d(2.0, 0.0)), ValidationError);
}

TEST_CASE("project_all matches per-row dot products")
{
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rows = test::orthonormal_rows(12, 64, gen);
        const auto dirs = test::direction_set(rows);
        const Vec l = test::gaussian(64, gen);
        const auto proj = project_all(test::latent(l), dirs);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(proj.mask[i]);
            CHECK(std::abs(proj.values[i] - test::dot(l, rows[i])) <= 1e-12);
        }
    }
}

TEST_CASE("latent and direction invariants")
{
    CHECK_THROWS_AS(LatentVector(Eigen::VectorXd(0)), DimensionError);
    CHECK_THROWS_AS(LatentVector(Eigen::VectorXd::Zero(6), LatentShape{2, 4}), DimensionError);
    Eigen::VectorXd bad = Eigen::VectorXd::Zero(3);
    bad(1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(LatentVector{bad}, ValidationError);
    CHECK(LatentVector(Eigen::VectorXd::Zero(9216)).shape() == LatentShape{18, 512});
    CHECK(LatentVector(Eigen::VectorXd::Zero(64)).shape() == LatentShape{1, 64});

    RowMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, 2.0;
    CHECK_THROWS_AS(DirectionSet({"a", "b"}, m), ValidationError);
    CHECK_THROWS_AS(DirectionSet({"a"}, m), DimensionError);
    m << 1.0, 0.0, 0.0, 0.0;
    const DirectionSet partial({"a", "b"}, m, {true, false});
    CHECK(partial.valid_count() == 1);
    m << 1.0, 0.0, 0.0, 1.0;
    CHECK_THROWS_AS(DirectionSet({"a", "b"}, m, {true, false}), ValidationError);
}

TEST_CASE("seed sampling")
{
    SeedSpec spec;
    spec.rng_seed = 42;
    const auto a = sample_seed(spec, 9216);
    const auto b = sample_seed(spec, 9216);
    CHECK(a == b);
    CHECK(a.shape() == LatentShape{18, 512});
    CHECK(std::abs(a.data().mean()) <= 4.0 / std::sqrt(9216.0));
    spec.rng_seed = 43;
    CHECK_FALSE(sample_seed(spec, 9216) == a);

    test::TempDir dir;
    const auto path = dir / "seed.json";
    write_latent_file(path, a);
    SeedSpec file_spec;
    file_spec.mode = SeedSpec::Mode::FromFile;
    file_spec.path = path;
    CHECK(sample_seed(file_spec, 9216) == a);
    CHECK_THROWS_AS(sample_seed(file_spec, 512), DimensionError);
    file_spec.path = dir / "absent.json";
    CHECK_THROWS_AS(sample_seed(file_spec, 9216), IoError);
}

TEST_CASE("vectorized navigation examples")
{
    RowMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, 1.0;
    const DirectionSet dirs({"a", "b"}, m);
    const auto moved = navigate_vectorized(test::latent({0.0, 0.0}), target_of(2, {{0, 1.0}, {1, -0.5}}), dirs);
    CHECK(test::to_vec(moved.data()) == Vec{1.0, -0.5});

    const auto start = test::latent({0.3, -0.2});
    CHECK(navigate_vectorized(start, FeatureVector(2), dirs) == start);

    const auto only_a = navigate_vectorized(start, target_of(2, {{0, 2.0}}), dirs);
    CHECK(only_a.data()(0) == doctest::Approx(2.0));
    CHECK(only_a.data()(1) == -0.2);
}

TEST_CASE("vectorized navigation is exact for orthonormal directions and preserves unmasked features")
{
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto rows = test::orthonormal_rows(10, 64, gen);
        const auto dirs = test::direction_set(rows);
        const Vec l = test::gaussian(64, gen);
        const auto target = random_target(10, gen);
        const auto moved = test::to_vec(navigate_vectorized(test::latent(l), target, dirs).data());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double want = target.mask[i] ? target.values[i] : test::dot(l, rows[i]);
            CHECK(std::abs(test::dot(moved, rows[i]) - want) <= 1e-9);
        }
    }
}

TEST_CASE("navigation rejects targets on unfitted or mismatched directions")
{
    RowMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, 0.0;
    const DirectionSet dirs({"a", "b"}, m, {true, false});
    CHECK_THROWS_AS(navigate_vectorized(test::latent({0.0, 0.0}), target_of(2, {{1, 1.0}}), dirs), ValidationError);
    CHECK_THROWS_AS(navigate_sequential(test::latent({0.0, 0.0}), target_of(2, {{1, 1.0}}), dirs), ValidationError);
    CHECK_THROWS_AS(navigate_vectorized(test::latent({0.0, 0.0, 0.0}), target_of(2, {{0, 1.0}}), dirs),
                    DimensionError);
    CHECK_THROWS_AS(navigate_vectorized(test::latent({0.0, 0.0}), target_of(3, {{0, 1.0}}), dirs), DimensionError);
}

TEST_CASE("sequential navigation converges in one pass on orthonormal directions")
{
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rows = test::orthonormal_rows(6, 32, gen);
        const auto dirs = test::direction_set(rows);
        const auto start = test::latent(test::gaussian(32, gen));
        const auto target = random_target(6, gen, 1.0);
        const auto seq = navigate_sequential(start, target, dirs);
        CHECK(seq.passes == 1);
        CHECK(seq.residual <= 1e-9);
        const auto vec = navigate_vectorized(start, target, dirs);
        CHECK((seq.latent.data() - vec.data()).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("sequential navigation with an empty mask returns the start")
{
    const auto start = test::latent({0.5, 0.25});
    RowMatrix m(1, 2);
    m << 1.0, 0.0;
    const auto res = navigate_sequential(start, FeatureVector(1), DirectionSet({"a"}, m));
    CHECK(res.latent == start);
    CHECK(res.passes == 1);
    CHECK(res.residual == 0.0);
}

TEST_CASE("sequential navigation at 60 degrees reaches the minimal-norm correction")
{
    // Two unit directions 60 degrees apart in the plane of a 3-d space.
    const double c = std::cos(60.0 * std::numbers::pi / 180.0);
    const double s = std::sin(60.0 * std::numbers::pi / 180.0);
    const std::vector<Vec> rows{{1.0, 0.0, 0.0}, {c, s, 0.0}};
    const auto dirs = test::direction_set(rows);
    const Vec l{0.2, -0.4, 0.7};
    const auto target = target_of(2, {{0, 1.5}, {1, -1.0}});

    const auto res = navigate_sequential(test::latent(l), target, dirs, 1e-12, 1000);
    REQUIRE(res.residual <= 1e-12);

    // Oracle: L + D^T c with (D D^T) c = V - D L.
    const std::vector<Vec> gram{{1.0, c}, {c, 1.0}};
    const Vec rhs{1.5 - test::dot(rows[0], l), -1.0 - test::dot(rows[1], l)};
    const Vec coef = test::solve_dense(gram, rhs);
    for (std::size_t j = 0; j < 3; ++j) {
        const double want = l[j] + coef[0] * rows[0][j] + coef[1] * rows[1][j];
        CHECK(std::abs(res.latent.data()(static_cast<Eigen::Index>(j)) - want) <= 1e-9);
    }
    CHECK(res.latent.data()(2) == 0.7);
}

TEST_CASE("sequential navigation is idempotent and leaves orthogonal complements alone")
{
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 20; ++trial) {
        // Four entangled rows from a random mixing of an orthonormal basis.
        const auto basis = test::orthonormal_rows(6, 24, gen);
        std::vector<Vec> rows;
        for (std::size_t i = 0; i < 4; ++i) {
            Vec r = basis[i];
            for (std::size_t j = 0; j < 24; ++j) {
                r[j] += 0.3 * basis[(i + 1) % 4][j];
            }
            rows.push_back(test::unit(r));
        }
        const auto dirs = test::direction_set(rows);
        const Vec l = test::gaussian(24, gen);
        const auto target = random_target(4, gen, 1.0);
        const auto once = navigate_sequential(test::latent(l), target, dirs, 1e-10, 1000);
        REQUIRE(once.residual <= 1e-10);
        const auto twice = navigate_sequential(once.latent, target, dirs, 1e-10, 1000);
        CHECK((twice.latent.data() - once.latent.data()).cwiseAbs().maxCoeff() <= 1e-9);

        // basis[4] and basis[5] are orthogonal to every row.
        const Vec moved = test::to_vec(once.latent.data());
        for (std::size_t b = 4; b < 6; ++b) {
            CHECK(std::abs(test::dot(moved, basis[b]) - test::dot(l, basis[b])) <= 1e-9);
        }
    }
}

TEST_CASE("sequential navigation reports non-convergence instead of throwing")
{
    const double c = std::cos(1.0 * std::numbers::pi / 180.0);
    const double s = std::sin(1.0 * std::numbers::pi / 180.0);
    const auto dirs = test::direction_set({{1.0, 0.0}, {c, s}});
    const auto res = navigate_sequential(test::latent({0.0, 0.0}), target_of(2, {{0, 1.0}, {1, -1.0}}), dirs, 1e-3, 3);
    CHECK(res.passes == 3);
    CHECK(res.residual > 1e-3);
    CHECK_THROWS_AS(navigate_sequential(test::latent({0.0, 0.0}), FeatureVector(2), dirs, 0.0), ValidationError);
    CHECK_THROWS_AS(navigate_sequential(test::latent({0.0, 0.0}), FeatureVector(2), dirs, 1e-3, 0), ValidationError);
}

TEST_CASE("navigation is deterministic")
{
    std::mt19937_64 gen(3);
    const auto dirs = test::direction_set(test::orthonormal_rows(5, 16, gen));
    const auto start = test::latent(test::gaussian(16, gen));
    const auto target = random_target(5, gen, 1.0);
    CHECK(navigate_sequential(start, target, dirs).latent == navigate_sequential(start, target, dirs).latent);
    CHECK(navigate_vectorized(start, target, dirs) == navigate_vectorized(start, target, dirs));
}

TEST_CASE("angle examples")
{
    const Eigen::RowVector2d x(1.0, 0.0);
    const Eigen::RowVector2d y(0.0, 1.0);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(angle_between(x, y) == doctest::Approx(90.0).epsilon(1e-12));
    CHECK(angle_between(x, x) == 0.0);
    CHECK(angle_between(x, Eigen::RowVector2d(r, r)) == doctest::Approx(45.0).epsilon(1e-12));
    CHECK(angle_between(x, -x) == doctest::Approx(180.0).epsilon(1e-12));
}

TEST_CASE("angle matrix matches a direct double loop")
{
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec> rows;
        for (int i = 0; i < 9; ++i) {
            rows.push_back(test::unit(test::gaussian(32, gen)));
        }
        const auto angles = angle_matrix(test::direction_set(rows));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < rows.size(); ++j) {
                const double want = i == j ? 0.0 : test::angle_deg(rows[i], rows[j]);
                CHECK(std::abs(angles(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - want) <= 1e-9);
            }
        }
        CHECK(angles.isApprox(angles.transpose(), 0.0));
    }
}

TEST_CASE("angle matrix marks unfitted rows as NaN")
{
    RowMatrix m(3, 2);
    m << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
    const auto angles = angle_matrix(DirectionSet({"a", "b", "c"}, m, {true, false, true}));
    CHECK(std::isnan(angles(1, 0)));
    CHECK(std::isnan(angles(1, 1)));
    CHECK(std::isnan(angles(2, 1)));
    CHECK(angles(0, 2) == doctest::Approx(90.0));
    CHECK(min_off_diagonal(angles) == doctest::Approx(90.0));
}

TEST_CASE("angle CSV round trip")
{
    std::mt19937_64 gen(2);
    std::vector<Vec> rows;
    for (int i = 0; i < 6; ++i) {
        rows.push_back(test::unit(test::gaussian(8, gen)));
    }
    const auto dirs = test::direction_set(rows);
    const auto angles = angle_matrix(dirs);
    const auto csv = format_angle_csv(dirs.ids(), angles);
    const auto report = parse_angle_csv(csv);
    CHECK(report.ids == dirs.ids());
    REQUIRE(report.angles.rows() == 6);
    CHECK((report.angles - angles).cwiseAbs().maxCoeff() <= 0.05 + 1e-12);
    CHECK(format_angle_csv(report.ids, report.angles) == csv);
    CHECK(csv.substr(0, csv.find('\n')) == "f0,f1,f2,f3,f4,f5");
}

TEST_CASE("latent file round trip is exact")
{
    SeedSpec spec;
    spec.rng_seed = 99;
    const auto latent = sample_seed(spec, 9216);
    CHECK(parse_latent(serialize_latent(latent)) == latent);
    const auto small = test::latent({0.1, -1e-300, 12345.678901234567});
    CHECK(parse_latent(serialize_latent(small)) == small);
}

TEST_CASE("latent files written by other tools load")
{
    const auto latent = read_latent_file(std::filesystem::path(STEER_TEST_DATA) / "golden_latent_18x512.json");
    REQUIRE(latent.dim() == 9216);
    CHECK(latent.shape() == LatentShape{18, 512});
    for (Eigen::Index i = 0; i < latent.data().size(); i += 97) {
        const double want = std::round(std::sin(0.37 * static_cast<double>(i)) * 2.5 * 1e12) / 1e12;
        CHECK(std::abs(latent.data()(i) - want) <= 1e-12);
    }
}

TEST_CASE("malformed latent and direction files")
{
    CHECK_THROWS_AS(parse_latent(R"({"shape": [2, 2], "data": [1, 2, 3]})"), DimensionError);
    CHECK_THROWS_AS(parse_latent(R"({"shape": [1, 2]})"), FormatError);
    CHECK_THROWS_AS(parse_latent(R"({"shape": [1, 2], "data": [1, "x"]})"), FormatError);
    CHECK_THROWS_AS(parse_latent("not json"), FormatError);
    CHECK_THROWS_AS(parse_directions(R"({"latent_dim": 2, "feature_ids": ["a"], "directions": [[2, 0]]})"),
                    ValidationError);
    CHECK_THROWS_AS(parse_directions(R"({"latent_dim": 3, "feature_ids": ["a"], "directions": [[1, 0]]})"),
                    DimensionError);
}

TEST_CASE("direction file round trip keeps validity")
{
    RowMatrix m(3, 4);
    m << 0.5, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0;
    const DirectionSet dirs({"a", "b", "c"}, m, {true, false, true});
    const auto back = parse_directions(serialize_directions(dirs));
    CHECK(back.ids() == dirs.ids());
    CHECK(back.validity() == dirs.validity());
    CHECK(back.matrix() == dirs.matrix());
}
