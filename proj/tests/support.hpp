#pragma once

// Test-only oracles. These deliberately avoid Eigen's decompositions and the
// library's own routines so they stay independent of the code under test.

#include "steer/latent.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace steer::test {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline Vec gaussian(std::size_t d, std::mt19937_64& gen)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Vec v(d);
    for (auto& x : v) {
        x = n(gen);
    }
    return v;
}

inline Vec unit(Vec v)
{
    const double n = std::sqrt(dot(v, v));
    for (auto& x : v) {
        x /= n;
    }
    return v;
}

/// K mutually orthonormal rows in dimension d by modified Gram-Schmidt.
inline std::vector<Vec> orthonormal_rows(std::size_t k, std::size_t d, std::mt19937_64& gen)
{
    std::vector<Vec> rows;
    while (rows.size() < k) {
        Vec v = gaussian(d, gen);
        for (int sweep = 0; sweep < 2; ++sweep) {
            for (const auto& r : rows) {
                const double c = dot(v, r);
                for (std::size_t i = 0; i < d; ++i) {
                    v[i] -= c * r[i];
                }
            }
        }
        rows.push_back(unit(std::move(v)));
    }
    return rows;
}

inline RowMatrix to_matrix(const std::vector<Vec>& rows)
{
    RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

inline std::vector<std::string> numbered_ids(std::size_t k)
{
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < k; ++i) {
        ids.push_back("f" + std::to_string(i));
    }
    return ids;
}

inline DirectionSet direction_set(const std::vector<Vec>& rows)
{
    return DirectionSet(numbered_ids(rows.size()), to_matrix(rows));
}

inline LatentVector latent(const Vec& v)
{
    return LatentVector(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

inline Vec to_vec(const Eigen::VectorXd& v)
{
    return Vec(v.data(), v.data() + v.size());
}

inline Vec row_vec(const DirectionSet& dirs, std::size_t i)
{
    const auto r = dirs.row(i);
    return Vec(r.data(), r.data() + r.size());
}

inline double angle_deg(const Vec& a, const Vec& b)
{
    double c = dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
    c = std::max(-1.0, std::min(1.0, c));
    return std::acos(c) * 180.0 / std::numbers::pi;
}

/// Solves the small dense system A x = b by Gaussian elimination with partial pivoting.
inline Vec solve_dense(std::vector<Vec> a, Vec b)
{
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) {
                pivot = r;
            }
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    Vec x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) {
            s -= a[i][c] * x[c];
        }
        x[i] = s / a[i][i];
    }
    return x;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("steer_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace steer::test
