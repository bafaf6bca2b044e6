#ifndef COVERTREE_DATASETS_HPP
#define COVERTREE_DATASETS_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include "errors.hpp"
#include "metric.hpp"

namespace covertree {

/// Seeded synthetic point sets for sweeps and tests.
enum class DatasetFamily { uniform, clustered, outlier };

inline DatasetFamily parse_family(std::string_view name) {
    if (name == "uniform") return DatasetFamily::uniform;
    if (name == "clustered") return DatasetFamily::clustered;
    if (name == "outlier") return DatasetFamily::outlier;
    throw ParameterError("unknown dataset family '" + std::string(name) + "'");
}

/// Unit cube.
inline PointSet uniform_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointSet out(dim);
    std::vector<double> p(dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& x : p) {
            x = u(rng);
        }
        out.push_back(p);
    }
    return out;
}

/// Gaussian mixture with centers in the unit cube.
inline PointSet clustered_points(std::size_t n, std::size_t dim, std::uint64_t seed, std::size_t clusters = 8,
                                 double sigma = 0.02) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<std::vector<double>> centers(clusters, std::vector<double>(dim));
    for (auto& c : centers) {
        for (auto& x : c) {
            x = u(rng);
        }
    }
    std::uniform_int_distribution<std::size_t> pick(0, clusters - 1);
    PointSet out(dim);
    std::vector<double> p(dim);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = centers[pick(rng)];
        for (std::size_t a = 0; a < dim; ++a) {
            p[a] = c[a] + g(rng);
        }
        out.push_back(p);
    }
    return out;
}

/// Uniform cube plus one point far away along the diagonal.
inline PointSet outlier_points(std::size_t n, std::size_t dim, std::uint64_t seed, double distance = 1000.0) {
    if (n == 0) {
        return PointSet(dim);
    }
    PointSet out = uniform_points(n - 1, dim, seed);
    std::vector<double> far(dim, distance);
    out.push_back(far);
    return out;
}

inline PointSet generate(DatasetFamily family, std::size_t n, std::size_t dim, std::uint64_t seed) {
    switch (family) {
    case DatasetFamily::uniform: return uniform_points(n, dim, seed);
    case DatasetFamily::clustered: return clustered_points(n, dim, seed);
    case DatasetFamily::outlier: return outlier_points(n, dim, seed);
    }
    return PointSet(dim);
}

} // namespace covertree

#endif
