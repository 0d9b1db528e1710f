#pragma once

#include <Eigen/Dense>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "expressive/error.hpp"

#define CHECK_THROWS_KIND(expr, k)                                  \
    do {                                                            \
        bool thrown_ = false;                                       \
        try {                                                       \
            (void)(expr);                                           \
        } catch (const expressive::Error& e_) {                     \
            thrown_ = true;                                         \
            CHECK_MESSAGE(e_.kind() == (k), e_.what());             \
        }                                                           \
        CHECK_MESSAGE(thrown_, "expected an expressive::Error");    \
    } while (0)

namespace testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(EXPRESSIVE_FIXTURES) / name; }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    auto p = std::filesystem::temp_directory_path() / ("expressive_" + tag + "_" + std::to_string(rng() % 1000000007));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline Eigen::MatrixXd randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
    return m;
}

}  // namespace testing
