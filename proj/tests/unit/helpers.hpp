#pragma once

#include "tvcycles/grid.hpp"

#include <Eigen/Dense>

#include <random>

namespace testing_util {

inline Eigen::VectorXd gaussian(std::mt19937_64& rng, Eigen::Index size)
{
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = normal(rng);
    return v;
}

inline tvcycles::KVector random_kvector(std::mt19937_64& rng, int n, int k)
{
    tvcycles::KVector v(n, k);
    const Eigen::VectorXd g = gaussian(rng, static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) v.coeffs()[i] = g[static_cast<Eigen::Index>(i)];
    return v;
}

/// Wedge of k Gaussian vectors.
inline tvcycles::KVector random_simple(std::mt19937_64& rng, int n, int k)
{
    Eigen::MatrixXd frame(n, k);
    for (int j = 0; j < k; ++j) frame.col(j) = gaussian(rng, n);
    return tvcycles::wedge_columns(frame);
}

inline tvcycles::DiscreteForm random_form(std::mt19937_64& rng, const tvcycles::GridPtr& grid, int degree)
{
    tvcycles::DiscreteForm f(grid, degree);
    f.values() = gaussian(rng, f.values().size());
    return f;
}

inline Eigen::MatrixXd dense(const tvcycles::SparseOperator& op)
{
    return Eigen::MatrixXd(op);
}

} // namespace testing_util
