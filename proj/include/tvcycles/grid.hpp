#pragma once

// Periodic cubical complex on the flat torus T^n.
//
// Sites are the grid vertices, numbered row-major (last axis fastest). A
// p-cell is a site plus an axis set I with |I| = p; its index is
// site * C(n,p) + lexicographic position of I, so the C(n,p) components
// collocated at one site are contiguous. Cochain values approximate the
// pointwise components of a differential form: d carries the 1/h_i
// finite-difference scaling and the L2 weight of every cell is the site
// volume prod(h_i).

#include "tvcycles/exterior.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace tvcycles {

using SparseOperator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class TorusGrid {
public:
    /// Throws std::invalid_argument unless every N_i >= 2 and every L_i > 0.
    TorusGrid(std::vector<int> dims, std::vector<double> lengths);

    int dim() const { return static_cast<int>(dims_.size()); }
    std::span<const int> dims() const { return dims_; }
    std::span<const double> lengths() const { return lengths_; }
    double spacing(int axis) const { return lengths_[axis] / dims_[axis]; }
    /// N_i / L_i, computed directly so scalings are exact for power-of-two grids.
    double inverse_spacing(int axis) const { return dims_[axis] / lengths_[axis]; }

    std::size_t site_count() const { return site_count_; }
    std::size_t cell_count(int p) const { return site_count_ * binomial(dim(), p); }
    double cell_volume() const { return cell_volume_; }
    double total_volume() const;

    std::size_t stride(int axis) const { return strides_[axis]; }
    int coordinate(std::size_t site, int axis) const
    {
        return static_cast<int>((site / strides_[axis]) % dims_[axis]);
    }
    std::size_t shifted(std::size_t site, int axis, int offset) const;

    bool operator==(const TorusGrid& other) const
    {
        return dims_ == other.dims_ && lengths_ == other.lengths_;
    }

private:
    std::vector<int> dims_;
    std::vector<double> lengths_;
    std::vector<std::size_t> strides_;
    std::size_t site_count_ = 1;
    double cell_volume_ = 1.0;
};

using GridPtr = std::shared_ptr<const TorusGrid>;

GridPtr make_grid(std::vector<int> dims, std::vector<double> lengths);
/// Unit-period grid with the given resolution.
GridPtr make_grid(std::vector<int> dims);

class DiscreteForm {
public:
    DiscreteForm(GridPtr grid, int degree);
    DiscreteForm(GridPtr grid, int degree, Eigen::VectorXd values);

    /// Constant-coefficient form with the given components at every site.
    static DiscreteForm constant(GridPtr grid, const KVector& components);
    /// Samples `component_value(x, axes)` at each site position x = (i_a * h_a).
    static DiscreteForm sample(GridPtr grid, int degree,
                               const std::function<double(std::span<const double>, AxisMask)>& component_value);

    const TorusGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    int degree() const { return degree_; }
    std::size_t components() const { return components_; }

    Eigen::VectorXd& values() { return values_; }
    const Eigen::VectorXd& values() const { return values_; }

    double& at(std::size_t site, std::size_t component) { return values_[site * components_ + component]; }
    double at(std::size_t site, std::size_t component) const
    {
        return values_[site * components_ + component];
    }
    KVector site_vector(std::size_t site) const;
    void set_site_vector(std::size_t site, const KVector& v);

    /// Same grid (by value) and same degree.
    bool compatible(const DiscreteForm& other) const;

    DiscreteForm& operator+=(const DiscreteForm& other);
    DiscreteForm& operator-=(const DiscreteForm& other);
    DiscreteForm& operator*=(double s);
    friend DiscreteForm operator+(DiscreteForm a, const DiscreteForm& b) { return a += b; }
    friend DiscreteForm operator-(DiscreteForm a, const DiscreteForm& b) { return a -= b; }
    friend DiscreteForm operator*(DiscreteForm a, double s) { return a *= s; }
    friend DiscreteForm operator*(double s, DiscreteForm a) { return a *= s; }

private:
    GridPtr grid_;
    int degree_;
    std::size_t components_;
    Eigen::VectorXd values_;
};

/// Exterior derivative on p-cochains, forward differences scaled by 1/h_i.
SparseOperator build_d(const TorusGrid& grid, int p);
/// Pointwise Hodge star from p-cochains to (n-p)-cochains (signed permutation).
SparseOperator build_star(const TorusGrid& grid, int p);
/// Codifferential on p-cochains, the adjoint of d_{p-1} in the L2 product.
SparseOperator build_delta(const TorusGrid& grid, int p);

DiscreteForm exterior_derivative(const DiscreteForm& form);
DiscreteForm codifferential(const DiscreteForm& form);
DiscreteForm hodge_star(const DiscreteForm& form);
DiscreteForm hodge_star_inverse(const DiscreteForm& form);

double l2_inner(const DiscreteForm& a, const DiscreteForm& b);
double l2_norm(const DiscreteForm& form);

/// T_omega(rho) = integral of rho ^ omega, for deg rho + deg omega = n.
double pairing(const DiscreteForm& rho, const DiscreteForm& omega);

} // namespace tvcycles
