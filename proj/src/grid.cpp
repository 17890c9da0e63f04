#include "tvcycles/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tvcycles {

TorusGrid::TorusGrid(std::vector<int> dims, std::vector<double> lengths)
    : dims_(std::move(dims)), lengths_(std::move(lengths))
{
    if (dims_.empty() || static_cast<int>(dims_.size()) > kMaxDimension) {
        throw std::invalid_argument("torus dimension must be in 1.." + std::to_string(kMaxDimension));
    }
    if (lengths_.size() != dims_.size()) {
        throw std::invalid_argument("need one period length per axis");
    }
    strides_.assign(dims_.size(), 1);
    for (int a = dim() - 1; a >= 0; --a) {
        if (dims_[a] < 2) throw std::invalid_argument("every axis needs at least 2 cells");
        if (!(lengths_[a] > 0) || !std::isfinite(lengths_[a])) {
            throw std::invalid_argument("period lengths must be positive");
        }
        strides_[a] = site_count_;
        site_count_ *= static_cast<std::size_t>(dims_[a]);
    }
    for (int a = 0; a < dim(); ++a) cell_volume_ *= spacing(a);
}

double TorusGrid::total_volume() const
{
    double v = 1.0;
    for (double l : lengths_) v *= l;
    return v;
}

std::size_t TorusGrid::shifted(std::size_t site, int axis, int offset) const
{
    const int n_axis = dims_[axis];
    const int c = coordinate(site, axis);
    const int moved = ((c + offset) % n_axis + n_axis) % n_axis;
    return site + (static_cast<std::ptrdiff_t>(moved) - c) * static_cast<std::ptrdiff_t>(strides_[axis]);
}

GridPtr make_grid(std::vector<int> dims, std::vector<double> lengths)
{
    return std::make_shared<const TorusGrid>(std::move(dims), std::move(lengths));
}

GridPtr make_grid(std::vector<int> dims)
{
    std::vector<double> lengths(dims.size(), 1.0);
    return make_grid(std::move(dims), std::move(lengths));
}

DiscreteForm::DiscreteForm(GridPtr grid, int degree)
    : grid_(std::move(grid)), degree_(degree)
{
    if (!grid_) throw std::invalid_argument("form needs a grid");
    if (degree < 0 || degree > grid_->dim()) throw std::invalid_argument("form degree out of range");
    components_ = binomial(grid_->dim(), degree);
    values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid_->cell_count(degree)));
}

DiscreteForm::DiscreteForm(GridPtr grid, int degree, Eigen::VectorXd values)
    : DiscreteForm(std::move(grid), degree)
{
    if (values.size() != values_.size()) {
        throw std::invalid_argument("value count must equal the p-cell count");
    }
    if (!values.allFinite()) throw std::invalid_argument("form values must be finite");
    values_ = std::move(values);
}

DiscreteForm DiscreteForm::constant(GridPtr grid, const KVector& components)
{
    if (components.dim() != grid->dim()) throw std::invalid_argument("constant form: dimension mismatch");
    DiscreteForm out(std::move(grid), components.degree());
    for (std::size_t s = 0; s < out.grid().site_count(); ++s) out.set_site_vector(s, components);
    return out;
}

DiscreteForm DiscreteForm::sample(
    GridPtr grid, int degree,
    const std::function<double(std::span<const double>, AxisMask)>& component_value)
{
    DiscreteForm out(std::move(grid), degree);
    const TorusGrid& g = out.grid();
    const auto masks = basis_masks(g.dim(), degree);
    std::vector<double> x(g.dim());
    for (std::size_t s = 0; s < g.site_count(); ++s) {
        for (int a = 0; a < g.dim(); ++a) x[a] = g.coordinate(s, a) * g.spacing(a);
        for (std::size_t c = 0; c < masks.size(); ++c) out.at(s, c) = component_value(x, masks[c]);
    }
    return out;
}

KVector DiscreteForm::site_vector(std::size_t site) const
{
    KVector v(grid_->dim(), degree_);
    for (std::size_t c = 0; c < components_; ++c) v.coeffs()[c] = at(site, c);
    return v;
}

void DiscreteForm::set_site_vector(std::size_t site, const KVector& v)
{
    if (v.dim() != grid_->dim() || v.degree() != degree_) {
        throw std::invalid_argument("site vector shape mismatch");
    }
    for (std::size_t c = 0; c < components_; ++c) at(site, c) = v.coeffs()[c];
}

bool DiscreteForm::compatible(const DiscreteForm& other) const
{
    return degree_ == other.degree_ && (grid_ == other.grid_ || *grid_ == *other.grid_);
}

DiscreteForm& DiscreteForm::operator+=(const DiscreteForm& other)
{
    if (!compatible(other)) throw std::invalid_argument("form grid/degree mismatch");
    values_ += other.values_;
    return *this;
}

DiscreteForm& DiscreteForm::operator-=(const DiscreteForm& other)
{
    if (!compatible(other)) throw std::invalid_argument("form grid/degree mismatch");
    values_ -= other.values_;
    return *this;
}

DiscreteForm& DiscreteForm::operator*=(double s)
{
    values_ *= s;
    return *this;
}

SparseOperator build_d(const TorusGrid& grid, int p)
{
    const int n = grid.dim();
    if (p < 0 || p >= n) throw std::invalid_argument("build_d: degree out of range");
    const auto rows_masks = basis_masks(n, p + 1);
    const std::size_t row_comp = rows_masks.size();
    const std::size_t col_comp = binomial(n, p);

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(grid.site_count() * row_comp * (p + 1) * 2);
    for (std::size_t s = 0; s < grid.site_count(); ++s) {
        for (std::size_t r = 0; r < row_comp; ++r) {
            const AxisMask target = rows_masks[r];
            const auto row = static_cast<Eigen::Index>(s * row_comp + r);
            int position = 0;
            for (int axis = 0; axis < n; ++axis) {
                if (!(target & (AxisMask{1} << axis))) continue;
                const AxisMask source = target & ~(AxisMask{1} << axis);
                const double scale = (position % 2 == 0 ? 1.0 : -1.0) * grid.inverse_spacing(axis);
                const std::size_t comp = basis_position(n, source);
                const std::size_t ahead = grid.shifted(s, axis, 1);
                triplets.emplace_back(row, static_cast<Eigen::Index>(ahead * col_comp + comp), scale);
                triplets.emplace_back(row, static_cast<Eigen::Index>(s * col_comp + comp), -scale);
                ++position;
            }
        }
    }
    SparseOperator d(static_cast<Eigen::Index>(grid.cell_count(p + 1)),
                     static_cast<Eigen::Index>(grid.cell_count(p)));
    d.setFromTriplets(triplets.begin(), triplets.end());
    return d;
}

SparseOperator build_star(const TorusGrid& grid, int p)
{
    const int n = grid.dim();
    if (p < 0 || p > n) throw std::invalid_argument("build_star: degree out of range");
    const auto masks = basis_masks(n, p);
    const std::size_t in_comp = masks.size();
    const std::size_t out_comp = binomial(n, n - p);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(grid.cell_count(p));
    for (std::size_t s = 0; s < grid.site_count(); ++s) {
        for (std::size_t c = 0; c < in_comp; ++c) {
            const AxisMask dual = full_mask(n) & ~masks[c];
            triplets.emplace_back(static_cast<Eigen::Index>(s * out_comp + basis_position(n, dual)),
                                  static_cast<Eigen::Index>(s * in_comp + c),
                                  static_cast<double>(star_sign(n, masks[c])));
        }
    }
    SparseOperator star(static_cast<Eigen::Index>(grid.cell_count(n - p)),
                        static_cast<Eigen::Index>(grid.cell_count(p)));
    star.setFromTriplets(triplets.begin(), triplets.end());
    return star;
}

SparseOperator build_delta(const TorusGrid& grid, int p)
{
    if (p < 1 || p > grid.dim()) throw std::invalid_argument("build_delta: degree out of range");
    // W_{p-1}^{-1} d^T W_p with W = cell volume on every degree.
    return SparseOperator(build_d(grid, p - 1).transpose());
}

DiscreteForm exterior_derivative(const DiscreteForm& form)
{
    const SparseOperator d = build_d(form.grid(), form.degree());
    return {form.grid_ptr(), form.degree() + 1, d * form.values()};
}

DiscreteForm codifferential(const DiscreteForm& form)
{
    const SparseOperator delta = build_delta(form.grid(), form.degree());
    return {form.grid_ptr(), form.degree() - 1, delta * form.values()};
}

DiscreteForm hodge_star(const DiscreteForm& form)
{
    const SparseOperator star = build_star(form.grid(), form.degree());
    return {form.grid_ptr(), form.grid().dim() - form.degree(), star * form.values()};
}

DiscreteForm hodge_star_inverse(const DiscreteForm& form)
{
    // The star is a signed permutation, so its inverse is its transpose.
    const int p = form.grid().dim() - form.degree();
    const SparseOperator star = build_star(form.grid(), p);
    return {form.grid_ptr(), p, star.transpose() * form.values()};
}

double l2_inner(const DiscreteForm& a, const DiscreteForm& b)
{
    if (!a.compatible(b)) throw std::invalid_argument("l2_inner: grid/degree mismatch");
    return a.grid().cell_volume() * a.values().dot(b.values());
}

double l2_norm(const DiscreteForm& form)
{
    return std::sqrt(form.grid().cell_volume()) * form.values().norm();
}

double pairing(const DiscreteForm& rho, const DiscreteForm& omega)
{
    const TorusGrid& grid = rho.grid();
    const int n = grid.dim();
    if (!(grid == omega.grid())) throw std::invalid_argument("pairing: grid mismatch");
    if (rho.degree() + omega.degree() != n) throw std::invalid_argument("pairing: degrees not complementary");
    // rho ^ omega = <rho, star^{-1} omega> vol; star^{-1} omega_{I^c} lands on I with sign star_sign(I).
    const auto masks = basis_masks(n, rho.degree());
    std::vector<std::size_t> dual(masks.size());
    std::vector<double> sign(masks.size());
    for (std::size_t c = 0; c < masks.size(); ++c) {
        dual[c] = basis_position(n, full_mask(n) & ~masks[c]);
        sign[c] = star_sign(n, masks[c]);
    }
    double total = 0.0;
    for (std::size_t s = 0; s < grid.site_count(); ++s) {
        for (std::size_t c = 0; c < masks.size(); ++c) {
            total += sign[c] * rho.at(s, c) * omega.at(s, dual[c]);
        }
    }
    return total * grid.cell_volume();
}

} // namespace tvcycles
