#include "tvcycles/hodge.hpp"

#include "tvcycles/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace tvcycles {

SparseOperator laplacian(const TorusGrid& grid, int p)
{
    const int n = grid.dim();
    if (p < 0 || p > n) throw std::invalid_argument("laplacian: degree out of range");
    const auto cells = static_cast<Eigen::Index>(grid.cell_count(p));
    SparseOperator lap(cells, cells);
    if (p < n) {
        const SparseOperator d = build_d(grid, p);
        lap = SparseOperator(build_delta(grid, p + 1) * d);
    }
    if (p > 0) {
        const SparseOperator delta = build_delta(grid, p);
        lap += SparseOperator(build_d(grid, p - 1) * delta);
    }
    // Mixed-axis terms of d delta and delta d cancel exactly.
    lap.prune(0.0);
    return lap;
}

Eigen::VectorXd conjugate_gradient(const SparseOperator& a, const Eigen::VectorXd& b,
                                   const CgOptions& options, CgReport* report)
{
    const Eigen::Index size = b.size();
    const long max_iters = options.max_iters > 0 ? options.max_iters : 10 * static_cast<long>(size);
    Eigen::VectorXd inv_diag = a.diagonal();
    for (Eigen::Index i = 0; i < size; ++i) inv_diag[i] = inv_diag[i] > 0 ? 1.0 / inv_diag[i] : 1.0;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(size);
    const double b_norm = b.norm();
    CgReport local;
    if (b_norm == 0.0) {
        if (report) *report = local;
        return x;
    }
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    Eigen::VectorXd ap(size);
    double rz = r.dot(z);
    double rel = 1.0;
    long it = 0;
    for (; it < max_iters; ++it) {
        rel = r.norm() / b_norm;
        if (rel <= options.tol) break;
        ap.noalias() = a * p;
        const double curvature = p.dot(ap);
        if (!(curvature > 0)) break;
        const double alpha = rz / curvature;
        x.noalias() += alpha * p;
        r.noalias() -= alpha * ap;
        z = inv_diag.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    // Recompute the true residual; the recursive one drifts.
    rel = (b - a * x).norm() / b_norm;
    local.iterations = it;
    local.residual = rel;
    if (report) *report = local;
    if (rel > options.tol * 10.0) {
        throw SolverFailure("conjugate gradients did not reach tolerance (relative residual " +
                                std::to_string(rel) + " after " + std::to_string(it) + " iterations)",
                            rel, it);
    }
    return x;
}

DiscreteForm harmonic_projection(const DiscreteForm& omega)
{
    const std::size_t sites = omega.grid().site_count();
    const std::size_t comps = omega.components();
    KVector mean(omega.grid().dim(), omega.degree());
    for (std::size_t s = 0; s < sites; ++s) {
        for (std::size_t c = 0; c < comps; ++c) mean.coeffs()[c] += omega.at(s, c);
    }
    mean *= 1.0 / static_cast<double>(sites);
    return DiscreteForm::constant(omega.grid_ptr(), mean);
}

namespace {

// Solves Delta u = rhs for a right-hand side orthogonal to the harmonic forms.
DiscreteForm solve_laplacian(const DiscreteForm& rhs, double cg_tol, long& iterations)
{
    DiscreteForm centered = rhs - harmonic_projection(rhs);
    const SparseOperator lap = laplacian(rhs.grid(), rhs.degree());
    CgOptions options;
    options.tol = cg_tol;
    CgReport report;
    Eigen::VectorXd u = conjugate_gradient(lap, centered.values(), options, &report);
    iterations += report.iterations;
    return {rhs.grid_ptr(), rhs.degree(), std::move(u)};
}

DiscreteForm exact_part(const DiscreteForm& omega, double cg_tol, long& iterations)
{
    if (omega.degree() == 0) return {omega.grid_ptr(), 0};
    const DiscreteForm potential = solve_laplacian(codifferential(omega), cg_tol, iterations);
    return exterior_derivative(potential);
}

DiscreteForm coexact_part(const DiscreteForm& omega, double cg_tol, long& iterations)
{
    if (omega.degree() == omega.grid().dim()) return {omega.grid_ptr(), omega.degree()};
    const DiscreteForm potential = solve_laplacian(exterior_derivative(omega), cg_tol, iterations);
    return codifferential(potential);
}

} // namespace

HodgeSplit hodge_decompose(const DiscreteForm& omega, double cg_tol)
{
    if (!(cg_tol > 0)) throw std::invalid_argument("hodge_decompose: cg_tol must be positive");
    long iterations = 0;
    DiscreteForm exact = exact_part(omega, cg_tol, iterations);
    DiscreteForm coexact = coexact_part(omega, cg_tol, iterations);
    DiscreteForm harmonic = harmonic_projection(omega);

    HodgeSplit split{std::move(exact), std::move(coexact), std::move(harmonic)};
    split.cg_iterations = iterations;
    const double norm = l2_norm(omega);
    if (norm > 0) {
        const DiscreteForm rest = omega - split.exact - split.coexact - split.harmonic;
        split.reconstruction_residual = l2_norm(rest) / norm;
        const double sq = norm * norm;
        split.orthogonality_residual =
            std::max({std::abs(l2_inner(split.exact, split.coexact)),
                      std::abs(l2_inner(split.exact, split.harmonic)),
                      std::abs(l2_inner(split.coexact, split.harmonic))}) /
            sq;
    }
    return split;
}

DiscreteForm closed_projection(const DiscreteForm& omega, double cg_tol)
{
    if (!(cg_tol > 0)) throw std::invalid_argument("closed_projection: cg_tol must be positive");
    long iterations = 0;
    return exact_part(omega, cg_tol, iterations) + harmonic_projection(omega);
}

} // namespace tvcycles
