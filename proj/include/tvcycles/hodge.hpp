#pragma once

// Discrete Hodge decomposition on the torus: p-forms split W-orthogonally
// into im d, im delta and the harmonic forms, which on T^n are exactly the
// constant-coefficient forms.

#include "tvcycles/grid.hpp"

namespace tvcycles {

/// Delta_p = d delta + delta d on p-cochains.
SparseOperator laplacian(const TorusGrid& grid, int p);

struct CgOptions {
    double tol = 1e-10;       ///< relative residual ||b - A x|| / ||b||
    long max_iters = 0;       ///< 0 selects 10 * (unknown count)
};

struct CgReport {
    long iterations = 0;
    double residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for a symmetric PSD operator and
/// a consistent right-hand side. Throws SolverFailure past max_iters.
Eigen::VectorXd conjugate_gradient(const SparseOperator& a, const Eigen::VectorXd& b,
                                   const CgOptions& options = {}, CgReport* report = nullptr);

/// Componentwise mean: the harmonic part on a flat torus.
DiscreteForm harmonic_projection(const DiscreteForm& omega);

struct HodgeSplit {
    DiscreteForm exact;
    DiscreteForm coexact;
    DiscreteForm harmonic;
    double reconstruction_residual = 0.0;  ///< ||omega - sum|| / ||omega||
    double orthogonality_residual = 0.0;   ///< max pairwise |(a,b)| / ||omega||^2
    long cg_iterations = 0;
};

HodgeSplit hodge_decompose(const DiscreteForm& omega, double cg_tol = 1e-10);

/// Projection onto ker d = im d + harmonic (exact plus harmonic parts).
DiscreteForm closed_projection(const DiscreteForm& omega, double cg_tol = 1e-10);

} // namespace tvcycles
