#pragma once

// Total-variation energy E(omega) = integral |d omega| and its proximal map.
//
// |d omega| is evaluated per site: the C(n,p+1) components of d omega that
// share a base vertex are grouped and measured with the Euclidean norm.

#include "tvcycles/grid.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace tvcycles {

struct TVConfig {
    long inner_max_iters = 20000;
    double inner_tol = 1e-8;   ///< relative primal-dual gap
    double step_ratio = 0.9;   ///< dual step as a fraction of 1 / (h ||d||^2)

    void validate() const;
};

/// A (p+1)-form whose collocated site components lie in the unit ball.
using DualField = DiscreteForm;

double tv_energy(const DiscreteForm& omega);

/// Per-site Euclidean norms of the grouped components of `form`.
Eigen::VectorXd site_norms(const DiscreteForm& form);

struct DualEnergy {
    double value = 0.0;   ///< best pairing found, a lower bound on tv_energy
    double primal = 0.0;  ///< tv_energy for comparison
    double gap = 0.0;
    DualField field;
};

/// sup over unit dual fields of (delta q, omega), by projected ascent.
DualEnergy tv_energy_dual(const DiscreteForm& omega, int restarts = 4, std::uint64_t seed = 7);

/// Largest singular value of `op` from power iteration on op^T op.
double operator_norm_estimate(const SparseOperator& op, int iterations = 50);

struct ProxReport {
    DiscreteForm omega;
    DualField dual;
    double gap = 0.0;        ///< W-weighted primal-dual gap at exit
    double objective = 0.0;  ///< E(omega) + ||omega - omega_bar||^2 / (2h)
    long iterations = 0;
};

/// argmin E(omega) + ||omega - omega_bar||^2 / (2h). The result is
/// omega_bar - h * delta(dual) for a feasible dual field.
/// Throws SolverFailure when the gap does not close within inner_max_iters.
ProxReport prox_tv_detailed(const DiscreteForm& omega_bar, double h, const TVConfig& cfg = {},
                            const DualField* warm_start = nullptr);

DiscreteForm prox_tv(const DiscreteForm& omega_bar, double h, const TVConfig& cfg = {});

// Accelerated dual projected gradient for
//   min_x  sum_s |(D x)_s| + |x - center|^2 / (2h) + indicator_S(x)
// in unweighted coordinates. `project` maps onto the closed convex set S in
// place; leave it empty for S = everything. Shared by prox_tv and the
// cone-constrained step.
struct PrimalDualProblem {
    const SparseOperator* d = nullptr;
    const SparseOperator* dt = nullptr;
    std::size_t group = 1;             ///< dual components per site
    const Eigen::VectorXd* center = nullptr;
    double h = 1.0;
    double weight = 1.0;               ///< cell volume, converts to W units
    std::function<void(Eigen::VectorXd&)> project;
};

struct PrimalDualOptions {
    long max_iters = 20000;
    double gap_tol = 1e-8;
    double fixed_point_tol = 0.0;  ///< 0 disables the fixed-point test
    double step_ratio = 0.9;
    int check_every = 10;
};

struct PrimalDualResult {
    Eigen::VectorXd primal;  ///< P_S(center - h D^T dual)
    Eigen::VectorXd dual;
    double gap = 0.0;
    double objective = 0.0;
    double fixed_point_residual = 0.0;
    long iterations = 0;
    bool converged = false;
};

PrimalDualResult solve_tv_primal_dual(const PrimalDualProblem& problem, const PrimalDualOptions& options,
                                      const Eigen::VectorXd* warm_dual = nullptr);

/// Projects each group of `group` consecutive entries onto the unit ball.
void project_unit_balls(Eigen::VectorXd& field, std::size_t group);

} // namespace tvcycles
