#include "tvcycles/tvprox.hpp"

#include "tvcycles/errors.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace tvcycles {

void TVConfig::validate() const
{
    if (!(inner_tol > 0)) throw std::invalid_argument("inner_tol must be positive");
    if (!(step_ratio > 0 && step_ratio < 1)) throw std::invalid_argument("step_ratio must lie in (0,1)");
    if (inner_max_iters < 1) throw std::invalid_argument("inner_max_iters must be positive");
}

void project_unit_balls(Eigen::VectorXd& field, std::size_t group)
{
    const auto g = static_cast<Eigen::Index>(group);
    const Eigen::Index sites = field.size() / g;
    for (Eigen::Index s = 0; s < sites; ++s) {
        auto block = field.segment(s * g, g);
        const double norm = block.norm();
        if (norm > 1.0) block /= norm;
    }
}

Eigen::VectorXd site_norms(const DiscreteForm& form)
{
    const auto g = static_cast<Eigen::Index>(form.components());
    const auto sites = static_cast<Eigen::Index>(form.grid().site_count());
    Eigen::VectorXd out(sites);
    for (Eigen::Index s = 0; s < sites; ++s) out[s] = form.values().segment(s * g, g).norm();
    return out;
}

double tv_energy(const DiscreteForm& omega)
{
    if (omega.degree() >= omega.grid().dim()) throw std::invalid_argument("tv_energy: degree must be < n");
    return omega.grid().cell_volume() * site_norms(exterior_derivative(omega)).sum();
}

DualEnergy tv_energy_dual(const DiscreteForm& omega, int restarts, std::uint64_t seed)
{
    if (omega.degree() >= omega.grid().dim()) {
        throw std::invalid_argument("tv_energy_dual: degree must be < n");
    }
    const TorusGrid& grid = omega.grid();
    const int p = omega.degree();
    const SparseOperator delta = build_delta(grid, p + 1);
    const DiscreteForm ascent = exterior_derivative(omega);  // gradient of the linear objective
    const std::size_t group = binomial(grid.dim(), p + 1);
    const double scale = ascent.values().lpNorm<Eigen::Infinity>();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);

    DualEnergy best{-std::numeric_limits<double>::infinity(), 0.0, 0.0, DualField(omega.grid_ptr(), p + 1)};
    best.primal = tv_energy(omega);
    for (int r = 0; r < std::max(restarts, 1); ++r) {
        Eigen::VectorXd q(ascent.values().size());
        for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = uniform(rng);
        project_unit_balls(q, group);
        const double step = scale > 0 ? 1.0 / scale : 1.0;
        for (int it = 0; it < 200; ++it) {
            Eigen::VectorXd next = q + step * ascent.values();
            project_unit_balls(next, group);
            const double change = (next - q).lpNorm<Eigen::Infinity>();
            q = std::move(next);
            if (change == 0.0) break;
        }
        // Evaluated through the codifferential: (delta q, omega)_W.
        const double value = grid.cell_volume() * (delta * q).dot(omega.values());
        if (value > best.value) {
            best.value = value;
            best.field = DualField(omega.grid_ptr(), p + 1, std::move(q));
        }
    }
    best.gap = best.primal - best.value;
    return best;
}

double operator_norm_estimate(const SparseOperator& op, int iterations)
{
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    Eigen::VectorXd v(op.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform(rng);
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd w = op * v;
        Eigen::VectorXd u = op.transpose() * w;
        const double un = u.norm();
        if (un == 0.0) return 0.0;
        estimate = std::sqrt(un);
        v = u / un;
    }
    return estimate;
}

PrimalDualResult solve_tv_primal_dual(const PrimalDualProblem& problem, const PrimalDualOptions& options,
                                      const Eigen::VectorXd* warm_dual)
{
    const SparseOperator& d = *problem.d;
    const SparseOperator& dt = *problem.dt;
    const Eigen::VectorXd& center = *problem.center;
    const double h = problem.h;
    const auto group = static_cast<Eigen::Index>(problem.group);
    const Eigen::Index sites = d.rows() / group;

    PrimalDualResult result;
    Eigen::VectorXd y = warm_dual ? *warm_dual : Eigen::VectorXd::Zero(d.rows());
    Eigen::VectorXd x = center;
    if (problem.project) problem.project(x);
    Eigen::VectorXd w(x.size());
    Eigen::VectorXd g(d.rows());
    Eigen::VectorXd previous_output;

    // Output candidate and certificate for the current dual field.
    auto evaluate = [&]() {
        w = center - h * (dt * y);
        if (problem.project) problem.project(w);
        g.noalias() = d * w;
        double tv = 0.0;
        double paired = 0.0;
        for (Eigen::Index s = 0; s < sites; ++s) {
            tv += g.segment(s * group, group).norm();
            paired += g.segment(s * group, group).dot(y.segment(s * group, group));
        }
        result.gap = problem.weight * std::max(tv - paired, 0.0);
        result.objective = problem.weight * (tv + (w - center).squaredNorm() / (2.0 * h));
        result.fixed_point_residual =
            previous_output.size() == w.size()
                ? (w - previous_output).norm() / (1.0 + w.norm())
                : std::numeric_limits<double>::infinity();
        previous_output = w;
        const bool gap_ok = result.gap <= options.gap_tol * (1.0 + std::abs(result.objective));
        const bool fixed_ok = options.fixed_point_tol <= 0 || result.fixed_point_residual <= options.fixed_point_tol ||
                              result.gap == 0.0;
        return gap_ok && fixed_ok;
    };

    const double norm_d = operator_norm_estimate(d);
    if (norm_d == 0.0 || evaluate()) {
        result.primal = w;
        result.dual = y;
        result.converged = true;
        return result;
    }

    // Accelerated projected gradient on the dual, which is smooth with
    // Lipschitz constant h ||D||^2. Momentum restarts when it stops helping.
    const double step = options.step_ratio / (h * norm_d * norm_d);
    Eigen::VectorXd z = y;
    Eigen::VectorXd y_prev = y;
    double t = 1.0;
    long it = 0;
    for (; it < options.max_iters; ++it) {
        x = center - h * (dt * z);
        if (problem.project) problem.project(x);
        y_prev = y;
        y = z + step * (d * x);
        for (Eigen::Index s = 0; s < sites; ++s) {
            auto block = y.segment(s * group, group);
            const double norm = block.norm();
            if (norm > 1.0) block /= norm;
        }
        if ((z - y).dot(y - y_prev) > 0) {
            t = 1.0;
            z = y;
        } else {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            z = y + ((t - 1.0) / t_next) * (y - y_prev);
            t = t_next;
        }

        if ((it + 1) % options.check_every == 0 && evaluate()) {
            ++it;
            result.converged = true;
            break;
        }
    }
    if (!result.converged) evaluate();
    result.iterations = it;
    result.primal = w;
    result.dual = std::move(y);
    return result;
}

ProxReport prox_tv_detailed(const DiscreteForm& omega_bar, double h, const TVConfig& cfg,
                            const DualField* warm_start)
{
    cfg.validate();
    if (!(h > 0)) throw std::invalid_argument("prox_tv: h must be positive");
    const TorusGrid& grid = omega_bar.grid();
    const int p = omega_bar.degree();
    if (p >= grid.dim()) throw std::invalid_argument("prox_tv: degree must be < n");

    const SparseOperator d = build_d(grid, p);
    const SparseOperator dt = d.transpose();
    PrimalDualProblem problem;
    problem.d = &d;
    problem.dt = &dt;
    problem.group = binomial(grid.dim(), p + 1);
    problem.center = &omega_bar.values();
    problem.h = h;
    problem.weight = grid.cell_volume();

    PrimalDualOptions options;
    options.max_iters = cfg.inner_max_iters;
    options.gap_tol = cfg.inner_tol;
    options.step_ratio = cfg.step_ratio;

    const Eigen::VectorXd* warm = nullptr;
    if (warm_start) {
        if (warm_start->degree() != p + 1 || !(warm_start->grid() == grid)) {
            throw std::invalid_argument("prox_tv: warm start has the wrong shape");
        }
        warm = &warm_start->values();
    }
    PrimalDualResult solved = solve_tv_primal_dual(problem, options, warm);
    if (!solved.converged) {
        throw SolverFailure("prox_tv: primal-dual gap " + std::to_string(solved.gap) + " after " +
                                std::to_string(solved.iterations) + " iterations",
                            solved.gap, solved.iterations);
    }
    return {DiscreteForm(omega_bar.grid_ptr(), p, std::move(solved.primal)),
            DualField(omega_bar.grid_ptr(), p + 1, std::move(solved.dual)), solved.gap, solved.objective,
            solved.iterations};
}

DiscreteForm prox_tv(const DiscreteForm& omega_bar, double h, const TVConfig& cfg)
{
    return prox_tv_detailed(omega_bar, h, cfg).omega;
}

} // namespace tvcycles
