#include "tvcycles/flow.hpp"

#include "tvcycles/errors.hpp"

#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tvcycles {

void FlowConfig::validate() const
{
    if (!(h > 0) || !std::isfinite(h)) throw std::invalid_argument("flow: h must be positive");
    if (outer_max_iters < 1) throw std::invalid_argument("flow: outer_max_iters must be positive");
    if (!(outer_tol > 0)) throw std::invalid_argument("flow: outer_tol must be positive");
    if (splitting_max_iters < 1) throw std::invalid_argument("flow: splitting_max_iters must be positive");
    if (!(splitting_tol > 0)) throw std::invalid_argument("flow: splitting_tol must be positive");
    tv.validate();
}

void FlowTrace::write_csv(std::ostream& out) const
{
    out << "iter,tv_energy,step_norm";
    for (std::size_t i = 0; i < probe_count; ++i) out << ",pairing_eta_" << i;
    for (std::size_t j = 0; j < witness_count; ++j) out << ",pairing_witness_" << j;
    out << ",cone_residual,t_phi\n";
    const auto old_precision = out.precision(17);
    for (const FlowRecord& r : records) {
        out << r.iter << ',' << r.tv_energy << ',' << r.step_norm;
        for (double v : r.pairing_eta) out << ',' << v;
        for (double v : r.pairing_witness) out << ',' << v;
        out << ',' << r.cone_residual << ',' << r.t_phi << '\n';
    }
    out.precision(old_precision);
}

std::string FlowTrace::csv() const
{
    std::ostringstream out;
    write_csv(out);
    return out.str();
}

std::string_view to_string(Termination termination)
{
    switch (termination) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::step_failure: return "step_failure";
    }
    return "unknown";
}

double boundary_mass(const DiscreteForm& omega)
{
    return tv_energy(omega);
}

namespace {

void check_companions(const DiscreteForm& omega, const std::vector<DiscreteForm>& forms, const char* what)
{
    for (const DiscreteForm& f : forms) {
        if (!f.compatible(omega)) throw std::invalid_argument(std::string(what) + " must match the grid and degree");
        if (tv_energy(f) > 1e-8 * (1.0 + l2_norm(f))) {
            throw std::invalid_argument(std::string(what) + " must be closed");
        }
    }
}

std::vector<double> pairings(const std::vector<DiscreteForm>& forms, const DiscreteForm& omega)
{
    std::vector<double> out;
    out.reserve(forms.size());
    for (const DiscreteForm& f : forms) out.push_back(l2_inner(f, omega));
    return out;
}

// Shared outer loop; `step` maps omega_k to omega_{k+1}, `annotate` fills
// the cone columns of a record.
template <class Step, class Annotate>
FlowResult run_flow(DiscreteForm omega, const FlowConfig& cfg, const std::vector<DiscreteForm>& probes,
                    const std::vector<DiscreteForm>& witnesses, Step&& step, Annotate&& annotate)
{
    FlowResult result{omega, {}, Termination::max_iters, 0, {}};
    result.trace.probe_count = probes.size();
    result.trace.witness_count = witnesses.size();

    auto record = [&](long k, const DiscreteForm& current, double step_norm) {
        FlowRecord r;
        r.iter = k;
        r.tv_energy = tv_energy(current);
        r.step_norm = step_norm;
        r.omega_norm = l2_norm(current);
        r.pairing_eta = pairings(probes, current);
        r.pairing_witness = pairings(witnesses, current);
        annotate(current, r);
        result.trace.records.push_back(std::move(r));
    };

    record(1, omega, 0.0);
    for (long k = 1; k <= cfg.outer_max_iters; ++k) {
        std::optional<DiscreteForm> next;
        try {
            next = step(omega);
        } catch (const SolverFailure& failure) {
            result.termination = Termination::step_failure;
            result.failed_iteration = k;
            result.failure_message = "step " + std::to_string(k) + ": " + failure.what();
            break;
        }
        const double norm = l2_norm(omega);
        const double step_norm = l2_norm(*next - omega);
        omega = std::move(*next);
        record(k + 1, omega, step_norm);
        if (step_norm <= cfg.outer_tol * (1.0 + norm)) {
            result.termination = Termination::converged;
            break;
        }
    }
    result.omega_inf = std::move(omega);
    return result;
}

} // namespace

FlowResult prox_flow_unconstrained(const DiscreteForm& omega1, const FlowConfig& cfg,
                                   const std::vector<DiscreteForm>& probes)
{
    cfg.validate();
    if (omega1.degree() >= omega1.grid().dim()) throw std::invalid_argument("flow: degree must be < n");
    check_companions(omega1, probes, "probes");
    return run_flow(
        omega1, cfg, probes, {}, [&](const DiscreteForm& current) { return prox_tv(current, cfg.h, cfg.tv); },
        [](const DiscreteForm&, FlowRecord&) {});
}

DiscreteForm prox_step_constrained(const DiscreteForm& omega_k, const ConeSpec& spec, const FlowConfig& cfg,
                                   ConstrainedStepReport* report)
{
    cfg.validate();
    const TorusGrid& grid = omega_k.grid();
    const int p = omega_k.degree();
    if (grid.dim() != spec.dim() || p != spec.degree()) {
        throw std::invalid_argument("prox_step_constrained: form degree must be n - k");
    }
    if (p >= grid.dim()) throw std::invalid_argument("prox_step_constrained: degree must be < n");

    const SparseOperator d = build_d(grid, p);
    const SparseOperator dt = d.transpose();
    PrimalDualProblem problem;
    problem.d = &d;
    problem.dt = &dt;
    problem.group = binomial(grid.dim(), p + 1);
    problem.center = &omega_k.values();
    problem.h = cfg.h;
    problem.weight = grid.cell_volume();
    if (cfg.normalize) {
        problem.project = [&spec, &grid](Eigen::VectorXd& x) { project_cone_normalized(spec, grid, x); };
    } else {
        problem.project = [&spec](Eigen::VectorXd& x) { project_cone_sites(spec, x); };
    }

    PrimalDualOptions options;
    options.max_iters = cfg.splitting_max_iters;
    options.gap_tol = cfg.splitting_tol;
    options.fixed_point_tol = cfg.splitting_tol;
    options.step_ratio = cfg.tv.step_ratio;

    PrimalDualResult solved = solve_tv_primal_dual(problem, options);
    if (report) *report = {solved.gap, solved.fixed_point_residual, solved.iterations};
    if (!solved.converged) {
        throw SolverFailure("constrained step: gap " + std::to_string(solved.gap) + ", fixed-point residual " +
                                std::to_string(solved.fixed_point_residual) + " after " +
                                std::to_string(solved.iterations) + " iterations",
                            solved.gap, solved.iterations);
    }
    return {omega_k.grid_ptr(), p, std::move(solved.primal)};
}

FlowResult prox_flow_constrained(const DiscreteForm& omega1, const ConeSpec& spec, const FlowConfig& cfg,
                                 const std::vector<DiscreteForm>& witnesses)
{
    cfg.validate();
    if (omega1.grid().dim() != spec.dim() || omega1.degree() != spec.degree()) {
        throw std::invalid_argument("prox_flow_constrained: form degree must be n - k");
    }
    check_companions(omega1, witnesses, "witnesses");
    for (const DiscreteForm& w : witnesses) {
        if (cone_residual(spec, w).max_site_distance > 1e-8 * (1.0 + w.values().lpNorm<Eigen::Infinity>())) {
            throw std::invalid_argument("witnesses must lie in the cone");
        }
    }
    DiscreteForm start = omega1;
    if (cfg.normalize) project_cone_normalized(spec, start.grid(), start.values());
    return run_flow(
        std::move(start), cfg, {}, witnesses,
        [&](const DiscreteForm& current) { return prox_step_constrained(current, spec, cfg); },
        [&](const DiscreteForm& current, FlowRecord& r) {
            r.cone_residual = cone_residual(spec, current).max_site_distance;
            r.t_phi = transversal_pairing(spec.calibration, current);
        });
}

} // namespace tvcycles
