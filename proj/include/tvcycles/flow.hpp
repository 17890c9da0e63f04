#pragma once

// Outer proximal loops
//   omega_{k+1} = argmin_{omega in C} E(omega) + ||omega - omega_k||^2 / (2h)
// with C = everything (unconstrained flow), C = the calibration cone at every
// site, or the cone intersected with {T_omega(phi) = 1}.

#include "tvcycles/cone.hpp"
#include "tvcycles/tvprox.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace tvcycles {

struct FlowConfig {
    double h = 1.0;
    long outer_max_iters = 500;
    double outer_tol = 1e-9;  ///< stop once ||omega_{k+1} - omega_k|| <= outer_tol (1 + ||omega_k||)
    TVConfig tv;
    long splitting_max_iters = 20000;
    double splitting_tol = 1e-8;
    bool normalize = false;

    void validate() const;
};

struct FlowRecord {
    long iter = 0;
    double tv_energy = 0.0;
    double step_norm = 0.0;
    std::vector<double> pairing_eta;
    std::vector<double> pairing_witness;
    double cone_residual = 0.0;
    double t_phi = 0.0;
    double omega_norm = 0.0;  ///< ||omega_k||, not written to the CSV
};

struct FlowTrace {
    std::size_t probe_count = 0;
    std::size_t witness_count = 0;
    std::vector<FlowRecord> records;

    /// Header: iter,tv_energy,step_norm,pairing_eta_<i>...,pairing_witness_<j>...,cone_residual,t_phi
    void write_csv(std::ostream& out) const;
    std::string csv() const;
};

enum class Termination { converged, max_iters, step_failure };

std::string_view to_string(Termination termination);

struct FlowResult {
    DiscreteForm omega_inf;
    FlowTrace trace;
    Termination termination = Termination::max_iters;
    long failed_iteration = 0;     ///< outer index k of the failing step
    std::string failure_message;
};

/// Iterates prox_tv. Probes must be closed forms of the same degree; their
/// pairings with omega_k are recorded and stay constant.
FlowResult prox_flow_unconstrained(const DiscreteForm& omega1, const FlowConfig& cfg,
                                   const std::vector<DiscreteForm>& probes = {});

struct ConstrainedStepReport {
    double gap = 0.0;
    double fixed_point_residual = 0.0;
    long iterations = 0;
};

/// One cone-constrained proximal step (normalized when cfg.normalize).
/// Throws SolverFailure when the splitting does not reach cfg.splitting_tol.
DiscreteForm prox_step_constrained(const DiscreteForm& omega_k, const ConeSpec& spec, const FlowConfig& cfg,
                                   ConstrainedStepReport* report = nullptr);

/// Cone-constrained flow. Witnesses are feasible closed forms; their pairings
/// with omega_k are recorded and do not decrease. omega1 need not be feasible:
/// the first step lands in the cone. With cfg.normalize the start is first
/// projected onto the normalized slice.
FlowResult prox_flow_constrained(const DiscreteForm& omega1, const ConeSpec& spec, const FlowConfig& cfg,
                                 const std::vector<DiscreteForm>& witnesses = {});

/// Mass of the boundary of the current T_omega, i.e. tv_energy(omega).
double boundary_mass(const DiscreteForm& omega);

} // namespace tvcycles
