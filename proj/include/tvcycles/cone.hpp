#pragma once

// Constant-coefficient calibrations phi (degree k) and the pointwise cones
//   Lambda_phi = { w in Lambda^{n-k} : phi ^ w = mass(w) vol }.
// phi ^ w = <star phi, w> vol, so the cone is the set of (n-k)-vectors whose
// mass is attained by pairing with star(phi).

#include "tvcycles/grid.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tvcycles {

struct Calibration {
    std::string name;
    KVector coeffs;

    int dim() const { return coeffs.dim(); }
    int degree() const { return coeffs.degree(); }
    /// Degree of the forms the cone lives in, n - k.
    int cone_degree() const { return dim() - degree(); }
};

Calibration volume_calibration(int n);
/// phi = e_I for a 0-based axis set.
Calibration axis_calibration(int n, MultiIndex axes);
/// phi = e_12 + e_34 on R^4 (1-based labels).
Calibration kahler4_calibration();
/// Any constant form with comass <= 1 + 1e-9; throws std::invalid_argument otherwise.
Calibration custom_calibration(std::string name, const KVector& phi);

/// Parses "volume", "axis:1,2" (1-based) or "kahler4" for dimension n.
Calibration make_calibration(std::string_view preset, int n);

enum class ConeKind { nonneg_function, decomposable_ray, kahler_t4, polyhedral_sampled };

std::string_view to_string(ConeKind kind);

struct ConeSpec {
    Calibration calibration;
    ConeKind kind = ConeKind::polyhedral_sampled;
    KVector direction;               ///< star(phi); the cone ray for decomposable_ray
    Eigen::MatrixXd rays;            ///< polyhedral_sampled: unit calibrated simple vectors as columns

    int dim() const { return calibration.dim(); }
    int degree() const { return calibration.cone_degree(); }
    std::size_t components() const { return direction.size(); }
};

/// Picks the exact kind when one applies and falls back to sampled rays.
ConeSpec make_cone(const Calibration& calibration);

/// Inner approximation spanned by `ray_count` calibrated planes found by
/// Grassmannian ascent on star(phi).
ConeSpec make_polyhedral_cone(const Calibration& calibration, int ray_count = 2000,
                              std::uint64_t seed = 0xc0ffee);

KVector project_cone_point(const ConeSpec& spec, const KVector& w);
/// Euclidean distance from w to the cone.
double cone_residual_point(const ConeSpec& spec, const KVector& w);
/// |<star phi, w> - mass(w)|, zero exactly on the cone.
double calibration_defect(const ConeSpec& spec, const KVector& w);

/// Projects every site block of a stacked site-major coefficient vector.
void project_cone_sites(const ConeSpec& spec, Eigen::VectorXd& values);

DiscreteForm project_cone_form(const ConeSpec& spec, const DiscreteForm& omega);

struct ConeResidualReport {
    double max_site_distance = 0.0;
    double mean_site_distance = 0.0;
    std::size_t worst_site = 0;
};

ConeResidualReport cone_residual(const ConeSpec& spec, const DiscreteForm& omega);

/// T_omega(phi) = integral of phi ^ omega.
double transversal_pairing(const Calibration& calibration, const DiscreteForm& omega);

/// kappa with int|omega| <= T_omega(phi) <= kappa int|omega| (Euclidean |.|)
/// for every feasible omega.
double transversal_constant(const ConeSpec& spec);

/// Projection onto {omega feasible at every site, T_omega(phi) = 1}, in place
/// on the coefficient vector of a form over `grid`. Throws
/// std::invalid_argument if the cone is trivial.
void project_cone_normalized(const ConeSpec& spec, const TorusGrid& grid, Eigen::VectorXd& values);

/// Random feasible field, deterministic per seed.
DiscreteForm sample_calibrated(const ConeSpec& spec, GridPtr grid, std::uint64_t seed);

/// Nonnegative least squares min |A x - b|, x >= 0 (Lawson-Hanson active set).
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iters = 0);

} // namespace tvcycles
