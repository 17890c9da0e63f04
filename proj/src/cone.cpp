#include "tvcycles/cone.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace tvcycles {

namespace {

// Lexicographic positions of the 2-vector basis on R^4.
constexpr int k01 = 0, k02 = 1, k03 = 2, k12 = 3, k13 = 4, k23 = 5;

// (1,1) forms of the Kahler form e01 + e23, written as a 2x2 Hermitian
// matrix [[a, b + ic], [b - ic, d]]:
//   omega_H = a e01 + d e23 + b (e03 - e12) - c (e02 + e13).
// The map is an isometry onto its image (Frobenius norm on H).
struct Hermitian2 {
    double a, d, b, c;
};

Hermitian2 kahler_coordinates(const double* w)
{
    return {w[k01], w[k23], 0.5 * (w[k03] - w[k12]), -0.5 * (w[k02] + w[k13])};
}

void kahler_write(const Hermitian2& h, double* w)
{
    w[k01] = h.a;
    w[k23] = h.d;
    w[k03] = h.b;
    w[k12] = -h.b;
    w[k02] = -h.c;
    w[k13] = -h.c;
}

Hermitian2 clip_psd(const Hermitian2& h)
{
    const double mean = 0.5 * (h.a + h.d);
    const double half_diff = 0.5 * (h.a - h.d);
    const double radius = std::sqrt(half_diff * half_diff + h.b * h.b + h.c * h.c);
    const double top = mean + radius;
    if (mean - radius >= 0) return h;
    if (top <= 0) return {0, 0, 0, 0};
    // top * v v^*, with v v^* = (I + (H - mean I) / radius) / 2.
    const double s = 0.5 * top / radius;
    return {s * (radius + half_diff), s * (radius - half_diff), s * h.b, s * h.c};
}

void project_block(const ConeSpec& spec, double* w)
{
    const std::size_t m = spec.components();
    switch (spec.kind) {
    case ConeKind::nonneg_function:
        w[0] = std::max(w[0], 0.0);
        return;
    case ConeKind::decomposable_ray: {
        const auto& ray = spec.direction.coeffs();
        double t = 0.0;
        for (std::size_t i = 0; i < m; ++i) t += w[i] * ray[i];
        t = std::max(t, 0.0);
        for (std::size_t i = 0; i < m; ++i) w[i] = t * ray[i];
        return;
    }
    case ConeKind::kahler_t4:
        kahler_write(clip_psd(kahler_coordinates(w)), w);
        return;
    case ConeKind::polyhedral_sampled: {
        Eigen::Map<Eigen::VectorXd> block(w, static_cast<Eigen::Index>(m));
        if (spec.rays.cols() == 0) {
            block.setZero();
            return;
        }
        const Eigen::VectorXd target = block;
        block = spec.rays * nnls(spec.rays, target);
        return;
    }
    }
}

void check_degree(const ConeSpec& spec, const KVector& w)
{
    if (w.dim() != spec.dim() || w.degree() != spec.degree()) {
        throw std::invalid_argument("cone: expected a " + std::to_string(spec.degree()) + "-vector in dimension " +
                                    std::to_string(spec.dim()));
    }
}

void check_form(const ConeSpec& spec, const DiscreteForm& omega)
{
    if (omega.grid().dim() != spec.dim() || omega.degree() != spec.degree()) {
        throw std::invalid_argument("cone: form degree must be n - k = " + std::to_string(spec.degree()));
    }
}

double site_pairing(const Eigen::VectorXd& values, const KVector& direction)
{
    const auto m = static_cast<Eigen::Index>(direction.size());
    const auto a = direction.as_eigen();
    double total = 0.0;
    for (Eigen::Index s = 0; s < values.size() / m; ++s) total += a.dot(values.segment(s * m, m));
    return total;
}

} // namespace

Calibration volume_calibration(int n)
{
    return {"volume", KVector::basis(n, full_mask(n))};
}

Calibration axis_calibration(int n, MultiIndex axes)
{
    if (axes.mask() & ~full_mask(n)) throw std::invalid_argument("axis calibration: axis out of range");
    return {"axis", KVector::basis(n, axes.mask())};
}

Calibration kahler4_calibration()
{
    return {"kahler4", KVector::parse(4, "e12+e34")};
}

Calibration custom_calibration(std::string name, const KVector& phi)
{
    const NormValue comass = comass_norm(phi);
    if (comass.value > 1.0 + 1e-9) {
        throw std::invalid_argument("calibration must have comass <= 1 (got " + std::to_string(comass.value) + ")");
    }
    return {std::move(name), phi};
}

Calibration make_calibration(std::string_view preset, int n)
{
    if (preset == "volume") return volume_calibration(n);
    if (preset == "kahler4") {
        if (n != 4) throw std::invalid_argument("kahler4 needs n = 4");
        return kahler4_calibration();
    }
    if (preset.substr(0, 5) == "axis:") {
        std::vector<int> axes;
        std::string_view rest = preset.substr(5);
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const std::string_view item = rest.substr(0, comma);
            int axis = 0;
            const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), axis);
            if (ec != std::errc() || end != item.data() + item.size() || axis < 1 || axis > n) {
                throw std::invalid_argument("axis calibration: bad axis '" + std::string(item) + "'");
            }
            axes.push_back(axis - 1);
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        if (axes.empty()) throw std::invalid_argument("axis calibration needs at least one axis");
        return axis_calibration(n, MultiIndex(n, axes));
    }
    throw std::invalid_argument("unknown calibration preset '" + std::string(preset) + "'");
}

std::string_view to_string(ConeKind kind)
{
    switch (kind) {
    case ConeKind::nonneg_function: return "nonneg-function";
    case ConeKind::decomposable_ray: return "decomposable-ray";
    case ConeKind::kahler_t4: return "kahler-T4";
    case ConeKind::polyhedral_sampled: return "polyhedral-sampled";
    }
    return "unknown";
}

ConeSpec make_cone(const Calibration& calibration)
{
    const KVector& phi = calibration.coeffs;
    ConeSpec spec{calibration, ConeKind::polyhedral_sampled, star_alg(phi), {}};
    const int n = phi.dim();
    if (phi.degree() == n && phi.coeffs()[0] == 1.0) {
        spec.kind = ConeKind::nonneg_function;
        return spec;
    }
    if (n == 4 && phi.degree() == 2 && euclid_norm(phi - kahler4_calibration().coeffs) == 0.0) {
        spec.kind = ConeKind::kahler_t4;
        return spec;
    }
    if (std::abs(euclid_norm(phi) - 1.0) <= 1e-12 && is_decomposable(phi) == Decomposability::decomposable) {
        spec.kind = ConeKind::decomposable_ray;
        return spec;
    }
    return make_polyhedral_cone(calibration);
}

ConeSpec make_polyhedral_cone(const Calibration& calibration, int ray_count, std::uint64_t seed)
{
    if (ray_count < 1) throw std::invalid_argument("polyhedral cone needs at least one ray");
    ConeSpec spec{calibration, ConeKind::polyhedral_sampled, star_alg(calibration.coeffs), {}};
    const int degree = spec.degree();
    if (degree < 1) throw std::invalid_argument("polyhedral cone needs cone degree >= 1");
    std::vector<KVector> found;
    GrassmannOptions options;
    options.restarts = 1;
    for (int attempt = 0; attempt < 4 * ray_count && static_cast<int>(found.size()) < ray_count; ++attempt) {
        options.seed = seed + static_cast<std::uint64_t>(attempt);
        const GrassmannAscent ascent = grassmann_ascent(spec.direction, options);
        // Only planes calibrated to 1e-9 belong to the cone.
        if (ascent.value >= 1.0 - 1e-9) found.push_back(wedge_columns(ascent.frame));
    }
    spec.rays.resize(static_cast<Eigen::Index>(spec.components()), static_cast<Eigen::Index>(found.size()));
    for (std::size_t j = 0; j < found.size(); ++j) spec.rays.col(static_cast<Eigen::Index>(j)) = found[j].as_eigen();
    return spec;
}

KVector project_cone_point(const ConeSpec& spec, const KVector& w)
{
    check_degree(spec, w);
    KVector out = w;
    project_block(spec, out.coeffs().data());
    return out;
}

double cone_residual_point(const ConeSpec& spec, const KVector& w)
{
    return euclid_norm(w - project_cone_point(spec, w));
}

double calibration_defect(const ConeSpec& spec, const KVector& w)
{
    check_degree(spec, w);
    return std::abs(inner(spec.direction, w) - mass_norm(w).value);
}

void project_cone_sites(const ConeSpec& spec, Eigen::VectorXd& values)
{
    const auto m = static_cast<Eigen::Index>(spec.components());
    if (values.size() % m != 0) throw std::invalid_argument("cone: coefficient count is not a multiple of the block size");
    for (Eigen::Index s = 0; s < values.size() / m; ++s) project_block(spec, values.data() + s * m);
}

DiscreteForm project_cone_form(const ConeSpec& spec, const DiscreteForm& omega)
{
    check_form(spec, omega);
    DiscreteForm out = omega;
    project_cone_sites(spec, out.values());
    return out;
}

ConeResidualReport cone_residual(const ConeSpec& spec, const DiscreteForm& omega)
{
    check_form(spec, omega);
    const auto m = static_cast<Eigen::Index>(spec.components());
    ConeResidualReport report;
    Eigen::VectorXd block(m);
    double total = 0.0;
    const std::size_t sites = omega.grid().site_count();
    for (std::size_t s = 0; s < sites; ++s) {
        const auto original = omega.values().segment(static_cast<Eigen::Index>(s) * m, m);
        block = original;
        project_block(spec, block.data());
        const double dist = (block - original).norm();
        total += dist;
        if (dist > report.max_site_distance) {
            report.max_site_distance = dist;
            report.worst_site = s;
        }
    }
    report.mean_site_distance = total / static_cast<double>(sites);
    return report;
}

double transversal_pairing(const Calibration& calibration, const DiscreteForm& omega)
{
    if (omega.grid().dim() != calibration.dim() || omega.degree() != calibration.cone_degree()) {
        throw std::invalid_argument("transversal_pairing: degrees are not complementary");
    }
    return omega.grid().cell_volume() * site_pairing(omega.values(), star_alg(calibration.coeffs));
}

double transversal_constant(const ConeSpec& spec)
{
    return std::max(1.0, euclid_norm(spec.calibration.coeffs));
}

void project_cone_normalized(const ConeSpec& spec, const TorusGrid& grid, Eigen::VectorXd& values)
{
    const double vol = grid.cell_volume();
    const KVector& a = spec.direction;
    const auto m = static_cast<Eigen::Index>(a.size());
    const Eigen::Index sites = values.size() / m;
    if (spec.kind == ConeKind::polyhedral_sampled && spec.rays.cols() == 0) {
        throw std::invalid_argument("normalization impossible: the cone is {0}");
    }
    // omega(lambda) = P_K(z - lambda a) sitewise; T(omega(lambda)) is nonincreasing in lambda.
    const Eigen::VectorXd z = values;
    Eigen::VectorXd trial(values.size());
    auto shifted = [&](double lambda) {
        trial = z;
        for (Eigen::Index s = 0; s < sites; ++s) trial.segment(s * m, m) -= lambda * a.as_eigen();
        project_cone_sites(spec, trial);
        return vol * site_pairing(trial, a);
    };
    const double scale = std::max(1.0, z.lpNorm<Eigen::Infinity>()) / std::max(a.as_eigen().squaredNorm(), 1e-300);
    double lo = 0.0;
    double hi = 0.0;
    double step = scale;
    if (shifted(0.0) > 1.0) {
        while (shifted(hi + step) > 1.0) {
            hi += step;
            step *= 2.0;
        }
        lo = hi;
        hi += step;
    } else {
        while (shifted(lo - step) < 1.0) {
            lo -= step;
            step *= 2.0;
            if (!std::isfinite(step)) throw std::invalid_argument("normalization impossible: cone pairing stays below 1");
        }
        hi = lo;
        lo -= step;
    }
    for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (shifted(mid) > 1.0 ? lo : hi) = mid;
    }
    const double t = shifted(0.5 * (lo + hi));
    if (!(t > 0)) throw std::invalid_argument("normalization impossible: zero pairing at the solution");
    // Rescaling keeps cone feasibility and removes the bisection remainder.
    values = trial / t;
}

DiscreteForm sample_calibrated(const ConeSpec& spec, GridPtr grid, std::uint64_t seed)
{
    if (grid->dim() != spec.dim()) throw std::invalid_argument("sample_calibrated: grid dimension mismatch");
    DiscreteForm out(grid, spec.degree());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    const auto m = static_cast<Eigen::Index>(spec.components());
    for (std::size_t s = 0; s < grid->site_count(); ++s) {
        double* w = out.values().data() + static_cast<Eigen::Index>(s) * m;
        switch (spec.kind) {
        case ConeKind::nonneg_function:
            w[0] = std::abs(gauss(rng));
            break;
        case ConeKind::decomposable_ray: {
            const double t = std::abs(gauss(rng));
            for (Eigen::Index i = 0; i < m; ++i) w[i] = t * spec.direction.coeffs()[static_cast<std::size_t>(i)];
            break;
        }
        case ConeKind::kahler_t4: {
            // H = G G^* for a complex Gaussian G.
            Eigen::Matrix2cd g;
            for (int i = 0; i < 4; ++i) g.data()[i] = {gauss(rng) * M_SQRT1_2, gauss(rng) * M_SQRT1_2};
            const Eigen::Matrix2cd h = g * g.adjoint();
            kahler_write({h(0, 0).real(), h(1, 1).real(), h(0, 1).real(), h(0, 1).imag()}, w);
            break;
        }
        case ConeKind::polyhedral_sampled: {
            if (spec.rays.cols() == 0) break;
            std::uniform_int_distribution<Eigen::Index> pick(0, spec.rays.cols() - 1);
            Eigen::Map<Eigen::VectorXd> block(w, m);
            for (int j = 0; j < 3; ++j) block += std::abs(gauss(rng)) * spec.rays.col(pick(rng));
            break;
        }
        }
    }
    return out;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iters)
{
    const Eigen::Index cols = a.cols();
    if (a.rows() != b.size()) throw std::invalid_argument("nnls: dimension mismatch");
    const int limit = max_iters > 0 ? max_iters : static_cast<int>(3 * cols + 30);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
    std::vector<bool> passive(static_cast<std::size_t>(cols), false);
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().sum() *
                       std::max<double>(1.0, b.norm());

    auto solve_passive = [&](std::vector<Eigen::Index>& index) {
        index.clear();
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (passive[static_cast<std::size_t>(j)]) index.push_back(j);
        }
        Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(index.size()));
        for (std::size_t i = 0; i < index.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = a.col(index[i]);
        return Eigen::VectorXd(sub.colPivHouseholderQr().solve(b));
    };

    std::vector<Eigen::Index> index;
    for (int outer = 0; outer < limit; ++outer) {
        const Eigen::VectorXd gradient = a.transpose() * (b - a * x);
        Eigen::Index best = -1;
        double best_value = tol;
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && gradient[j] > best_value) {
                best_value = gradient[j];
                best = j;
            }
        }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;
        for (int inner = 0; inner < limit; ++inner) {
            const Eigen::VectorXd s = solve_passive(index);
            double alpha = 1.0;
            bool feasible = true;
            for (std::size_t i = 0; i < index.size(); ++i) {
                if (s[static_cast<Eigen::Index>(i)] <= 0) {
                    feasible = false;
                    const double xi = x[index[i]];
                    alpha = std::min(alpha, xi / (xi - s[static_cast<Eigen::Index>(i)]));
                }
            }
            if (feasible) {
                for (std::size_t i = 0; i < index.size(); ++i) x[index[i]] = s[static_cast<Eigen::Index>(i)];
                break;
            }
            for (std::size_t i = 0; i < index.size(); ++i) {
                const Eigen::Index j = index[i];
                x[j] += alpha * (s[static_cast<Eigen::Index>(i)] - x[j]);
                if (x[j] <= tol) {
                    x[j] = 0.0;
                    passive[static_cast<std::size_t>(j)] = false;
                }
            }
        }
    }
    return x;
}

} // namespace tvcycles
