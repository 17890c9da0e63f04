#include "tvcycles/exterior.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace tvcycles {

namespace {

struct BasisTables {
    // masks[n][k] in lexicographic order, position[n][mask] inside its degree list.
    std::array<std::array<std::vector<AxisMask>, kMaxDimension + 1>, kMaxDimension + 1> masks;
    std::array<std::vector<std::uint32_t>, kMaxDimension + 1> position;

    BasisTables()
    {
        for (int n = 0; n <= kMaxDimension; ++n) {
            const AxisMask count = AxisMask{1} << n;
            position[n].assign(count, 0);
            for (AxisMask m = 0; m < count; ++m) {
                masks[n][std::popcount(m)].push_back(m);
            }
            for (int k = 0; k <= n; ++k) {
                auto& list = masks[n][k];
                // Lexicographic on the increasing axis tuples: compare lowest
                // differing axis, the set holding it first.
                std::sort(list.begin(), list.end(), [](AxisMask a, AxisMask b) {
                    const AxisMask diff = a ^ b;
                    if (diff == 0) return false;
                    const AxisMask lowest = diff & (~diff + 1);
                    return (a & lowest) != 0;
                });
                for (std::size_t i = 0; i < list.size(); ++i) {
                    position[n][list[i]] = static_cast<std::uint32_t>(i);
                }
            }
        }
    }
};

const BasisTables& tables()
{
    static const BasisTables t;
    return t;
}

void check_dim(int n)
{
    if (n < 1 || n > kMaxDimension) {
        throw std::invalid_argument("dimension must be in 1.." + std::to_string(kMaxDimension));
    }
}

double determinant(const Eigen::MatrixXd& m)
{
    if (m.rows() == 0) return 1.0;
    return m.determinant();
}

// Thin Q factor with positive R diagonal, so the retraction keeps orientation.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& x)
{
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
    const Eigen::MatrixXd& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    return q;
}

struct Evaluation {
    double value;
    Eigen::MatrixXd gradient;
};

// f(F) = sum_I v_I det(F_I) and its Euclidean gradient in F.
Evaluation evaluate_frame(const KVector& v, const Eigen::MatrixXd& frame)
{
    const int n = v.dim();
    const int k = v.degree();
    const auto masks = basis_masks(n, k);
    Evaluation out{0.0, Eigen::MatrixXd::Zero(n, k)};
    std::vector<int> rows(k);
    Eigen::MatrixXd sub(k, k);
    Eigen::MatrixXd minor(std::max(k - 1, 0), std::max(k - 1, 0));
    for (std::size_t idx = 0; idx < masks.size(); ++idx) {
        const double c = v.coeffs()[idx];
        if (c == 0.0) continue;
        int r = 0;
        for (int a = 0; a < n; ++a) {
            if (masks[idx] & (AxisMask{1} << a)) rows[r++] = a;
        }
        for (int i = 0; i < k; ++i) sub.row(i) = frame.row(rows[i]);
        out.value += c * determinant(sub);
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                for (int ii = 0, mi = 0; ii < k; ++ii) {
                    if (ii == i) continue;
                    for (int jj = 0, mj = 0; jj < k; ++jj) {
                        if (jj == j) continue;
                        minor(mi, mj++) = sub(ii, jj);
                    }
                    ++mi;
                }
                const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
                out.gradient(rows[i], j) += c * sign * determinant(minor);
            }
        }
    }
    return out;
}

// Certified upper bound on the mass via an explicit decomposition: greedy
// pursuit with simple atoms, remainder split along the coordinate basis.
double pursuit_mass_upper(const KVector& v)
{
    KVector residual = v;
    const double scale = euclid_norm(v);
    double total = 0.0;
    GrassmannOptions options;
    options.restarts = 8;
    for (int atom = 0; atom < 100; ++atom) {
        if (euclid_norm(residual) <= 1e-3 * scale) break;
        options.seed = 0x5eed + static_cast<std::uint64_t>(atom);
        const GrassmannAscent best = grassmann_ascent(residual, options);
        if (best.value <= 1e-12 * scale) break;
        residual -= wedge_columns(best.frame) * best.value;
        total += best.value;
    }
    for (double c : residual.coeffs()) total += std::abs(c);
    return total;
}

} // namespace

MultiIndex::MultiIndex(int n, std::span<const int> axes)
{
    int previous = -1;
    for (int a : axes) {
        if (a <= previous || a >= n) {
            throw std::invalid_argument("multi-index axes must be strictly increasing and < n");
        }
        mask_ |= AxisMask{1} << a;
        previous = a;
    }
}

int MultiIndex::size() const { return std::popcount(mask_); }

std::vector<int> MultiIndex::axes() const
{
    std::vector<int> out;
    for (int a = 0; a < 32; ++a) {
        if (mask_ & (AxisMask{1} << a)) out.push_back(a);
    }
    return out;
}

std::uint64_t binomial(int n, int k)
{
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
    return r;
}

std::span<const AxisMask> basis_masks(int n, int k)
{
    check_dim(n);
    if (k < 0 || k > n) throw std::invalid_argument("degree out of range");
    return tables().masks[n][k];
}

std::size_t basis_position(int n, AxisMask mask)
{
    check_dim(n);
    if (mask >= (AxisMask{1} << n)) throw std::invalid_argument("axis outside dimension");
    return tables().position[n][mask];
}

int shuffle_sign(AxisMask first, AxisMask second)
{
    if (first & second) return 0;
    int inversions = 0;
    for (AxisMask rest = second; rest; rest &= rest - 1) {
        const int j = std::countr_zero(rest);
        const AxisMask above = ~((AxisMask{2} << j) - 1);
        inversions += std::popcount(first & above);
    }
    return (inversions % 2 == 0) ? 1 : -1;
}

int star_sign(int n, AxisMask mask) { return shuffle_sign(mask, full_mask(n) & ~mask); }

KVector::KVector(int n, int k) : n_(n), k_(k)
{
    check_dim(n);
    if (k < 0 || k > n) throw std::invalid_argument("degree out of range");
    coeffs_.assign(binomial(n, k), 0.0);
}

KVector::KVector(int n, int k, std::vector<double> coeffs) : KVector(n, k)
{
    if (coeffs.size() != coeffs_.size()) {
        throw std::invalid_argument("coefficient count must be C(n,k)");
    }
    coeffs_ = std::move(coeffs);
}

KVector KVector::basis(int n, AxisMask axes, double coeff)
{
    KVector v(n, std::popcount(axes));
    v.set_coeff(axes, coeff);
    return v;
}

KVector KVector::from_vector(const Eigen::VectorXd& x)
{
    KVector v(static_cast<int>(x.size()), 1);
    for (Eigen::Index i = 0; i < x.size(); ++i) v.coeffs_[i] = x[i];
    return v;
}

double KVector::coeff(AxisMask axes) const
{
    if (std::popcount(axes) != k_) return 0.0;
    return coeffs_[basis_position(n_, axes)];
}

void KVector::set_coeff(AxisMask axes, double value)
{
    if (std::popcount(axes) != k_) throw std::invalid_argument("axis set has wrong degree");
    coeffs_[basis_position(n_, axes)] = value;
}

KVector& KVector::operator+=(const KVector& other)
{
    if (other.n_ != n_ || other.k_ != k_) throw std::invalid_argument("k-vector shape mismatch");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
    return *this;
}

KVector& KVector::operator-=(const KVector& other)
{
    if (other.n_ != n_ || other.k_ != k_) throw std::invalid_argument("k-vector shape mismatch");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
    return *this;
}

KVector& KVector::operator*=(double s)
{
    for (double& c : coeffs_) c *= s;
    return *this;
}

KVector KVector::parse(int n, std::string_view expr)
{
    std::string text;
    for (char ch : expr) {
        if (!std::isspace(static_cast<unsigned char>(ch))) text.push_back(ch);
    }
    if (text.empty()) throw std::invalid_argument("empty k-vector expression");

    struct Term {
        double coeff;
        AxisMask mask;
        int degree;
    };
    std::vector<Term> terms;
    std::size_t pos = 0;
    while (pos < text.size()) {
        double sign = 1.0;
        if (text[pos] == '+' || text[pos] == '-') {
            sign = text[pos] == '-' ? -1.0 : 1.0;
            ++pos;
        } else if (!terms.empty()) {
            throw std::invalid_argument("expected '+' or '-' in k-vector expression");
        }
        double coeff = 1.0;
        std::size_t start = pos;
        auto digits = [&] {
            while (pos < text.size() &&
                   (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) {
                ++pos;
            }
        };
        digits();
        if (pos > start && pos < text.size() && text[pos] == 'E') {
            ++pos;
            if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
            digits();
        }
        const bool has_number = pos > start;
        if (has_number) coeff = std::stod(text.substr(start, pos - start));
        if (pos < text.size() && text[pos] == '*') ++pos;

        AxisMask mask = 0;
        int degree = 0;
        if (pos < text.size() && text[pos] == 'e') {
            ++pos;
            std::vector<int> axes;
            if (pos < text.size() && text[pos] == '[') {
                const std::size_t close = text.find(']', pos);
                if (close == std::string::npos) throw std::invalid_argument("unterminated e[...]");
                std::stringstream list(text.substr(pos + 1, close - pos - 1));
                std::string item;
                while (std::getline(list, item, ',')) axes.push_back(std::stoi(item));
                pos = close + 1;
            } else {
                while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
                    axes.push_back(text[pos] - '0');
                    ++pos;
                }
            }
            if (axes.empty()) throw std::invalid_argument("basis element without axes");
            for (int& a : axes) --a;
            std::vector<int> sorted = axes;
            std::sort(sorted.begin(), sorted.end());
            degree = static_cast<int>(axes.size());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
                terms.push_back({0.0, 0, degree}); // e_i ^ e_i
                continue;
            }
            // Sign of the permutation sorting the given order.
            int inversions = 0;
            for (std::size_t i = 0; i < axes.size(); ++i) {
                for (std::size_t j = i + 1; j < axes.size(); ++j) {
                    if (axes[i] > axes[j]) ++inversions;
                }
            }
            if (inversions % 2) coeff = -coeff;
            mask = MultiIndex(n, sorted).mask();
        } else if (!has_number) {
            throw std::invalid_argument("malformed k-vector term near position " + std::to_string(pos));
        }
        terms.push_back({sign * coeff, mask, degree});
    }
    const int k = terms.front().degree;
    KVector out(n, k);
    for (const Term& t : terms) {
        if (t.degree != k) throw std::invalid_argument("mixed degrees in k-vector expression");
        if (t.coeff == 0.0) continue;
        out.coeffs_[basis_position(n, t.mask)] += t.coeff;
    }
    return out;
}

std::string KVector::to_string() const
{
    std::ostringstream os;
    os.precision(12);
    const auto masks = basis_masks(n_, k_);
    bool first = true;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const double c = coeffs_[i];
        if (c == 0.0) continue;
        if (!first) os << (c < 0 ? " - " : " + ");
        else if (c < 0) os << "-";
        first = false;
        os << std::abs(c);
        if (k_ > 0) {
            os << "*e";
            const auto axes = MultiIndex(masks[i]).axes();
            const bool wide = n_ > 9;
            if (wide) os << "[";
            for (std::size_t j = 0; j < axes.size(); ++j) {
                if (wide && j) os << ",";
                os << axes[j] + 1;
            }
            if (wide) os << "]";
        }
    }
    if (first) os << "0";
    return os.str();
}

KVector wedge(const KVector& a, const KVector& b)
{
    if (a.dim() != b.dim()) throw std::invalid_argument("wedge: dimension mismatch");
    if (a.degree() + b.degree() > a.dim()) throw std::invalid_argument("wedge: degree overflow");
    const int n = a.dim();
    KVector out(n, a.degree() + b.degree());
    const auto ma = basis_masks(n, a.degree());
    const auto mb = basis_masks(n, b.degree());
    auto oc = out.coeffs();
    for (std::size_t i = 0; i < ma.size(); ++i) {
        const double ca = a.coeffs()[i];
        if (ca == 0.0) continue;
        for (std::size_t j = 0; j < mb.size(); ++j) {
            const int s = shuffle_sign(ma[i], mb[j]);
            if (s == 0) continue;
            oc[basis_position(n, ma[i] | mb[j])] += s * ca * b.coeffs()[j];
        }
    }
    return out;
}

KVector wedge_columns(const Eigen::MatrixXd& frame)
{
    const int n = static_cast<int>(frame.rows());
    KVector out(n, 0, {1.0});
    for (Eigen::Index c = 0; c < frame.cols(); ++c) {
        out = wedge(out, KVector::from_vector(frame.col(c)));
    }
    return out;
}

double inner(const KVector& a, const KVector& b)
{
    if (a.dim() != b.dim() || a.degree() != b.degree()) {
        throw std::invalid_argument("inner: shape mismatch");
    }
    return a.as_eigen().dot(b.as_eigen());
}

double euclid_norm(const KVector& v) { return v.as_eigen().norm(); }

KVector star_alg(const KVector& v)
{
    const int n = v.dim();
    const AxisMask all = full_mask(n);
    KVector out(n, n - v.degree());
    const auto masks = basis_masks(n, v.degree());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        out.set_coeff(all & ~masks[i], star_sign(n, masks[i]) * v.coeffs()[i]);
    }
    return out;
}

KVector star_alg_inverse(const KVector& v)
{
    const int k = v.dim() - v.degree();
    const double sign = (k * v.degree()) % 2 == 0 ? 1.0 : -1.0;
    return star_alg(v) * sign;
}

Eigen::MatrixXd skew_matrix(const KVector& v)
{
    if (v.degree() != 2) throw std::invalid_argument("skew_matrix needs a 2-vector");
    const int n = v.dim();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const auto masks = basis_masks(n, 2);
    for (std::size_t idx = 0; idx < masks.size(); ++idx) {
        const int i = std::countr_zero(masks[idx]);
        const int j = 31 - std::countl_zero(masks[idx]);
        a(i, j) = v.coeffs()[idx];
        a(j, i) = -v.coeffs()[idx];
    }
    return a;
}

KVector NormalForm2::reconstruct() const
{
    const int n = static_cast<int>(frame.rows());
    KVector out(n, 2);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        Eigen::MatrixXd plane(n, 2);
        plane << frame.col(2 * i), frame.col(2 * i + 1);
        out += wedge_columns(plane) * lambdas[i];
    }
    return out;
}

NormalForm2 normal_form_2(const KVector& v)
{
    if (v.degree() != 2) throw std::invalid_argument("normal_form_2 needs a 2-vector");
    const int n = v.dim();
    const int pairs = n / 2;
    const Eigen::MatrixXd a = skew_matrix(v);
    const double scale = a.norm();

    // Deflation: the top eigenvector u of A^T A spans a block with A u = -lambda f2.
    Eigen::MatrixXd remaining = a;
    std::vector<Eigen::VectorXd> columns;
    for (int p = 0; p < pairs && scale > 0.0; ++p) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(remaining.transpose() * remaining);
        const double mu = eig.eigenvalues()(n - 1);
        if (mu <= (1e-15 * scale) * (1e-15 * scale)) break;
        const double lambda = std::sqrt(mu);
        Eigen::VectorXd f1 = eig.eigenvectors().col(n - 1);
        Eigen::VectorXd f2 = -remaining * f1 / lambda;
        for (const auto& c : columns) {
            f1 -= c.dot(f1) * c;
            f2 -= c.dot(f2) * c;
        }
        f1.normalize();
        f2 -= f1.dot(f2) * f1;
        f2.normalize();
        remaining -= lambda * (f1 * f2.transpose() - f2 * f1.transpose());
        columns.push_back(f1);
        columns.push_back(f2);
    }
    // Complete to an orthonormal basis with the standard axes.
    for (int axis = 0; axis < n && static_cast<int>(columns.size()) < n; ++axis) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(n, axis);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& c : columns) e -= c.dot(e) * c;
        }
        if (e.norm() > 1e-6) columns.push_back(e.normalized());
    }

    NormalForm2 out;
    out.frame.resize(n, n);
    for (int c = 0; c < n; ++c) out.frame.col(c) = columns[c];
    out.lambdas.resize(pairs);
    for (int p = 0; p < pairs; ++p) {
        double lambda = out.frame.col(2 * p).dot(a * out.frame.col(2 * p + 1));
        if (lambda < 0) {
            out.frame.col(2 * p).swap(out.frame.col(2 * p + 1));
            lambda = -lambda;
        }
        out.lambdas[p] = lambda;
    }
    // Order pairs by decreasing lambda.
    std::vector<int> order(pairs);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return out.lambdas[x] > out.lambdas[y]; });
    NormalForm2 sorted;
    sorted.frame = out.frame;
    sorted.lambdas.resize(pairs);
    for (int p = 0; p < pairs; ++p) {
        sorted.lambdas[p] = out.lambdas[order[p]];
        sorted.frame.col(2 * p) = out.frame.col(2 * order[p]);
        sorted.frame.col(2 * p + 1) = out.frame.col(2 * order[p] + 1);
    }
    return sorted;
}

bool has_exact_norm_oracle(int n, int k)
{
    return k <= 2 || k >= n - 2;
}

NormValue mass_norm(const KVector& v)
{
    const int n = v.dim();
    const int k = v.degree();
    const double euclid = euclid_norm(v);
    if (k <= 1 || k >= n - 1) return {euclid, euclid, euclid, NormQuality::exact};
    if (k == 2 || k == n - 2) {
        const NormalForm2 nf = normal_form_2(k == 2 ? v : star_alg(v));
        const double m = std::accumulate(nf.lambdas.begin(), nf.lambdas.end(), 0.0);
        return {m, m, m, NormQuality::exact};
    }
    const double upper = pursuit_mass_upper(v);
    return {upper, euclid, upper, NormQuality::upper_bound};
}

NormValue comass_norm(const KVector& v)
{
    const int n = v.dim();
    const int k = v.degree();
    const double euclid = euclid_norm(v);
    if (k <= 1 || k >= n - 1) return {euclid, euclid, euclid, NormQuality::exact};
    if (k == 2 || k == n - 2) {
        const NormalForm2 nf = normal_form_2(k == 2 ? v : star_alg(v));
        const double c = nf.lambdas.empty() ? 0.0 : nf.lambdas.front();
        return {c, c, c, NormQuality::exact};
    }
    const GrassmannAscent best = grassmann_ascent(v);
    const double value = std::min(best.value, euclid);
    return {value, value, euclid, NormQuality::lower_bound};
}

GrassmannAscent grassmann_ascent(const KVector& v, const GrassmannOptions& options)
{
    const int n = v.dim();
    const int k = v.degree();
    if (k < 1) throw std::invalid_argument("grassmann_ascent needs degree >= 1");
    const double scale = euclid_norm(v);

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss;

    GrassmannAscent best;
    best.value = -std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < options.restarts; ++restart) {
        Eigen::MatrixXd start(n, k);
        for (Eigen::Index i = 0; i < start.size(); ++i) start.data()[i] = gauss(rng);
        Eigen::MatrixXd frame = orthonormalize(start);
        Evaluation current = evaluate_frame(v, frame);
        if (current.value < 0) {
            frame.col(0) *= -1.0;
            current = evaluate_frame(v, frame);
        }
        double step = scale > 0 ? 1.0 / scale : 1.0;
        for (int it = 0; it < options.max_iters && scale > 0; ++it) {
            const Eigen::MatrixXd riemannian =
                current.gradient - frame * (frame.transpose() * current.gradient);
            const double gnorm = riemannian.norm();
            if (gnorm <= options.gradient_tol * scale) break;
            bool accepted = false;
            while (step > 1e-16 / scale) {
                Eigen::MatrixXd trial = orthonormalize(frame + step * riemannian);
                Evaluation next = evaluate_frame(v, trial);
                if (next.value >= current.value + 1e-4 * step * gnorm * gnorm) {
                    frame = std::move(trial);
                    current = std::move(next);
                    step *= 1.5;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
        }
        if (current.value > best.value) {
            best.value = current.value;
            best.frame = frame;
        }
    }
    best.restarts = options.restarts;
    return best;
}

Decomposability is_decomposable(const KVector& v, double tol)
{
    if (!(tol > 0)) throw std::invalid_argument("is_decomposable: tol must be positive");
    const int n = v.dim();
    const int k = v.degree();
    const double euclid = euclid_norm(v);
    if (euclid == 0.0 || k <= 1 || k >= n - 1) return Decomposability::decomposable;

    if (has_exact_norm_oracle(n, k)) {
        const double mass = mass_norm(v).value;
        const bool by_norms = std::abs(mass - euclid) <= tol * euclid;
        if (k == 2 && 2 * k <= n) {
            const bool by_square = euclid_norm(wedge(v, v)) <= tol * euclid * euclid;
            if (by_norms != by_square) return Decomposability::indeterminate;
        }
        return by_norms ? Decomposability::decomposable : Decomposability::not_decomposable;
    }
    // comass >= ascent value, comass <= euclid: a near-euclid ascent value certifies equality.
    const GrassmannAscent best = grassmann_ascent(v);
    if (euclid - best.value <= tol * euclid) return Decomposability::decomposable;
    const NormValue mass = mass_norm(v);
    if (mass.upper - euclid <= tol * euclid) return Decomposability::decomposable;
    if (mass.lower - euclid > tol * euclid) return Decomposability::not_decomposable;
    return Decomposability::indeterminate;
}

MassDecomposition mass_decomposition(const KVector& v)
{
    const int n = v.dim();
    const int k = v.degree();
    MassDecomposition out;
    const double euclid = euclid_norm(v);
    if (k <= 1 || k >= n - 1) {
        if (euclid > 0) out.terms.push_back(v);
        out.total = euclid;
        return out;
    }
    if (k != 2 && k != n - 2) {
        throw std::invalid_argument("mass_decomposition: no exact oracle for degree " +
                                    std::to_string(k) + " in dimension " + std::to_string(n));
    }
    const bool through_star = k != 2;
    const NormalForm2 nf = normal_form_2(through_star ? star_alg(v) : v);
    for (std::size_t i = 0; i < nf.lambdas.size(); ++i) {
        if (nf.lambdas[i] <= 1e-15 * euclid) continue;
        Eigen::MatrixXd plane(n, 2);
        plane << nf.frame.col(2 * i), nf.frame.col(2 * i + 1);
        KVector term = wedge_columns(plane) * nf.lambdas[i];
        if (through_star) term = star_alg_inverse(term);
        out.total += nf.lambdas[i];
        out.terms.push_back(std::move(term));
    }
    return out;
}

} // namespace tvcycles
