#pragma once

// Exterior algebra over R^n with the standard metric and orientation.
//
// A k-vector is stored as C(n,k) coefficients in the lexicographic basis
// e_I, I = {i_1 < ... < i_k}. Axis sets are bitmasks; axis 0 is bit 0.
// The same type doubles as a constant-coefficient k-covector (the metric
// identifies the two), which is how calibrations and cone elements use it.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tvcycles {

using AxisMask = std::uint32_t;

inline constexpr int kMaxDimension = 12;

/// Strictly increasing list of axes, stored as a bitmask.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(AxisMask mask) : mask_(mask) {}
    /// Throws std::invalid_argument unless `axes` is strictly increasing and below n.
    MultiIndex(int n, std::span<const int> axes);

    AxisMask mask() const { return mask_; }
    int size() const;
    std::vector<int> axes() const;

    bool operator==(const MultiIndex&) const = default;

private:
    AxisMask mask_ = 0;
};

std::uint64_t binomial(int n, int k);

/// Lexicographic list of k-subsets of {0..n-1}.
std::span<const AxisMask> basis_masks(int n, int k);

/// Position of `mask` inside basis_masks(n, popcount(mask)).
std::size_t basis_position(int n, AxisMask mask);

/// Sign of the shuffle that sorts the concatenation (I, J); 0 if they overlap.
int shuffle_sign(AxisMask first, AxisMask second);

/// Sign with e_I ^ star(e_I) = +e_{0..n-1}, i.e. shuffle_sign(I, complement(I)).
int star_sign(int n, AxisMask mask);

inline AxisMask full_mask(int n) { return (AxisMask{1} << n) - 1; }

class KVector {
public:
    KVector(int n, int k);
    KVector(int n, int k, std::vector<double> coeffs);

    static KVector basis(int n, AxisMask axes, double coeff = 1.0);
    static KVector from_vector(const Eigen::VectorXd& v);

    /// Parses expressions such as "e12+2e34-0.5e13" with 1-based axis digits.
    /// Degree is inferred from the first term; mixed degrees are rejected.
    static KVector parse(int n, std::string_view expr);

    int dim() const { return n_; }
    int degree() const { return k_; }
    std::size_t size() const { return coeffs_.size(); }

    std::span<const double> coeffs() const { return coeffs_; }
    std::span<double> coeffs() { return coeffs_; }
    double coeff(AxisMask axes) const;
    void set_coeff(AxisMask axes, double value);

    Eigen::Map<const Eigen::VectorXd> as_eigen() const
    {
        return {coeffs_.data(), static_cast<Eigen::Index>(coeffs_.size())};
    }

    KVector& operator+=(const KVector& other);
    KVector& operator-=(const KVector& other);
    KVector& operator*=(double s);

    friend KVector operator+(KVector a, const KVector& b) { return a += b; }
    friend KVector operator-(KVector a, const KVector& b) { return a -= b; }
    friend KVector operator*(KVector a, double s) { return a *= s; }
    friend KVector operator*(double s, KVector a) { return a *= s; }
    friend KVector operator-(KVector a) { return a *= -1.0; }

    std::string to_string() const;

private:
    int n_;
    int k_;
    std::vector<double> coeffs_;
};

KVector wedge(const KVector& a, const KVector& b);
/// Wedge of the columns of `frame` (n x k), i.e. the simple k-vector they span.
KVector wedge_columns(const Eigen::MatrixXd& frame);

double inner(const KVector& a, const KVector& b);
double euclid_norm(const KVector& v);

/// Algebraic Hodge star: a ^ star(b) = <a,b> e_{0..n-1}.
KVector star_alg(const KVector& v);
/// Inverse star, (-1)^{k(n-k)} star.
KVector star_alg_inverse(const KVector& v);

/// Skew-symmetric coefficient matrix of a 2-vector: A(i,j) = v_{ij} for i < j.
Eigen::MatrixXd skew_matrix(const KVector& v);

/// v = sum_i lambdas[i] * frame.col(2i) ^ frame.col(2i+1), lambdas non-increasing, >= 0.
struct NormalForm2 {
    std::vector<double> lambdas;
    Eigen::MatrixXd frame;

    KVector reconstruct() const;
};

NormalForm2 normal_form_2(const KVector& v);

enum class NormQuality {
    exact,        ///< closed-form value
    upper_bound,  ///< value is a certified upper bound, bracket attached
    lower_bound,  ///< value is the best ascent value, a lower bound
};

/// A norm value together with a certified bracket [lower, upper].
struct NormValue {
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    NormQuality quality = NormQuality::exact;

    double gap() const { return upper - lower; }
    bool is_exact() const { return quality == NormQuality::exact; }
};

/// True when mass and comass have closed forms at this (n, k).
bool has_exact_norm_oracle(int n, int k);

NormValue mass_norm(const KVector& v);
NormValue comass_norm(const KVector& v);

/// Maximizes <v, f_1 ^ ... ^ f_k> over orthonormal k-frames (multi-start).
struct GrassmannAscent {
    double value = 0.0;
    Eigen::MatrixXd frame;
    int restarts = 0;
};

struct GrassmannOptions {
    int restarts = 64;
    double gradient_tol = 1e-8;
    int max_iters = 5000;
    std::uint64_t seed = 0x5eed;
};

GrassmannAscent grassmann_ascent(const KVector& v, const GrassmannOptions& options = {});

enum class Decomposability { decomposable, not_decomposable, indeterminate };

Decomposability is_decomposable(const KVector& v, double tol = 1e-9);

struct MassDecomposition {
    std::vector<KVector> terms;
    double total = 0.0;
};

/// Optimal splitting into simple terms whose Euclidean norms sum to the mass.
/// Throws std::invalid_argument for degrees without an exact oracle.
MassDecomposition mass_decomposition(const KVector& v);

} // namespace tvcycles
