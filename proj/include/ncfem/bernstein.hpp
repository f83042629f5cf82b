#pragma once

// Bernstein-Bezier algebra on an n-simplex with nvars = n + 1 barycentric
// coordinates. A polynomial of degree p is the coefficient vector c over
// multi_indices(nvars, p):  u(lambda) = sum_alpha c_alpha B_alpha(lambda),
// B_alpha = p!/alpha! lambda^alpha.  Everything here is affine invariant, so
// nothing depends on the physical simplex.

#include "ncfem/common.hpp"
#include "ncfem/multi_index.hpp"

#include <vector>

namespace ncfem::bb {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline double multinomial(int degree, const MultiIndex& alpha) {
    return factorial(degree) / multi_factorial(alpha);
}

/// B_alpha(lambda) for every alpha of the given degree.
template <typename Scalar, typename Derived>
VecX<Scalar> basis_values(int degree, const Eigen::MatrixBase<Derived>& lambda) {
    const int nvars = static_cast<int>(lambda.size());
    const auto& set = multi_indices(nvars, degree);
    VecX<Scalar> out(set.size());
    for (Index i = 0; i < set.size(); ++i) {
        const auto& a = set[i];
        Scalar v = Scalar(multinomial(degree, a));
        for (int z = 0; z < nvars; ++z)
            for (int k = 0; k < a[static_cast<std::size_t>(z)]; ++k) v *= Scalar(lambda(z));
        out(i) = v;
    }
    return out;
}

template <typename Scalar, typename Derived>
Scalar evaluate(const VecX<Scalar>& coeffs, int degree, const Eigen::MatrixBase<Derived>& lambda) {
    return basis_values<Scalar>(degree, lambda).dot(coeffs);
}

/// Partial derivative with respect to lambda_z (lambdas treated as independent
/// variables); result has degree - 1.
template <typename Scalar>
VecX<Scalar> differentiate(const VecX<Scalar>& coeffs, int nvars, int degree, int z) {
    if (degree == 0) return VecX<Scalar>::Zero(1);
    const auto& low = multi_indices(nvars, degree - 1);
    const auto& high = multi_indices(nvars, degree);
    VecX<Scalar> out(low.size());
    MultiIndex b;
    for (Index i = 0; i < low.size(); ++i) {
        b = low[i];
        b[static_cast<std::size_t>(z)] += 1;
        out(i) = Scalar(degree) * coeffs(high.find(b));
    }
    return out;
}

/// Exact degree elevation from `from` to `to`.
template <typename Scalar>
VecX<Scalar> elevate(const VecX<Scalar>& coeffs, int nvars, int from, int to) {
    VecX<Scalar> cur = coeffs;
    for (int p = from; p < to; ++p) {
        const auto& low = multi_indices(nvars, p);
        const auto& high = multi_indices(nvars, p + 1);
        VecX<Scalar> next = VecX<Scalar>::Zero(high.size());
        MultiIndex b;
        for (Index i = 0; i < high.size(); ++i) {
            b = high[i];
            for (int z = 0; z < nvars; ++z) {
                const int bz = b[static_cast<std::size_t>(z)];
                if (bz == 0) continue;
                b[static_cast<std::size_t>(z)] -= 1;
                next(i) += Scalar(double(bz) / double(p + 1)) * cur(low.find(b));
                b[static_cast<std::size_t>(z)] += 1;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

/// Product of two polynomials on the same simplex.
template <typename Scalar>
VecX<Scalar> multiply(const VecX<Scalar>& a, int pa, const VecX<Scalar>& b, int pb, int nvars) {
    const auto& sa = multi_indices(nvars, pa);
    const auto& sb = multi_indices(nvars, pb);
    const auto& sc = multi_indices(nvars, pa + pb);
    VecX<Scalar> c = VecX<Scalar>::Zero(sc.size());
    MultiIndex g(static_cast<std::size_t>(nvars));
    for (Index i = 0; i < sa.size(); ++i) {
        if (a(i) == Scalar(0)) continue;
        const double ca = multinomial(pa, sa[i]);
        for (Index j = 0; j < sb.size(); ++j) {
            for (int z = 0; z < nvars; ++z)
                g[static_cast<std::size_t>(z)] = sa[i][static_cast<std::size_t>(z)] + sb[j][static_cast<std::size_t>(z)];
            const double w = ca * multinomial(pb, sb[j]) / multinomial(pa + pb, g);
            c(sc.find(g)) += Scalar(w) * a(i) * b(j);
        }
    }
    return c;
}

/// Trace on the facet opposite vertex `omit`; result lives on nvars - 1
/// coordinates (the remaining vertices in their original order).
template <typename Scalar>
VecX<Scalar> restrict_to_facet(const VecX<Scalar>& coeffs, int nvars, int degree, int omit) {
    const auto& full = multi_indices(nvars, degree);
    const auto& face = multi_indices(nvars - 1, degree);
    VecX<Scalar> out(face.size());
    MultiIndex a(static_cast<std::size_t>(nvars));
    for (Index i = 0; i < face.size(); ++i) {
        int k = 0;
        for (int z = 0; z < nvars; ++z) a[static_cast<std::size_t>(z)] = (z == omit) ? 0 : face[i][static_cast<std::size_t>(k++)];
        out(i) = coeffs(full.find(a));
    }
    return out;
}

/// Re-expresses the polynomial on a sub-simplex whose vertices have the
/// barycentric coordinates W.col(k) with respect to the original simplex
/// (blossoming). Exact, and stable when the sub-simplex is inside.
template <typename Scalar>
VecX<Scalar> subdivide(const VecX<Scalar>& coeffs, int nvars, int degree, const MatX<Scalar>& W) {
    const auto& set = multi_indices(nvars, degree);
    VecX<Scalar> out(set.size());
    for (Index i = 0; i < set.size(); ++i) {
        // Blossom b(w_0^{beta_0}, ..., w_n^{beta_n}) via de Casteljau steps with
        // varying points.
        VecX<Scalar> cur = coeffs;
        int p = degree;
        for (int k = 0; k < nvars; ++k) {
            for (int rep = 0; rep < set[i][static_cast<std::size_t>(k)]; ++rep) {
                const auto& low = multi_indices(nvars, p - 1);
                const auto& high = multi_indices(nvars, p);
                VecX<Scalar> next = VecX<Scalar>::Zero(low.size());
                MultiIndex b;
                for (Index j = 0; j < low.size(); ++j) {
                    b = low[j];
                    for (int z = 0; z < nvars; ++z) {
                        b[static_cast<std::size_t>(z)] += 1;
                        next(j) += W(z, k) * cur(high.find(b));
                        b[static_cast<std::size_t>(z)] -= 1;
                    }
                }
                cur = std::move(next);
                --p;
            }
        }
        out(i) = cur(0);
    }
    return out;
}

/// Mean value over the simplex: every Bernstein polynomial of degree p has
/// the same integral, so the mean is the coefficient average.
template <typename Scalar>
Scalar mean(const VecX<Scalar>& coeffs) {
    return coeffs.sum() / Scalar(coeffs.size());
}

}  // namespace ncfem::bb

namespace ncfem {

/// Cached reference matrices (double precision).
struct BernsteinTables {
    /// Rows: Lagrange nodes alpha/p, columns: Bernstein basis.
    static const Mat& vandermonde(int nvars, int degree);
    /// Inverse of vandermonde(): maps nodal values to Bernstein coefficients.
    static const Mat& nodal_to_bernstein(int nvars, int degree);
    /// Mean value of B_alpha B_beta over the simplex (exact).
    static const Mat& mass(int nvars, int degree);
    /// Elevation matrix from degree `from` to `to` (rows: high degree).
    static const Mat& elevation(int nvars, int from, int to);
    /// d/d lambda_z as a matrix from degree p to p - 1.
    static const Mat& derivative(int nvars, int degree, int z);
    /// Mean of B_alpha^{pa} B_beta^{pb} (rows alpha, columns beta).
    static const Mat& product_mean(int nvars, int pa, int pb);
};

/// Mean over the simplex of B_a^{pa} B_b^{pb} B_c^{pc}.
double triple_product_mean(int nvars, const MultiIndex& a, int pa, const MultiIndex& b, int pb, const MultiIndex& c,
                           int pc);

}  // namespace ncfem
