#pragma once

#include "ncfem/common.hpp"

namespace ncfem {

/// Quadrature on the reference n-simplex, stored in barycentric coordinates
/// with weights normalized to sum to one, so that
///   int_C f  ~=  |C| sum_i w_i f(x(lambda_i))
/// on any physical n-simplex C.
template <typename Scalar>
struct QuadratureRule {
    int dim = 0;
    int degree = 0;
    /// (dim + 1) x npoints
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> points;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

    Index size() const { return weights.size(); }
};

/// Gauss-Jacobi nodes/weights on [0, 1] for the weight (1 - t)^a, exact for
/// polynomials of degree 2 m - 1.
void gauss_jacobi(int m, int a, Vec& nodes, Vec& weights);

/// Collapsed-coordinate (Stroud conical product) rule with positive weights,
/// exact for all polynomials of total degree <= `degree`.
const QuadratureRule<double>& simplex_rule(int dim, int degree);

inline constexpr int kMaxQuadratureDegree = 60;

/// Throws QuadratureError when `rule` cannot integrate degree `needed` exactly.
void require_exactness(const QuadratureRule<double>& rule, int needed, const char* what);

}  // namespace ncfem
