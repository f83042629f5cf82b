#pragma once

#include "ncfem/layout.hpp"
#include "ncfem/quadrature.hpp"

#include <functional>
#include <iosfwd>
#include <optional>

namespace ncfem {

/// Piecewise polynomial over a broken layout.
class Field {
public:
    Field(BrokenLayout layout, Vec coefficients);

    const BrokenLayout& layout() const { return layout_; }
    const Vec& coefficients() const { return coefficients_; }

    double value(Index cell, const Bary& lambda) const;
    Point gradient(Index cell, const Bary& lambda) const;
    SmallMat hessian(Index cell, const Bary& lambda) const;

    /// Evaluation at a physical point inside element k.
    double value_in(Index element, const Point& x) const;
    Point gradient_in(Index element, const Point& x) const;
    SmallMat hessian_in(Index element, const Point& x) const;

private:
    Eigen::Ref<const Vec> block(Index cell) const { return coefficients_.segment(layout_.offset(cell), layout_.local_size()); }

    BrokenLayout layout_;
    Vec coefficients_;
};

/// First element containing x (with a small tolerance), if any.
std::optional<Index> find_element(const Mesh& mesh, const Point& x);

/// Samples every element on the lattice of order `per_edge` and writes
/// "element,x,y,value,grad_x,grad_y[,h_xx,h_xy,h_yy]" rows (d = 2).
void write_samples_csv(std::ostream& out, const Field& field, int per_edge, bool hessian);

using FacePolynomial = std::function<double(const Point&)>;

/// int_F [v]_F q by face quadrature; [v]_F = v|K1 - v|K2 on interior faces,
/// v|K1 on boundary faces. The rule must integrate degree(v) + q_degree.
double jump_moment(const Field& field, Index face, const FacePolynomial& q, int q_degree, int rule_degree);

/// int_F [grad v . n]_F q; independent of the (K1, K2) ordering.
double normal_jump_moment(const Field& field, Index face, const FacePolynomial& q, int q_degree, int rule_degree);

}  // namespace ncfem
