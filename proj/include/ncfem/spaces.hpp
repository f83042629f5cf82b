#pragma once

#include "ncfem/layout.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace ncfem {

enum class SpaceKind { broken, lagrange, cr, gl, morley, hct, face_bubbles, morley_bubbles, block };

std::string to_string(SpaceKind kind);

struct DofDescriptor {
    std::string type;  // node-value, face-mean, gauss-value, element-moment, vertex-value, ...
    Index entity = -1;  // node, face, vertex or element id
    int component = 0;
};

/// A discrete space as a basis over broken polynomials.
struct DofSpace {
    SpaceKind kind = SpaceKind::broken;
    int degree = 0;  // polynomial degree parameter (p for Lagrange and GL)
    BrokenLayout layout;
    SpMat basis;        // layout.size() x n
    SpMat functionals;  // n x layout.size() with functionals * basis = I; 0 x 0 if unavailable
    std::vector<DofDescriptor> dofs;

    Index size() const { return basis.cols(); }
    bool has_functionals() const { return functionals.rows() == size() && functionals.cols() == layout.size(); }
    std::string name() const;
};

/// max |functionals * basis - I|; throws when the space has no functionals.
double duality_residual(const DofSpace& space);

/// Rank check through the pivots of the coefficient Gram matrix; throws
/// NumericalError when the basis is rank deficient.
void require_full_rank(const DofSpace& space, double tolerance = 1e-12);

/// Lagrange nodes of order p, deduplicated across elements. A node lies on
/// the boundary when its support vertices all belong to one boundary face.
struct LagrangeNodes {
    int degree = 1;
    std::vector<Point> points;
    std::vector<bool> boundary;
    std::vector<Index> owner;        // smallest element containing the node
    std::vector<Index> owner_local;  // multi-index position inside the owner
    std::vector<Index> dof;          // interior numbering, -1 on the boundary
    std::vector<std::vector<Index>> element_nodes;  // per element, in multi-index order
    std::vector<std::vector<Index>> support;        // vertices with positive exponent
    Index num_interior = 0;
};
LagrangeNodes lagrange_nodes(const Mesh& mesh, int p);

DofSpace broken_space(const BrokenLayout& layout);

/// Continuous piecewise polynomials of degree p vanishing on the boundary.
/// Functionals: value at each interior node taken from its owner element.
DofSpace lagrange_space(std::shared_ptr<const Mesh> mesh, int p);

/// Crouzeix-Raviart space; dofs are interior-face means.
DofSpace cr_space(std::shared_ptr<const Mesh> mesh);

enum class GlRoute { local, kernel };

/// Broken degree-p functions whose jumps are orthogonal to P_{p-1} on every
/// face. `local` (d = 2) uses sparse local bases; `kernel` stores an
/// orthonormal basis of the null space of the jump-moment constraints.
DofSpace gl_space(std::shared_ptr<const Mesh> mesh, int p, GlRoute route = GlRoute::local);

/// Rows: mean over F of [v]_F q for q in the Bernstein basis of P_{q_degree}(F),
/// ordered face by face (boundary faces one-sided).
SpMat jump_constraints(const BrokenLayout& layout, int q_degree);

/// Morley space: interior vertex values and interior-face normal-derivative
/// means (normal n_F of the mesh face).
DofSpace morley_space(std::shared_ptr<const Mesh> mesh);

/// Hsieh-Clough-Tocher space on the Clough-Tocher layout of degree 3 with
/// clamped boundary: value and gradient at interior vertices, normal
/// derivative at interior-face midpoints.
DofSpace hct_space(std::shared_ptr<const Mesh> mesh, double max_condition = 1e8);

/// Degree-d face bubbles prod_{z in F} lambda_z scaled to unit face mean.
DofSpace face_bubble_space(std::shared_ptr<const Mesh> mesh);

/// Degree-9 normal-derivative bubbles (x - m_F).n_F phi_F with
/// phi_F = prod_{z in F} (lambda_z^{K1} lambda_z^{K2})^2 scaled to unit face
/// mean; unit mean normal derivative on F, zero on all other faces.
DofSpace morley_bubble_space(std::shared_ptr<const Mesh> mesh);

/// Ratio printed-constant / enforced-constant of the face bubble
/// normalizations (CR bubble and Morley phi_F) for the given dimension.
std::pair<double, double> bubble_normalization_factors(int dim);

/// Bernstein coefficients of an affine function on element k given by its
/// vertex values (degree 1).
Vec affine_coefficients(const Mesh& mesh, Index k, const std::function<double(const Point&)>& f);

using ScalarFunction = std::function<double(const Point&)>;

/// CR interpolant: interior-face means of u by face quadrature of the given
/// degree, returned as CR coordinates.
Vec cr_interpolate(const DofSpace& cr, const ScalarFunction& u, int rule_degree);

/// Coordinates of broken vectors (columns) in the space, with the residual of
/// the reconstruction max |basis * c - v|.
std::pair<Mat, double> coordinates(const DofSpace& space, const Mat& broken);

}  // namespace ncfem
