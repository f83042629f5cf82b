#pragma once

#include "ncfem/common.hpp"
#include "ncfem/multi_index.hpp"

#include <array>
#include <span>
#include <vector>

namespace ncfem {

/// A (d-1)-face of the mesh. Local face j of an element is the face opposite
/// its local vertex j.
struct Face {
    std::vector<Index> vertices;          // ascending vertex ids
    std::array<Index, 2> elements{-1, -1};  // (K1, K2); K2 = -1 on the boundary
    std::array<int, 2> local{-1, -1};     // local face index inside K1 / K2
    double measure = 0.0;
    Point normal;    // unit normal, outward from K1
    Point midpoint;  // barycenter

    bool boundary() const { return elements[1] < 0; }
};

struct ElementGeometry {
    double measure = 0.0;
    double diameter = 0.0;           // h_K
    double inradius_diameter = 0.0;  // rho_K
    GradLambda grad_lambda;          // d x (d+1), column z = grad lambda_z
    Point barycenter;

    double shape_coefficient() const { return diameter / inradius_diameter; }
};

/// Simplicial face-to-face mesh. Immutable after construction.
class Mesh {
public:
    /// vertices: d x nv coordinates; elements: (d+1)-tuples of vertex ids.
    /// `parents` optionally records the coarse element of each element.
    /// Throws MeshError for degenerate simplices, faces with more than two
    /// incident elements and hanging vertices.
    Mesh(Mat vertices, std::vector<std::vector<Index>> elements, std::vector<Index> parents = {});

    int dim() const { return dim_; }
    Index num_vertices() const { return vertices_.cols(); }
    Index num_elements() const { return static_cast<Index>(geometry_.size()); }
    Index num_faces() const { return static_cast<Index>(faces_.size()); }
    Index num_interior_faces() const;

    const Mat& vertices() const { return vertices_; }
    Point vertex(Index v) const { return vertices_.col(v); }

    std::span<const Index> element(Index k) const {
        return {connectivity_.data() + k * (dim_ + 1), static_cast<std::size_t>(dim_ + 1)};
    }
    Index element_face(Index k, int j) const { return element_faces_[static_cast<std::size_t>(k * (dim_ + 1) + j)]; }
    /// Local index of global vertex v inside element k, or -1.
    int local_vertex(Index k, Index v) const;

    const Face& face(Index f) const { return faces_[static_cast<std::size_t>(f)]; }
    const std::vector<Face>& faces() const { return faces_; }
    const ElementGeometry& geometry(Index k) const { return geometry_[static_cast<std::size_t>(k)]; }

    bool is_boundary_vertex(Index v) const { return boundary_vertex_[static_cast<std::size_t>(v)]; }
    /// Elements containing vertex v, ascending.
    const std::vector<Index>& vertex_star(Index v) const { return stars_[static_cast<std::size_t>(v)]; }

    /// gamma_M = max_K h_K / rho_K
    double shape_coefficient() const;
    double h_max() const;

    Bary barycentric(Index k, const Point& x) const;
    Point point(Index k, const Bary& lambda) const;

    /// Coarse-element index of every element after refinement (empty otherwise).
    const std::vector<Index>& parents() const { return parents_; }

private:
    int dim_;
    Mat vertices_;
    std::vector<Index> connectivity_;
    std::vector<Index> element_faces_;
    std::vector<Face> faces_;
    std::vector<ElementGeometry> geometry_;
    std::vector<bool> boundary_vertex_;
    std::vector<std::vector<Index>> stars_;
    std::vector<Index> parents_;

    void build_faces();
    void check_hanging_vertices() const;
};

/// Measure of the n-simplex spanned by the columns of `vertices` (d x (n+1)).
double simplex_measure(const Mat& vertices);

/// Exact integral of prod lambda_z^{alpha_z} over the simplex spanned by the
/// columns of `vertices`: n! alpha! / (n + |alpha|)! |C|.
double integrate_barycentric_monomial(const Mat& vertices, std::span<const int> alpha);

/// Red refinement (d = 2): every triangle is split into four similar ones.
Mesh refine_uniform(const Mesh& mesh);

/// Largest ratios |K|/|K'| and h_K/rho_K' over element pairs sharing a vertex.
struct NeighborBounds {
    double measure_ratio = 0.0;
    double diameter_inradius_ratio = 0.0;
};
NeighborBounds neighbor_bounds(const Mesh& mesh);

}  // namespace ncfem
