#pragma once

// Broken polynomial spaces: one Bernstein-Bezier coefficient block per cell,
// where the cells are either the mesh elements or the Clough-Tocher
// sub-triangles (sub-triangle j of K is opposite vertex j and has vertices
// z_{j+1}, z_{j+2}, m_K).

#include "ncfem/mesh.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace ncfem {

enum class Partition { elements, clough_tocher };

struct Cell {
    Index element = -1;
    int sub = 0;
    Mat vertices;            // d x (d+1)
    GradLambda grad_lambda;  // d x (d+1)
    double measure = 0.0;
    Mat in_element;          // column i: element barycentrics of cell vertex i
};

class BrokenLayout {
public:
    BrokenLayout(std::shared_ptr<const Mesh> mesh, Partition partition, int degree);

    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
    Partition partition() const { return partition_; }
    int degree() const { return degree_; }
    int dim() const { return mesh_->dim(); }
    int nvars() const { return mesh_->dim() + 1; }

    Index local_size() const { return local_size_; }
    Index num_cells() const { return static_cast<Index>(cells_->size()); }
    Index size() const { return num_cells() * local_size_; }
    Index offset(Index cell) const { return cell * local_size_; }
    const Cell& cell(Index c) const { return (*cells_)[static_cast<std::size_t>(c)]; }

    int cells_per_element() const { return partition_ == Partition::elements ? 1 : 3; }
    Index first_cell(Index element) const { return element * cells_per_element(); }

    /// Same mesh and partition (degrees may differ).
    bool compatible(const BrokenLayout& other) const {
        return mesh_ == other.mesh_ && partition_ == other.partition_;
    }

    /// Cell containing the point with element barycentrics `lambda`, and the
    /// barycentrics with respect to that cell.
    std::pair<Index, Bary> locate(Index element, const Bary& lambda) const;

    BrokenLayout with_degree(int degree) const;

private:
    BrokenLayout(std::shared_ptr<const Mesh> mesh, Partition partition, int degree,
                 std::shared_ptr<const std::vector<Cell>> cells);

    std::shared_ptr<const Mesh> mesh_;
    Partition partition_;
    int degree_;
    Index local_size_;
    std::shared_ptr<const std::vector<Cell>> cells_;
};

/// Exact embedding of broken polynomials from one layout into another (degree
/// elevation and/or Clough-Tocher subdivision). Rows: `to`, columns: `from`.
SpMat transfer(const BrokenLayout& from, const BrokenLayout& to);

/// Evaluation functionals on one cell, acting on its local coefficient block.
Eigen::RowVectorXd value_row(const BrokenLayout& layout, Index cell, const Bary& lambda);
/// d x local_size, row i = d/dx_i
Mat gradient_rows(const BrokenLayout& layout, Index cell, const Bary& lambda);
/// (d*d) x local_size, row i*d+j = d^2/dx_i dx_j
Mat hessian_rows(const BrokenLayout& layout, Index cell, const Bary& lambda);

/// One side of a mesh face inside a layout.
struct FaceSide {
    Index cell = -1;
    int opposite = -1;       // cell-local vertex not on the face
    std::vector<int> local;  // cell-local index of each face vertex (ascending global id)
};
FaceSide face_side(const BrokenLayout& layout, Index face, int side);

/// Cell barycentrics of a point given by face barycentrics (ascending face
/// vertex order).
Bary face_to_cell(const FaceSide& side, const Eigen::Ref<const Vec>& mu, int nvars);

/// Trace on the face as Bernstein coefficients over the face simplex in
/// ascending global vertex order; dense face_size x local_size selection.
Mat trace_matrix(const BrokenLayout& layout, const FaceSide& side);

/// Mean over the face of the trace seen from one side (row over the cell block).
Eigen::RowVectorXd face_mean_row(const BrokenLayout& layout, const FaceSide& side);

/// Mean over the face of grad v . n seen from one side.
Eigen::RowVectorXd normal_mean_row(const BrokenLayout& layout, const FaceSide& side, const Point& n);

}  // namespace ncfem
