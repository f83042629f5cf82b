#include "ncfem/layout.hpp"

#include "ncfem/bernstein.hpp"

#include <map>
#include <mutex>

namespace ncfem {

namespace {

Mat clough_tocher_bary(int j) {
    Mat W = Mat::Zero(3, 3);
    W((j + 1) % 3, 0) = 1.0;
    W((j + 2) % 3, 1) = 1.0;
    W.col(2).setConstant(1.0 / 3.0);
    return W;
}

Cell make_cell(const Mesh& mesh, Index k, int sub, const Mat& W) {
    Cell c;
    c.element = k;
    c.sub = sub;
    c.in_element = W;
    const int d = mesh.dim();
    Mat ev(d, d + 1);
    auto verts = mesh.element(k);
    for (int i = 0; i <= d; ++i) ev.col(i) = mesh.vertex(verts[i]);
    c.vertices = ev * W;
    Mat B(d, d);
    for (int i = 0; i < d; ++i) B.col(i) = c.vertices.col(i + 1) - c.vertices.col(0);
    c.measure = std::abs(B.determinant()) / factorial(d);
    const Mat Binv = B.inverse();
    c.grad_lambda.resize(d, d + 1);
    for (int i = 0; i < d; ++i) c.grad_lambda.col(i + 1) = Binv.row(i).transpose();
    c.grad_lambda.col(0) = -c.grad_lambda.rightCols(d).rowwise().sum();
    return c;
}

// Reference subdivision matrix onto Clough-Tocher sub-triangle j.
const Mat& subdivision_matrix(int degree, int j) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, Mat> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find({degree, j});
    if (it != cache.end()) return it->second;
    const Index n = multi_indices(3, degree).size();
    const Mat W = clough_tocher_bary(j);
    Mat S(n, n);
    for (Index c = 0; c < n; ++c) {
        Vec e = Vec::Zero(n);
        e(c) = 1.0;
        S.col(c) = bb::subdivide<double>(e, 3, degree, W);
    }
    return cache.emplace(std::make_pair(degree, j), std::move(S)).first->second;
}

}  // namespace

BrokenLayout::BrokenLayout(std::shared_ptr<const Mesh> mesh, Partition partition, int degree)
    : mesh_(std::move(mesh)), partition_(partition), degree_(degree) {
    if (!mesh_) throw Error("BrokenLayout: null mesh");
    if (degree < 0) throw Error("BrokenLayout: negative degree");
    if (partition_ == Partition::clough_tocher && mesh_->dim() != 2)
        throw ConfigError("Clough-Tocher split requires d = 2");
    local_size_ = multi_indices(nvars(), degree).size();
    auto cells = std::make_shared<std::vector<Cell>>();
    const Index ne = mesh_->num_elements();
    if (partition_ == Partition::elements) {
        const Mat I = Mat::Identity(nvars(), nvars());
        cells->reserve(static_cast<std::size_t>(ne));
        for (Index k = 0; k < ne; ++k) cells->push_back(make_cell(*mesh_, k, 0, I));
    } else {
        cells->reserve(static_cast<std::size_t>(3 * ne));
        for (Index k = 0; k < ne; ++k)
            for (int j = 0; j < 3; ++j) cells->push_back(make_cell(*mesh_, k, j, clough_tocher_bary(j)));
    }
    cells_ = std::move(cells);
}

BrokenLayout::BrokenLayout(std::shared_ptr<const Mesh> mesh, Partition partition, int degree,
                           std::shared_ptr<const std::vector<Cell>> cells)
    : mesh_(std::move(mesh)), partition_(partition), degree_(degree), cells_(std::move(cells)) {
    local_size_ = multi_indices(nvars(), degree).size();
}

BrokenLayout BrokenLayout::with_degree(int degree) const {
    if (degree < 0) throw Error("BrokenLayout: negative degree");
    return BrokenLayout(mesh_, partition_, degree, cells_);
}

std::pair<Index, Bary> BrokenLayout::locate(Index element, const Bary& lambda) const {
    if (partition_ == Partition::elements) return {element, lambda};
    int j = 0;
    for (int i = 1; i < 3; ++i)
        if (lambda(i) < lambda(j)) j = i;
    Bary mu(3);
    mu(0) = lambda((j + 1) % 3) - lambda(j);
    mu(1) = lambda((j + 2) % 3) - lambda(j);
    mu(2) = 3.0 * lambda(j);
    return {3 * element + j, mu};
}

SpMat transfer(const BrokenLayout& from, const BrokenLayout& to) {
    if (from.mesh_ptr() != to.mesh_ptr()) throw Error("transfer: layouts live on different meshes");
    if (to.degree() < from.degree()) throw Error("transfer: target degree below source degree");
    const bool split = from.partition() == Partition::elements && to.partition() == Partition::clough_tocher;
    if (from.partition() == Partition::clough_tocher && to.partition() == Partition::elements)
        throw Error("transfer: cannot merge Clough-Tocher cells into elements");
    const int nv = from.nvars();
    const Mat& E = BernsteinTables::elevation(nv, from.degree(), to.degree());
    std::vector<Triplet> trips;
    auto push = [&](Index row0, Index col0, const Mat& block) {
        for (Index j = 0; j < block.cols(); ++j)
            for (Index i = 0; i < block.rows(); ++i)
                if (block(i, j) != 0.0) trips.emplace_back(row0 + i, col0 + j, block(i, j));
    };
    if (!split) {
        for (Index c = 0; c < from.num_cells(); ++c) push(to.offset(c), from.offset(c), E);
    } else {
        for (Index k = 0; k < from.num_cells(); ++k)
            for (int j = 0; j < 3; ++j) push(to.offset(3 * k + j), from.offset(k), E * subdivision_matrix(from.degree(), j));
    }
    SpMat T(to.size(), from.size());
    T.setFromTriplets(trips.begin(), trips.end());
    return T;
}

Eigen::RowVectorXd value_row(const BrokenLayout& layout, Index, const Bary& lambda) {
    return bb::basis_values<double>(layout.degree(), lambda).transpose();
}

Mat gradient_rows(const BrokenLayout& layout, Index cell, const Bary& lambda) {
    const int d = layout.dim(), nv = layout.nvars(), p = layout.degree();
    Mat G = Mat::Zero(d, layout.local_size());
    if (p == 0) return G;
    const auto& g = layout.cell(cell).grad_lambda;
    const Eigen::RowVectorXd b = bb::basis_values<double>(p - 1, lambda).transpose();
    for (int z = 0; z < nv; ++z) {
        const Eigen::RowVectorXd dz = b * BernsteinTables::derivative(nv, p, z);
        for (int i = 0; i < d; ++i) G.row(i) += g(i, z) * dz;
    }
    return G;
}

Mat hessian_rows(const BrokenLayout& layout, Index cell, const Bary& lambda) {
    const int d = layout.dim(), nv = layout.nvars(), p = layout.degree();
    Mat H = Mat::Zero(d * d, layout.local_size());
    if (p < 2) return H;
    const auto& g = layout.cell(cell).grad_lambda;
    const Eigen::RowVectorXd b = bb::basis_values<double>(p - 2, lambda).transpose();
    for (int z = 0; z < nv; ++z) {
        const Eigen::RowVectorXd bz = b * BernsteinTables::derivative(nv, p - 1, z);
        for (int y = 0; y < nv; ++y) {
            const Eigen::RowVectorXd dzy = bz * BernsteinTables::derivative(nv, p, y);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) H.row(i * d + j) += g(i, z) * g(j, y) * dzy;
        }
    }
    return H;
}

FaceSide face_side(const BrokenLayout& layout, Index face, int side) {
    const Mesh& mesh = layout.mesh();
    const Face& f = mesh.face(face);
    const Index k = f.elements[static_cast<std::size_t>(side)];
    if (k < 0) throw Error("face_side: boundary face has no second side");
    const int j = f.local[static_cast<std::size_t>(side)];
    FaceSide s;
    s.local.resize(f.vertices.size());
    if (layout.partition() == Partition::elements) {
        s.cell = k;
        s.opposite = j;
        for (std::size_t i = 0; i < f.vertices.size(); ++i) s.local[i] = mesh.local_vertex(k, f.vertices[i]);
    } else {
        s.cell = 3 * k + j;
        s.opposite = 2;
        for (std::size_t i = 0; i < f.vertices.size(); ++i) {
            const int lv = mesh.local_vertex(k, f.vertices[i]);
            s.local[i] = lv == (j + 1) % 3 ? 0 : 1;
        }
    }
    return s;
}

Bary face_to_cell(const FaceSide& side, const Eigen::Ref<const Vec>& mu, int nvars) {
    Bary lambda = Bary::Zero(nvars);
    for (std::size_t i = 0; i < side.local.size(); ++i) lambda(side.local[i]) = mu(static_cast<Index>(i));
    return lambda;
}

Mat trace_matrix(const BrokenLayout& layout, const FaceSide& side) {
    const int nv = layout.nvars(), p = layout.degree();
    const auto& face_set = multi_indices(nv - 1, p);
    const auto& cell_set = multi_indices(nv, p);
    Mat T = Mat::Zero(face_set.size(), cell_set.size());
    MultiIndex a(static_cast<std::size_t>(nv));
    for (Index i = 0; i < face_set.size(); ++i) {
        std::fill(a.begin(), a.end(), 0);
        for (std::size_t v = 0; v < side.local.size(); ++v) a[static_cast<std::size_t>(side.local[v])] = face_set[i][v];
        T(i, cell_set.find(a)) = 1.0;
    }
    return T;
}

Eigen::RowVectorXd face_mean_row(const BrokenLayout& layout, const FaceSide& side) {
    const Mat T = trace_matrix(layout, side);
    return T.colwise().sum() / double(T.rows());
}

Eigen::RowVectorXd normal_mean_row(const BrokenLayout& layout, const FaceSide& side, const Point& n) {
    const int p = layout.degree(), nv = layout.nvars();
    if (p == 0) return Eigen::RowVectorXd::Zero(layout.local_size());
    const BrokenLayout lower = layout.with_degree(p - 1);
    const auto& g = layout.cell(side.cell).grad_lambda;
    Mat Dn = Mat::Zero(lower.local_size(), layout.local_size());
    for (int z = 0; z < nv; ++z) Dn += g.col(z).dot(n) * BernsteinTables::derivative(nv, p, z);
    return face_mean_row(lower, side) * Dn;
}

}  // namespace ncfem
