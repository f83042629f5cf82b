#include "ncfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace ncfem {

double simplex_measure(const Mat& vertices) {
    const Index n = vertices.cols() - 1;
    if (n == 0) return 1.0;
    Mat J(vertices.rows(), n);
    for (Index i = 0; i < n; ++i) J.col(i) = vertices.col(i + 1) - vertices.col(0);
    const double g = (J.transpose() * J).determinant();
    return std::sqrt(std::max(g, 0.0)) / factorial(static_cast<int>(n));
}

double integrate_barycentric_monomial(const Mat& vertices, std::span<const int> alpha) {
    const int n = static_cast<int>(vertices.cols()) - 1;
    if (static_cast<int>(alpha.size()) != n + 1)
        throw Error("integrate_barycentric_monomial: multi-index length must equal the vertex count");
    for (int a : alpha)
        if (a < 0) throw Error("integrate_barycentric_monomial: negative exponent");
    return barycentric_monomial_integral(n, alpha) * simplex_measure(vertices);
}

Mesh::Mesh(Mat vertices, std::vector<std::vector<Index>> elements, std::vector<Index> parents)
    : dim_(static_cast<int>(vertices.rows())), vertices_(std::move(vertices)), parents_(std::move(parents)) {
    if (dim_ != 2 && dim_ != 3) throw MeshError("mesh: dimension must be 2 or 3");
    if (elements.empty()) throw MeshError("mesh: no elements");
    const Index nv = vertices_.cols();
    const int nloc = dim_ + 1;
    connectivity_.reserve(elements.size() * static_cast<std::size_t>(nloc));
    for (std::size_t k = 0; k < elements.size(); ++k) {
        if (static_cast<int>(elements[k].size()) != nloc)
            throw MeshError("mesh: element " + std::to_string(k) + " does not have d+1 vertices");
        for (Index v : elements[k]) {
            if (v < 0 || v >= nv) throw MeshError("mesh: element " + std::to_string(k) + " references invalid vertex");
            connectivity_.push_back(v);
        }
        auto sorted = elements[k];
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw MeshError("mesh: element " + std::to_string(k) + " repeats a vertex");
    }
    if (!parents_.empty() && parents_.size() != elements.size()) throw MeshError("mesh: parent map size mismatch");

    geometry_.resize(elements.size());
    for (Index k = 0; k < num_elements(); ++k) {
        auto verts = element(k);
        Mat B(dim_, dim_);
        double h = 0.0;
        for (int i = 0; i < nloc; ++i)
            for (int j = i + 1; j < nloc; ++j)
                h = std::max(h, (vertices_.col(verts[i]) - vertices_.col(verts[j])).norm());
        for (int i = 0; i < dim_; ++i) B.col(i) = vertices_.col(verts[i + 1]) - vertices_.col(verts[0]);
        const double det = B.determinant();
        const double measure = std::abs(det) / factorial(dim_);
        if (!(measure > 1e-13 * std::pow(h, dim_)))
            throw MeshError("mesh: element " + std::to_string(k) + " is degenerate (zero measure)");
        auto& g = geometry_[static_cast<std::size_t>(k)];
        g.measure = measure;
        g.diameter = h;
        const Mat Binv = B.inverse();
        g.grad_lambda.resize(dim_, nloc);
        for (int i = 0; i < dim_; ++i) g.grad_lambda.col(i + 1) = Binv.row(i).transpose();
        g.grad_lambda.col(0) = -g.grad_lambda.rightCols(dim_).rowwise().sum();
        g.barycenter = Point::Zero(dim_);
        for (int i = 0; i < nloc; ++i) g.barycenter += vertices_.col(verts[i]) / nloc;
        double surface = 0.0;
        for (int j = 0; j < nloc; ++j) {
            Mat fv(dim_, dim_);
            int c = 0;
            for (int i = 0; i < nloc; ++i)
                if (i != j) fv.col(c++) = vertices_.col(verts[i]);
            surface += simplex_measure(fv);
        }
        g.inradius_diameter = 2.0 * dim_ * measure / surface;
    }

    stars_.assign(static_cast<std::size_t>(nv), {});
    for (Index k = 0; k < num_elements(); ++k)
        for (Index v : element(k)) stars_[static_cast<std::size_t>(v)].push_back(k);

    build_faces();
    check_hanging_vertices();
}

void Mesh::build_faces() {
    const int nloc = dim_ + 1;
    std::map<std::vector<Index>, Index> lookup;
    element_faces_.assign(connectivity_.size(), -1);
    for (Index k = 0; k < num_elements(); ++k) {
        auto verts = element(k);
        for (int j = 0; j < nloc; ++j) {
            std::vector<Index> key;
            for (int i = 0; i < nloc; ++i)
                if (i != j) key.push_back(verts[i]);
            std::sort(key.begin(), key.end());
            auto [it, inserted] = lookup.try_emplace(key, static_cast<Index>(faces_.size()));
            if (inserted) {
                Face f;
                f.vertices = key;
                f.elements[0] = k;
                f.local[0] = j;
                faces_.push_back(std::move(f));
            } else {
                Face& f = faces_[static_cast<std::size_t>(it->second)];
                if (f.elements[1] >= 0) {
                    std::string msg = "mesh: non-face-to-face configuration, face (";
                    for (Index v : key) msg += std::to_string(v) + " ";
                    msg += ") has more than two incident elements";
                    throw MeshError(msg);
                }
                f.elements[1] = k;
                f.local[1] = j;
            }
            element_faces_[static_cast<std::size_t>(k * nloc + j)] = it->second;
        }
    }
    boundary_vertex_.assign(static_cast<std::size_t>(num_vertices()), false);
    for (auto& f : faces_) {
        Mat fv(dim_, dim_);
        for (int i = 0; i < dim_; ++i) fv.col(i) = vertices_.col(f.vertices[static_cast<std::size_t>(i)]);
        f.measure = simplex_measure(fv);
        f.midpoint = fv.rowwise().mean();
        const auto& g = geometry_[static_cast<std::size_t>(f.elements[0])];
        Point n = -g.grad_lambda.col(f.local[0]);
        f.normal = n / n.norm();
        if (f.boundary())
            for (Index v : f.vertices) boundary_vertex_[static_cast<std::size_t>(v)] = true;
    }
}

void Mesh::check_hanging_vertices() const {
    // A vertex strictly inside a boundary-classified face means that face is
    // really covered by several smaller faces on the other side.
    for (std::size_t fi = 0; fi < faces_.size(); ++fi) {
        const Face& f = faces_[fi];
        if (!f.boundary()) continue;
        Mat fv(dim_, dim_);
        for (int i = 0; i < dim_; ++i) fv.col(i) = vertices_.col(f.vertices[static_cast<std::size_t>(i)]);
        Point lo = fv.rowwise().minCoeff(), hi = fv.rowwise().maxCoeff();
        const double scale = (hi - lo).norm();
        const double tol = 1e-10 * scale;
        Mat J(dim_, dim_ - 1);
        for (int i = 0; i < dim_ - 1; ++i) J.col(i) = fv.col(i + 1) - fv.col(0);
        const auto qr = J.colPivHouseholderQr();
        for (Index v = 0; v < num_vertices(); ++v) {
            if (std::find(f.vertices.begin(), f.vertices.end(), v) != f.vertices.end()) continue;
            const Point x = vertices_.col(v);
            if (((x - lo).array() < -tol).any() || ((x - hi).array() > tol).any()) continue;
            const Vec t = qr.solve(Vec(x - fv.col(0)));
            if ((J * t - (x - fv.col(0))).norm() > tol) continue;
            if ((t.array() < -1e-10).any() || t.sum() > 1.0 + 1e-10) continue;
            std::string msg = "mesh: non-face-to-face configuration (hanging vertex " + std::to_string(v) + " on face ";
            for (Index w : f.vertices) msg += std::to_string(w) + " ";
            msg += ")";
            throw MeshError(msg);
        }
    }
}

Index Mesh::num_interior_faces() const {
    return std::count_if(faces_.begin(), faces_.end(), [](const Face& f) { return !f.boundary(); });
}

int Mesh::local_vertex(Index k, Index v) const {
    auto verts = element(k);
    for (int i = 0; i <= dim_; ++i)
        if (verts[i] == v) return i;
    return -1;
}

double Mesh::shape_coefficient() const {
    double g = 0.0;
    for (const auto& e : geometry_) g = std::max(g, e.shape_coefficient());
    return g;
}

double Mesh::h_max() const {
    double h = 0.0;
    for (const auto& e : geometry_) h = std::max(h, e.diameter);
    return h;
}

Bary Mesh::barycentric(Index k, const Point& x) const {
    const auto& g = geometry(k);
    const Point d = x - vertices_.col(element(k)[0]);
    Bary lambda(dim_ + 1);
    for (int z = 0; z <= dim_; ++z) lambda(z) = (z == 0 ? 1.0 : 0.0) + g.grad_lambda.col(z).dot(d);
    return lambda;
}

Point Mesh::point(Index k, const Bary& lambda) const {
    Point x = Point::Zero(dim_);
    auto verts = element(k);
    for (int z = 0; z <= dim_; ++z) x += lambda(z) * vertices_.col(verts[z]);
    return x;
}

Mesh refine_uniform(const Mesh& mesh) {
    if (mesh.dim() != 2) throw MeshError("refine_uniform: only d = 2 is supported");
    const Index nv = mesh.num_vertices();
    Mat verts(2, nv + mesh.num_faces());
    verts.leftCols(nv) = mesh.vertices();
    for (Index f = 0; f < mesh.num_faces(); ++f) verts.col(nv + f) = mesh.face(f).midpoint;
    std::vector<std::vector<Index>> elements;
    std::vector<Index> parents;
    elements.reserve(static_cast<std::size_t>(4 * mesh.num_elements()));
    for (Index k = 0; k < mesh.num_elements(); ++k) {
        auto v = mesh.element(k);
        // midpoint of the edge opposite local vertex j
        const Index m0 = nv + mesh.element_face(k, 0);
        const Index m1 = nv + mesh.element_face(k, 1);
        const Index m2 = nv + mesh.element_face(k, 2);
        elements.push_back({v[0], m2, m1});
        elements.push_back({m2, v[1], m0});
        elements.push_back({m1, m0, v[2]});
        elements.push_back({m0, m1, m2});
        for (int i = 0; i < 4; ++i) parents.push_back(k);
    }
    return Mesh(std::move(verts), std::move(elements), std::move(parents));
}

NeighborBounds neighbor_bounds(const Mesh& mesh) {
    NeighborBounds b;
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        const auto& star = mesh.vertex_star(v);
        for (Index k : star)
            for (Index kk : star) {
                const auto& g = mesh.geometry(k);
                const auto& gg = mesh.geometry(kk);
                b.measure_ratio = std::max(b.measure_ratio, g.measure / gg.measure);
                b.diameter_inradius_ratio = std::max(b.diameter_inradius_ratio, g.diameter / gg.inradius_diameter);
            }
    }
    return b;
}

}  // namespace ncfem
