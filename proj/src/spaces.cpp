#include "ncfem/spaces.hpp"

#include "ncfem/bernstein.hpp"
#include "ncfem/parallel.hpp"
#include "ncfem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace ncfem {

std::string to_string(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::broken: return "broken";
        case SpaceKind::lagrange: return "lagrange";
        case SpaceKind::cr: return "cr";
        case SpaceKind::gl: return "gl";
        case SpaceKind::morley: return "morley";
        case SpaceKind::hct: return "hct";
        case SpaceKind::face_bubbles: return "face-bubbles";
        case SpaceKind::morley_bubbles: return "morley-bubbles";
        case SpaceKind::block: return "block";
    }
    return "unknown";
}

std::string DofSpace::name() const {
    std::string n = to_string(kind);
    if (kind == SpaceKind::lagrange || kind == SpaceKind::gl || kind == SpaceKind::broken)
        n += ":" + std::to_string(degree);
    return n;
}

double duality_residual(const DofSpace& space) {
    if (!space.has_functionals()) throw Error("duality_residual: " + space.name() + " has no dof functionals");
    SpMat R = space.functionals * space.basis;
    double r = 0.0;
    for (Index k = 0; k < R.outerSize(); ++k)
        for (SpMat::InnerIterator it(R, k); it; ++it)
            r = std::max(r, std::abs(it.value() - (it.row() == it.col() ? 1.0 : 0.0)));
    for (Index i = 0; i < R.rows(); ++i)
        if (R.coeff(i, i) == 0.0) r = std::max(r, 1.0);
    return r;
}

void require_full_rank(const DofSpace& space, double tolerance) {
    if (space.size() == 0) return;
    const SpMat G = SpMat(space.basis.transpose() * space.basis);
    Eigen::SimplicialLDLT<SpMat> ldlt(G);
    if (ldlt.info() != Eigen::Success) throw NumericalError(space.name() + ": basis Gram factorization failed");
    const Vec D = ldlt.vectorD();
    const double scale = G.diagonal().maxCoeff();
    if (D.minCoeff() <= tolerance * scale)
        throw NumericalError(space.name() + ": basis is rank deficient (pivot " + std::to_string(D.minCoeff() / scale) +
                             ")");
}

namespace {

void push_block(std::vector<Triplet>& trips, Index row0, Index col, const Eigen::Ref<const Vec>& v, double tol = 0.0) {
    for (Index i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) > tol) trips.emplace_back(row0 + i, col, v(i));
}

void push_row(std::vector<Triplet>& trips, Index row, Index col0, const Eigen::Ref<const Eigen::RowVectorXd>& v) {
    for (Index i = 0; i < v.size(); ++i)
        if (v(i) != 0.0) trips.emplace_back(row, col0 + i, v(i));
}

SpMat from_triplets(Index rows, Index cols, const std::vector<Triplet>& trips) {
    SpMat M(rows, cols);
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

void require_multi_element(const Mesh& mesh, const char* what) {
    if (mesh.num_elements() < 2) throw ConfigError(std::string(what) + " needs a mesh with more than one element");
}

}  // namespace

LagrangeNodes lagrange_nodes(const Mesh& mesh, int p) {
    if (p < 1) throw ConfigError("Lagrange nodes need p >= 1");
    const int nv = mesh.dim() + 1;
    LagrangeNodes out;
    out.degree = p;
    std::set<std::vector<Index>> boundary_sets;
    for (const Face& f : mesh.faces()) {
        if (!f.boundary()) continue;
        const int m = static_cast<int>(f.vertices.size());
        for (int mask = 1; mask < (1 << m); ++mask) {
            std::vector<Index> s;
            for (int i = 0; i < m; ++i)
                if (mask & (1 << i)) s.push_back(f.vertices[static_cast<std::size_t>(i)]);
            boundary_sets.insert(s);
        }
    }
    const auto& set = multi_indices(nv, p);
    std::map<std::vector<std::pair<Index, int>>, Index> lookup;
    out.element_nodes.resize(static_cast<std::size_t>(mesh.num_elements()));
    for (Index k = 0; k < mesh.num_elements(); ++k) {
        auto verts = mesh.element(k);
        auto& local = out.element_nodes[static_cast<std::size_t>(k)];
        local.reserve(static_cast<std::size_t>(set.size()));
        for (Index i = 0; i < set.size(); ++i) {
            std::vector<std::pair<Index, int>> key;
            for (int z = 0; z < nv; ++z)
                if (set[i][static_cast<std::size_t>(z)] > 0) key.emplace_back(verts[z], set[i][static_cast<std::size_t>(z)]);
            std::sort(key.begin(), key.end());
            auto [it, inserted] = lookup.try_emplace(key, static_cast<Index>(out.points.size()));
            if (inserted) {
                Point x = Point::Zero(mesh.dim());
                std::vector<Index> support;
                for (auto& [v, a] : key) {
                    x += (double(a) / p) * mesh.vertex(v);
                    support.push_back(v);
                }
                out.points.push_back(x);
                out.boundary.push_back(boundary_sets.count(support) > 0);
                out.owner.push_back(k);
                out.owner_local.push_back(i);
                out.support.push_back(std::move(support));
            }
            local.push_back(it->second);
        }
    }
    out.dof.assign(out.points.size(), -1);
    for (std::size_t n = 0; n < out.points.size(); ++n)
        if (!out.boundary[n]) out.dof[n] = out.num_interior++;
    return out;
}

DofSpace broken_space(const BrokenLayout& layout) {
    DofSpace s{SpaceKind::broken, layout.degree(), layout, {}, {}, {}};
    s.basis.resize(layout.size(), layout.size());
    s.basis.setIdentity();
    s.functionals = s.basis;
    s.dofs.resize(static_cast<std::size_t>(layout.size()));
    for (Index i = 0; i < layout.size(); ++i) s.dofs[static_cast<std::size_t>(i)] = {"coefficient", i, 0};
    return s;
}

DofSpace lagrange_space(std::shared_ptr<const Mesh> mesh, int p) {
    const LagrangeNodes nodes = lagrange_nodes(*mesh, p);
    BrokenLayout layout(mesh, Partition::elements, p);
    const int nv = layout.nvars();
    const Mat& N2B = BernsteinTables::nodal_to_bernstein(nv, p);
    const Mat& V = BernsteinTables::vandermonde(nv, p);
    std::vector<Triplet> basis, fun;
    for (Index k = 0; k < mesh->num_elements(); ++k) {
        const auto& local = nodes.element_nodes[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < local.size(); ++i) {
            const Index dof = nodes.dof[static_cast<std::size_t>(local[i])];
            if (dof >= 0) push_block(basis, layout.offset(k), dof, N2B.col(static_cast<Index>(i)), 1e-15);
        }
    }
    DofSpace s{SpaceKind::lagrange, p, layout, {}, {}, {}};
    s.dofs.resize(static_cast<std::size_t>(nodes.num_interior));
    for (std::size_t n = 0; n < nodes.points.size(); ++n) {
        const Index dof = nodes.dof[n];
        if (dof < 0) continue;
        push_row(fun, dof, layout.offset(nodes.owner[n]), V.row(nodes.owner_local[n]));
        s.dofs[static_cast<std::size_t>(dof)] = {"node-value", static_cast<Index>(n), 0};
    }
    s.basis = from_triplets(layout.size(), nodes.num_interior, basis);
    s.functionals = from_triplets(nodes.num_interior, layout.size(), fun);
    return s;
}

DofSpace cr_space(std::shared_ptr<const Mesh> mesh) {
    require_multi_element(*mesh, "the Crouzeix-Raviart space");
    BrokenLayout layout(mesh, Partition::elements, 1);
    const int d = mesh->dim();
    std::vector<Triplet> basis, fun;
    DofSpace s{SpaceKind::cr, 1, layout, {}, {}, {}};
    Index n = 0;
    for (Index f = 0; f < mesh->num_faces(); ++f) {
        const Face& face = mesh->face(f);
        if (face.boundary()) continue;
        for (int side = 0; side < 2; ++side) {
            const Index k = face.elements[static_cast<std::size_t>(side)];
            const int j = face.local[static_cast<std::size_t>(side)];
            Vec c = Vec::Ones(d + 1);
            c(j) = 1.0 - d;
            push_block(basis, layout.offset(k), n, c);
        }
        push_row(fun, n, layout.offset(face.elements[0]), face_mean_row(layout, face_side(layout, f, 0)));
        s.dofs.push_back({"face-mean", f, 0});
        ++n;
    }
    s.basis = from_triplets(layout.size(), n, basis);
    s.functionals = from_triplets(n, layout.size(), fun);
    return s;
}

SpMat jump_constraints(const BrokenLayout& layout, int q_degree) {
    const Mesh& mesh = layout.mesh();
    const int d = mesh.dim();
    const Mat& P = BernsteinTables::product_mean(d, q_degree, layout.degree());
    std::vector<Triplet> trips;
    Index row = 0;
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        const Face& face = mesh.face(f);
        for (int side = 0; side < (face.boundary() ? 1 : 2); ++side) {
            const FaceSide s = face_side(layout, f, side);
            const Mat R = (side == 0 ? 1.0 : -1.0) * P * trace_matrix(layout, s);
            for (Index i = 0; i < R.rows(); ++i) push_row(trips, row + i, layout.offset(s.cell), R.row(i));
        }
        row += P.rows();
    }
    return from_triplets(row, layout.size(), trips);
}

namespace {

Vec legendre_values(int p, const Vec& t) {
    // Legendre polynomial L_p on [-1, 1] by the three-term recurrence.
    Vec prev = Vec::Ones(t.size()), cur = t;
    if (p == 0) return prev;
    for (int n = 1; n < p; ++n) {
        Vec next = ((2.0 * n + 1.0) * t.cwiseProduct(cur) - n * prev) / (n + 1.0);
        prev = std::move(cur);
        cur = std::move(next);
    }
    return cur;
}

DofSpace gl_even_local(std::shared_ptr<const Mesh> mesh, int p) {
    DofSpace lag = lagrange_space(mesh, p);
    const BrokenLayout& layout = lag.layout;
    const auto& set = multi_indices(3, p);
    const Mat& N2B = BernsteinTables::nodal_to_bernstein(3, p);
    // Element bubble: nodal values L_p(t) at the boundary nodes of K, zero
    // inside; its trace on every edge is L_p, orthogonal to P_{p-1}.
    Vec nodal = Vec::Zero(set.size());
    for (Index i = 0; i < set.size(); ++i) {
        const auto& a = set[i];
        for (int j = 0; j < 3; ++j) {
            if (a[static_cast<std::size_t>(j)] != 0) continue;
            const double t = double(a[static_cast<std::size_t>((j + 2) % 3)] - a[static_cast<std::size_t>((j + 1) % 3)]) / p;
            nodal(i) = legendre_values(p, Vec::Constant(1, t))(0);
        }
    }
    const Vec bubble = N2B * nodal;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(lag.basis.nonZeros() + mesh->num_elements() * set.size()));
    for (Index c = 0; c < lag.basis.outerSize(); ++c)
        for (SpMat::InnerIterator it(lag.basis, c); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    const Index n0 = lag.size();
    for (Index k = 0; k < mesh->num_elements(); ++k) {
        push_block(trips, layout.offset(k), n0 + k, bubble, 1e-15);
        lag.dofs.push_back({"element-bubble", k, 0});
    }
    DofSpace s{SpaceKind::gl, p, layout, from_triplets(layout.size(), n0 + mesh->num_elements(), trips), {}, lag.dofs};
    return s;
}

DofSpace gl_odd_local(std::shared_ptr<const Mesh> mesh, int p) {
    BrokenLayout layout(mesh, Partition::elements, p);
    const Index nloc = layout.local_size();
    const Index nmom = polynomial_dimension(2, p - 3);
    Vec t, w;
    gauss_jacobi(p, 0, t, w);
    const Mat& moments = BernsteinTables::product_mean(3, std::max(p - 3, 0), p);
    const Index ne = mesh->num_elements();
    std::vector<Mat> dual(static_cast<std::size_t>(ne)), local(static_cast<std::size_t>(ne));
    parallel_for(ne, [&](Index k) {
        auto verts = mesh->element(k);
        Mat D(nloc, nloc);
        Index r = 0;
        for (int j = 0; j < 3; ++j) {
            int a = (j + 1) % 3, b = (j + 2) % 3;
            if (verts[a] > verts[b]) std::swap(a, b);
            for (int i = 0; i < p; ++i) {
                Bary lambda = Bary::Zero(3);
                lambda(a) = 1.0 - t(i);
                lambda(b) = t(i);
                D.row(r++) = bb::basis_values<double>(p, lambda).transpose();
            }
        }
        if (nmom > 0) D.bottomRows(nmom) = moments;
        Eigen::FullPivLU<Mat> lu(D);
        if (!lu.isInvertible()) throw NumericalError("GL local dofs are not unisolvent on element " + std::to_string(k));
        dual[static_cast<std::size_t>(k)] = D;
        local[static_cast<std::size_t>(k)] = lu.inverse();
    });
    std::vector<Triplet> basis, fun;
    DofSpace s{SpaceKind::gl, p, layout, {}, {}, {}};
    Index n = 0;
    for (Index f = 0; f < mesh->num_faces(); ++f) {
        const Face& face = mesh->face(f);
        if (face.boundary()) continue;
        for (int i = 0; i < p; ++i) {
            for (int side = 0; side < 2; ++side) {
                const Index k = face.elements[static_cast<std::size_t>(side)];
                const Index col = face.local[static_cast<std::size_t>(side)] * p + i;
                push_block(basis, layout.offset(k), n, local[static_cast<std::size_t>(k)].col(col), 1e-15);
            }
            const Index k1 = face.elements[0];
            push_row(fun, n, layout.offset(k1), dual[static_cast<std::size_t>(k1)].row(face.local[0] * p + i));
            s.dofs.push_back({"gauss-value", f, i});
            ++n;
        }
    }
    for (Index k = 0; k < ne; ++k)
        for (Index m = 0; m < nmom; ++m) {
            push_block(basis, layout.offset(k), n, local[static_cast<std::size_t>(k)].col(3 * p + m), 1e-15);
            push_row(fun, n, layout.offset(k), dual[static_cast<std::size_t>(k)].row(3 * p + m));
            s.dofs.push_back({"element-moment", k, static_cast<int>(m)});
            ++n;
        }
    s.basis = from_triplets(layout.size(), n, basis);
    s.functionals = from_triplets(n, layout.size(), fun);
    return s;
}

DofSpace gl_kernel(std::shared_ptr<const Mesh> mesh, int p) {
    BrokenLayout layout(mesh, Partition::elements, p);
    if (layout.size() > 6000) throw ConfigError("GL kernel route is limited to small meshes (dense SVD)");
    const Mat C = Mat(jump_constraints(layout, p - 1));
    Eigen::BDCSVD<Mat> svd(C, Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 1.0;
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) {
        const double rel = sv(i) / smax;
        if (rel > 1e-8)
            ++rank;
        else if (rel > 1e-12)
            throw NumericalError("GL kernel: singular value " + std::to_string(rel) +
                                 " (relative) lies in the rank dead zone [1e-12, 1e-8]; review the mesh");
    }
    const Mat null = svd.matrixV().rightCols(layout.size() - rank);
    Eigen::HouseholderQR<Mat> qr(null);
    Mat Q = qr.householderQ() * Mat::Identity(null.rows(), null.cols());
    const Mat R = qr.matrixQR().topRows(null.cols()).triangularView<Eigen::Upper>();
    for (Index j = 0; j < Q.cols(); ++j)
        if (R(j, j) < 0) Q.col(j) *= -1.0;
    DofSpace s{SpaceKind::gl, p, layout, Q.sparseView(1.0, 1e-15), {}, {}};
    s.functionals = SpMat(s.basis.transpose());
    for (Index j = 0; j < Q.cols(); ++j) s.dofs.push_back({"kernel", j, 0});
    return s;
}

}  // namespace

DofSpace gl_space(std::shared_ptr<const Mesh> mesh, int p, GlRoute route) {
    require_multi_element(*mesh, "the GL space");
    if (p < 1) throw ConfigError("GL space needs p >= 1");
    if (p == 1) {
        DofSpace s = cr_space(mesh);
        s.kind = SpaceKind::gl;
        return s;
    }
    DofSpace s = (route == GlRoute::kernel || mesh->dim() != 2) ? gl_kernel(mesh, p)
                 : p % 2 == 0                                   ? gl_even_local(mesh, p)
                                                                : gl_odd_local(mesh, p);
    require_full_rank(s);
    return s;
}

namespace {

void require_planar(const Mesh& mesh, const char* what) {
    if (mesh.dim() != 2) throw ConfigError(std::string(what) + " requires d = 2");
}

}  // namespace

DofSpace morley_space(std::shared_ptr<const Mesh> mesh) {
    require_planar(*mesh, "the Morley space");
    require_multi_element(*mesh, "the Morley space");
    BrokenLayout layout(mesh, Partition::elements, 2);
    const Index ne = mesh->num_elements();
    std::vector<Mat> dual(static_cast<std::size_t>(ne)), local(static_cast<std::size_t>(ne));
    parallel_for(ne, [&](Index k) {
        Mat D(6, 6);
        for (int i = 0; i < 3; ++i) {
            const Bary e = Bary::Unit(3, i);
            D.row(i) = bb::basis_values<double>(2, e).transpose();
        }
        for (int j = 0; j < 3; ++j) {
            const Index f = mesh->element_face(k, j);
            const Face& face = mesh->face(f);
            const int side = face.elements[0] == k ? 0 : 1;
            D.row(3 + j) = normal_mean_row(layout, face_side(layout, f, side), face.normal);
        }
        Eigen::JacobiSVD<Mat> svd(D);
        const double cond = svd.singularValues()(0) / svd.singularValues()(5);
        if (!(cond < 1e12)) throw NumericalError("Morley local dual system is singular on element " + std::to_string(k));
        dual[static_cast<std::size_t>(k)] = D;
        local[static_cast<std::size_t>(k)] = D.inverse();
    });
    std::vector<Triplet> basis, fun;
    DofSpace s{SpaceKind::morley, 2, layout, {}, {}, {}};
    Index n = 0;
    for (Index v = 0; v < mesh->num_vertices(); ++v) {
        if (mesh->is_boundary_vertex(v)) continue;
        const auto& star = mesh->vertex_star(v);
        for (Index k : star)
            push_block(basis, layout.offset(k), n, local[static_cast<std::size_t>(k)].col(mesh->local_vertex(k, v)), 1e-15);
        const Index kz = star.front();
        push_row(fun, n, layout.offset(kz), dual[static_cast<std::size_t>(kz)].row(mesh->local_vertex(kz, v)));
        s.dofs.push_back({"vertex-value", v, 0});
        ++n;
    }
    for (Index f = 0; f < mesh->num_faces(); ++f) {
        const Face& face = mesh->face(f);
        if (face.boundary()) continue;
        for (int side = 0; side < 2; ++side) {
            const Index k = face.elements[static_cast<std::size_t>(side)];
            push_block(basis, layout.offset(k), n, local[static_cast<std::size_t>(k)].col(3 + face.local[static_cast<std::size_t>(side)]), 1e-15);
        }
        const Index k1 = face.elements[0];
        push_row(fun, n, layout.offset(k1), dual[static_cast<std::size_t>(k1)].row(3 + face.local[0]));
        s.dofs.push_back({"normal-mean", f, 0});
        ++n;
    }
    s.basis = from_triplets(layout.size(), n, basis);
    s.functionals = from_triplets(n, layout.size(), fun);
    return s;
}

namespace {

// Barycentrics of an element point with respect to Clough-Tocher sub-triangle j.
Bary sub_barycentric(int j, const Bary& lambda) {
    Bary mu(3);
    mu(0) = lambda((j + 1) % 3) - lambda(j);
    mu(1) = lambda((j + 2) % 3) - lambda(j);
    mu(2) = 3.0 * lambda(j);
    return mu;
}

struct HctLocal {
    Mat basis;  // 30 x 12, physical dofs
    Mat dofs;   // 12 x 30, physical dofs
};

HctLocal hct_local(const BrokenLayout& layout, Index k, double max_condition) {
    const Mesh& mesh = layout.mesh();
    const double h = mesh.geometry(k).diameter;
    const Index nl = layout.local_size();  // 10
    auto cell = [&](int j) { return layout.first_cell(k) + j; };
    // C^1 matching across the three interior edges z_i - m_K.
    Mat C = Mat::Zero(30, 3 * nl);
    Index r = 0;
    const double vs[4] = {0.1, 0.37, 0.64, 0.9};
    const double gs[3] = {0.15, 0.5, 0.85};
    for (int i = 0; i < 3; ++i) {
        const int a = (i + 1) % 3, b = (i + 2) % 3;
        auto on_edge = [&](double s) {
            Bary lambda = Bary::Constant(3, s / 3.0);
            lambda(i) += 1.0 - s;
            return lambda;
        };
        for (double s : vs) {
            const Bary lambda = on_edge(s);
            C.block(r, a * nl, 1, nl) = value_row(layout, cell(a), sub_barycentric(a, lambda));
            C.block(r, b * nl, 1, nl) = -value_row(layout, cell(b), sub_barycentric(b, lambda));
            ++r;
        }
        for (double s : gs) {
            const Bary lambda = on_edge(s);
            C.block(r, a * nl, 2, nl) = h * gradient_rows(layout, cell(a), sub_barycentric(a, lambda));
            C.block(r, b * nl, 2, nl) = -h * gradient_rows(layout, cell(b), sub_barycentric(b, lambda));
            r += 2;
        }
    }
    Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-9 * sv(0)) ++rank;
    if (3 * nl - rank != 12)
        throw NumericalError("HCT: C^1 constraint rank " + std::to_string(rank) + " on element " + std::to_string(k));
    const Mat N = svd.matrixV().rightCols(12);
    // Scaled dofs: value, h d/dx, h d/dy at each vertex, h d/dn at midpoints.
    Mat D = Mat::Zero(12, 3 * nl);
    Vec scale = Vec::Ones(12);
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 2) % 3;  // sub-triangle with z_i as local vertex 0
        const Bary e0 = Bary::Unit(3, 0);
        D.block(3 * i, j * nl, 1, nl) = value_row(layout, cell(j), e0);
        D.block(3 * i + 1, j * nl, 2, nl) = h * gradient_rows(layout, cell(j), e0);
        scale(3 * i + 1) = scale(3 * i + 2) = h;
    }
    for (int j = 0; j < 3; ++j) {
        const Face& face = mesh.face(mesh.element_face(k, j));
        Bary mid(3);
        mid << 0.5, 0.5, 0.0;
        D.block(9 + j, j * nl, 1, nl) = h * face.normal.transpose() * gradient_rows(layout, cell(j), mid);
        scale(9 + j) = h;
    }
    const Mat DN = D * N;
    Eigen::JacobiSVD<Mat> dsvd(DN);
    const double cond = dsvd.singularValues()(0) / dsvd.singularValues()(11);
    if (!(cond <= max_condition))
        throw NumericalError("HCT: local system on element " + std::to_string(k) + " has condition " +
                             std::to_string(cond) + " above the limit");
    HctLocal out;
    out.basis = N * DN.inverse();
    for (int c = 0; c < 12; ++c) out.basis.col(c) *= scale(c);
    out.dofs = scale.cwiseInverse().asDiagonal() * D;
    return out;
}

}  // namespace

DofSpace hct_space(std::shared_ptr<const Mesh> mesh, double max_condition) {
    require_planar(*mesh, "the HCT space");
    BrokenLayout layout(mesh, Partition::clough_tocher, 3);
    const Index ne = mesh->num_elements();
    std::vector<HctLocal> local(static_cast<std::size_t>(ne));
    parallel_for(ne, [&](Index k) { local[static_cast<std::size_t>(k)] = hct_local(layout, k, max_condition); });
    std::vector<Triplet> basis, fun;
    DofSpace s{SpaceKind::hct, 3, layout, {}, {}, {}};
    auto base = [&](Index k) { return layout.offset(layout.first_cell(k)); };
    Index n = 0;
    for (Index v = 0; v < mesh->num_vertices(); ++v) {
        if (mesh->is_boundary_vertex(v)) continue;
        const auto& star = mesh->vertex_star(v);
        for (int c = 0; c < 3; ++c) {
            for (Index k : star)
                push_block(basis, base(k), n, local[static_cast<std::size_t>(k)].basis.col(3 * mesh->local_vertex(k, v) + c), 1e-15);
            const Index kz = star.front();
            push_row(fun, n, base(kz), local[static_cast<std::size_t>(kz)].dofs.row(3 * mesh->local_vertex(kz, v) + c));
            s.dofs.push_back({c == 0 ? "vertex-value" : "vertex-gradient", v, c == 0 ? 0 : c - 1});
            ++n;
        }
    }
    for (Index f = 0; f < mesh->num_faces(); ++f) {
        const Face& face = mesh->face(f);
        if (face.boundary()) continue;
        for (int side = 0; side < 2; ++side) {
            const Index k = face.elements[static_cast<std::size_t>(side)];
            push_block(basis, base(k), n, local[static_cast<std::size_t>(k)].basis.col(9 + face.local[static_cast<std::size_t>(side)]), 1e-15);
        }
        const Index k1 = face.elements[0];
        push_row(fun, n, base(k1), local[static_cast<std::size_t>(k1)].dofs.row(9 + face.local[0]));
        s.dofs.push_back({"midpoint-normal-derivative", f, 0});
        ++n;
    }
    s.basis = from_triplets(layout.size(), n, basis);
    s.functionals = from_triplets(n, layout.size(), fun);
    return s;
}

std::pair<double, double> bubble_normalization_factors(int dim) {
    // Face means of prod lambda_z and of prod lambda_z^4 over a face simplex.
    const std::vector<int> ones(static_cast<std::size_t>(dim), 1), fours(static_cast<std::size_t>(dim), 4);
    const double cr_enforced = 1.0 / barycentric_monomial_integral(dim - 1, ones);
    const double cr_printed = factorial(2 * dim) / factorial(dim);
    const double mr_enforced = 1.0 / barycentric_monomial_integral(dim - 1, fours);
    const double mr_printed = 30.0;
    return {cr_printed / cr_enforced, mr_printed / mr_enforced};
}

DofSpace face_bubble_space(std::shared_ptr<const Mesh> mesh) {
    require_multi_element(*mesh, "face bubbles");
    const int d = mesh->dim();
    BrokenLayout layout(mesh, Partition::elements, d);
    const auto& set = multi_indices(d + 1, d);
    const std::vector<int> ones(static_cast<std::size_t>(d), 1);
    // prod_{z in F} lambda_z = B_alpha / d!, alpha the indicator of F
    const double coefficient = 1.0 / (factorial(d) * barycentric_monomial_integral(d - 1, ones));
    std::vector<Triplet> basis, fun;
    DofSpace s{SpaceKind::face_bubbles, d, layout, {}, {}, {}};
    Index n = 0;
    for (Index f = 0; f < mesh->num_faces(); ++f) {
        const Face& face = mesh->face(f);
        if (face.boundary()) continue;
        for (int side = 0; side < 2; ++side) {
            MultiIndex a(static_cast<std::size_t>(d + 1), 1);
            a[static_cast<std::size_t>(face.local[static_cast<std::size_t>(side)])] = 0;
            basis.emplace_back(layout.offset(face.elements[static_cast<std::size_t>(side)]) + set.find(a), n, coefficient);
        }
        push_row(fun, n, layout.offset(face.elements[0]), face_mean_row(layout, face_side(layout, f, 0)));
        s.dofs.push_back({"face-mean", f, 0});
        ++n;
    }
    s.basis = from_triplets(layout.size(), n, basis);
    s.functionals = from_triplets(n, layout.size(), fun);
    return s;
}

Vec affine_coefficients(const Mesh& mesh, Index k, const std::function<double(const Point&)>& f) {
    auto verts = mesh.element(k);
    Vec c(mesh.dim() + 1);
    for (int i = 0; i <= mesh.dim(); ++i) c(i) = f(mesh.vertex(verts[i]));
    return c;
}

DofSpace morley_bubble_space(std::shared_ptr<const Mesh> mesh) {
    require_planar(*mesh, "Morley bubbles");
    require_multi_element(*mesh, "Morley bubbles");
    BrokenLayout layout(mesh, Partition::elements, 9);
    const std::vector<int> fours(2, 4);
    const double normalization = 1.0 / barycentric_monomial_integral(1, fours);
    std::vector<Triplet> basis, fun;
    DofSpace s{SpaceKind::morley_bubbles, 9, layout, {}, {}, {}};
    Index n = 0;
    for (Index f = 0; f < mesh->num_faces(); ++f) {
        const Face& face = mesh->face(f);
        if (face.boundary()) continue;
        for (int side = 0; side < 2; ++side) {
            const Index k = face.elements[static_cast<std::size_t>(side)];
            Vec poly = Vec::Constant(1, normalization);
            int deg = 0;
            for (Index z : face.vertices)
                for (Index owner : face.elements) {
                    const int lz = mesh->local_vertex(owner, z);
                    const Vec lam = affine_coefficients(*mesh, k, [&](const Point& x) { return mesh->barycentric(owner, x)(lz); });
                    const Vec sq = bb::multiply<double>(lam, 1, lam, 1, 3);
                    poly = bb::multiply<double>(poly, deg, sq, 2, 3);
                    deg += 2;
                }
            const Vec zeta = affine_coefficients(*mesh, k, [&](const Point& x) { return (x - face.midpoint).dot(face.normal); });
            poly = bb::multiply<double>(poly, deg, zeta, 1, 3);
            push_block(basis, layout.offset(k), n, poly, 1e-15);
        }
        push_row(fun, n, layout.offset(face.elements[0]), normal_mean_row(layout, face_side(layout, f, 0), face.normal));
        s.dofs.push_back({"normal-mean", f, 0});
        ++n;
    }
    s.basis = from_triplets(layout.size(), n, basis);
    s.functionals = from_triplets(n, layout.size(), fun);
    return s;
}

Vec cr_interpolate(const DofSpace& cr, const ScalarFunction& u, int rule_degree) {
    if (cr.kind != SpaceKind::cr) throw Error("cr_interpolate: not a Crouzeix-Raviart space");
    const Mesh& mesh = cr.layout.mesh();
    const auto& rule = simplex_rule(mesh.dim() - 1, rule_degree);
    Vec out(cr.size());
    for (Index i = 0; i < cr.size(); ++i) {
        const Face& face = mesh.face(cr.dofs[static_cast<std::size_t>(i)].entity);
        double mean = 0.0;
        for (Index q = 0; q < rule.size(); ++q) {
            Point x = Point::Zero(mesh.dim());
            for (std::size_t v = 0; v < face.vertices.size(); ++v) x += rule.points(static_cast<Index>(v), q) * mesh.vertex(face.vertices[v]);
            mean += rule.weights(q) * u(x);
        }
        out(i) = mean;
    }
    return out;
}

std::pair<Mat, double> coordinates(const DofSpace& space, const Mat& broken) {
    if (!space.has_functionals()) throw Error("coordinates: " + space.name() + " has no dof functionals");
    Mat c = space.functionals * broken;
    const double r = broken.size() ? (space.basis * c - broken).cwiseAbs().maxCoeff() : 0.0;
    return {c, r};
}

}  // namespace ncfem
