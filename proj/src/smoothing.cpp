#include "ncfem/smoothing.hpp"

#include "ncfem/bernstein.hpp"

#include <map>
#include <mutex>
#include <set>
#include <tuple>

namespace ncfem {

namespace {

SpMat prune(const SpMat& m) {
    double scale = 0.0;
    for (Index k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    return m.pruned(scale, 1e-15);
}

// Matrix of v -> phi * v from degree `in_degree` to in_degree + phi_degree.
Mat multiplication_matrix(const Vec& phi, int phi_degree, int nvars, int in_degree) {
    const Index n = multi_indices(nvars, in_degree).size();
    Mat M(multi_indices(nvars, in_degree + phi_degree).size(), n);
    for (Index j = 0; j < n; ++j) {
        Vec e = Vec::Zero(n);
        e(j) = 1.0;
        M.col(j) = bb::multiply<double>(e, in_degree, phi, phi_degree, nvars);
    }
    return M;
}

// Product of the barycentrics listed in `which` (all others absent).
Vec barycentric_product(int nvars, const std::vector<int>& which) {
    const int deg = static_cast<int>(which.size());
    const auto& set = multi_indices(nvars, deg);
    MultiIndex a(static_cast<std::size_t>(nvars), 0);
    for (int z : which) a[static_cast<std::size_t>(z)] = 1;
    Vec c = Vec::Zero(set.size());
    c(set.find(a)) = 1.0 / factorial(deg);
    return c;
}

const Mat& weighted_projection(int nvars, int in_degree, int out_degree) {
    static std::mutex mutex;
    static std::map<std::tuple<int, int, int>, Mat> cache;
    std::lock_guard lock(mutex);
    auto key = std::make_tuple(nvars, in_degree, out_degree);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    if (out_degree < 0) throw Error("weighted projection: negative target degree");
    const auto& set = multi_indices(nvars, out_degree);
    const MultiIndex ones(static_cast<std::size_t>(nvars), 1);
    Mat G(set.size(), set.size());
    for (Index i = 0; i < set.size(); ++i)
        for (Index j = 0; j < set.size(); ++j)
            G(i, j) = triple_product_mean(nvars, set[i], out_degree, set[j], out_degree, ones, nvars) / factorial(nvars);
    Eigen::LDLT<Mat> ldlt(G);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
        throw NumericalError("weighted projection: bubble-weighted Gram matrix is not positive definite");
    Mat Q = ldlt.solve(BernsteinTables::product_mean(nvars, out_degree, in_degree));
    return cache.emplace(key, std::move(Q)).first->second;
}

void push_block(std::vector<Triplet>& trips, Index row0, Index col0, const Mat& block) {
    for (Index j = 0; j < block.cols(); ++j)
        for (Index i = 0; i < block.rows(); ++i)
            if (block(i, j) != 0.0) trips.emplace_back(row0 + i, col0 + j, block(i, j));
}

void require_source(const DofSpace& s, std::initializer_list<SpaceKind> kinds, const char* what) {
    for (SpaceKind k : kinds)
        if (s.kind == k) return;
    throw ConfigError(std::string(what) + ": unsupported source space " + s.name());
}

}  // namespace

const Mat& face_weighted_projection(int nvars, int in_degree, int out_degree) {
    return weighted_projection(nvars, in_degree, out_degree);
}

const Mat& element_weighted_projection(int nvars, int in_degree, int out_degree) {
    return weighted_projection(nvars, in_degree, out_degree);
}

SmoothingMap nodal_averaging(const DofSpace& source) {
    if (source.layout.partition() != Partition::elements) throw ConfigError("nodal averaging needs an element layout");
    DofSpace lag = lagrange_space(source.layout.mesh_ptr(), source.layout.degree());
    SpMat c = prune(lag.functionals * source.basis);
    return {"A_" + std::to_string(source.layout.degree()), source, std::move(lag), std::move(c)};
}

SmoothingMap face_bubble_smoother(const DofSpace& cr) {
    require_source(cr, {SpaceKind::cr}, "face bubble smoother");
    auto mesh = cr.layout.mesh_ptr();
    DofSpace fb = face_bubble_space(mesh);
    DofSpace target = lagrange_space(mesh, mesh->dim());
    const SpMat Y = fb.basis * (fb.functionals * (transfer(cr.layout, fb.layout) * cr.basis));
    SpMat c = prune(target.functionals * Y);
    return {"B", cr, std::move(target), std::move(c)};
}

SmoothingMap moment_smoother(const DofSpace& source, Fault fault) {
    require_source(source, {SpaceKind::cr, SpaceKind::gl}, "moment smoother");
    auto mesh = source.layout.mesh_ptr();
    const int p = source.layout.degree(), d = mesh->dim(), nv = d + 1;
    const int q = p + d - 1;
    const BrokenLayout& Lp = source.layout;
    const BrokenLayout Lq = Lp.with_degree(q);

    const DofSpace lag = lagrange_space(mesh, p);
    const SpMat X = source.basis;
    const SpMat LA = lag.basis * (lag.functionals * X);
    const SpMat Elev = transfer(Lp, Lq);
    SpMat Y = Elev * LA;

    if (fault != Fault::skip_bubble) {
        const SpMat W = X - LA;
        // Face part: Q_F of the K1 trace, extended by Lagrange interpolation of
        // degree p - 1 (zero at the nodes off F) and multiplied by Phi_F.
        const int r = p - 1;
        const Mat& QF = face_weighted_projection(d, p, r);
        const BrokenLayout Lr = Lp.with_degree(r);
        const Mat& N2B = BernsteinTables::nodal_to_bernstein(nv, r);
        const Mat& Vface = BernsteinTables::vandermonde(d, r);
        std::vector<Triplet> trips;
        for (Index f = 0; f < mesh->num_faces(); ++f) {
            const Face& face = mesh->face(f);
            if (face.boundary()) continue;
            const FaceSide s1 = face_side(Lp, f, 0);
            const Mat moments = QF * trace_matrix(Lp, s1);
            for (int side = 0; side < 2; ++side) {
                const FaceSide s = face_side(Lp, f, side);
                std::vector<int> on_face;
                for (int z = 0; z < nv; ++z)
                    if (z != s.opposite) on_face.push_back(z);
                const Mat ext = r == 0 ? Mat::Ones(1, 1) : Mat(N2B * trace_matrix(Lr, s).transpose() * Vface);
                const Mat block = multiplication_matrix(barycentric_product(nv, on_face), d, nv, r) * ext * moments;
                push_block(trips, Lq.offset(s.cell), Lp.offset(s1.cell), block);
            }
        }
        SpMat BF(Lq.size(), Lp.size());
        BF.setFromTriplets(trips.begin(), trips.end());
        const SpMat BFW = BF * W;
        Y += BFW;
        if (p >= 2) {
            std::vector<int> all(static_cast<std::size_t>(nv));
            for (int z = 0; z < nv; ++z) all[static_cast<std::size_t>(z)] = z;
            const Mat block = multiplication_matrix(barycentric_product(nv, all), nv, nv, p - 2) *
                              element_weighted_projection(nv, q, p - 2);
            std::vector<Triplet> mt;
            for (Index k = 0; k < Lq.num_cells(); ++k) push_block(mt, Lq.offset(k), Lq.offset(k), block);
            SpMat BM(Lq.size(), Lq.size());
            BM.setFromTriplets(mt.begin(), mt.end());
            Y += BM * (SpMat(Elev * W) - BFW);
        }
    }
    DofSpace target = lagrange_space(mesh, q);
    SpMat c = prune(target.functionals * Y);
    std::string name = "E_" + std::to_string(p);
    if (fault == Fault::skip_bubble) name += "[skip-bubble]";
    return {name, source, std::move(target), std::move(c)};
}

SmoothingMap hct_averaging(const DofSpace& morley, const DofSpace& hct) {
    require_source(morley, {SpaceKind::morley}, "HCT averaging");
    const SpMat Z = transfer(morley.layout, hct.layout) * morley.basis;
    SpMat c = prune(hct.functionals * Z);
    return {"A_HCT", morley, hct, std::move(c)};
}

DofSpace hct_bubble_space(const DofSpace& hct, const DofSpace& bubbles) {
    const BrokenLayout L9 = hct.layout.with_degree(9);
    const SpMat a = transfer(hct.layout, L9) * hct.basis;
    const SpMat b = transfer(bubbles.layout, L9) * bubbles.basis;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(a.nonZeros() + b.nonZeros()));
    for (Index k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    for (Index k = 0; k < b.outerSize(); ++k)
        for (SpMat::InnerIterator it(b, k); it; ++it) trips.emplace_back(it.row(), a.cols() + it.col(), it.value());
    DofSpace s{SpaceKind::block, 9, L9, SpMat(L9.size(), a.cols() + b.cols()), {}, hct.dofs};
    s.basis.setFromTriplets(trips.begin(), trips.end());
    s.basis = prune(s.basis);
    for (const auto& dof : bubbles.dofs) s.dofs.push_back({"bubble-" + dof.type, dof.entity, dof.component});
    return s;
}

SmoothingMap morley_smoother(const DofSpace& morley, Fault fault) {
    require_source(morley, {SpaceKind::morley}, "Morley smoother");
    auto mesh = morley.layout.mesh_ptr();
    const DofSpace hct = hct_space(mesh);
    const DofSpace mb = morley_bubble_space(mesh);
    const SpMat Z = transfer(morley.layout, hct.layout) * morley.basis;
    const SpMat a = hct.functionals * Z;
    SpMat c;
    if (fault == Fault::skip_bubble) {
        c.resize(mb.size(), morley.size());
    } else {
        // normal-derivative means of the remainder, seen from K1
        const SpMat R = Z - hct.basis * a;
        std::vector<Triplet> trips;
        for (Index i = 0; i < mb.size(); ++i) {
            const Index f = mb.dofs[static_cast<std::size_t>(i)].entity;
            const FaceSide s = face_side(hct.layout, f, 0);
            const Eigen::RowVectorXd row = normal_mean_row(hct.layout, s, mesh->face(f).normal);
            for (Index j = 0; j < row.size(); ++j)
                if (row(j) != 0.0) trips.emplace_back(i, hct.layout.offset(s.cell) + j, row(j));
        }
        SpMat D(mb.size(), hct.layout.size());
        D.setFromTriplets(trips.begin(), trips.end());
        c = D * R;
    }
    DofSpace target = hct_bubble_space(hct, mb);
    std::vector<Triplet> trips;
    for (Index k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    for (Index k = 0; k < c.outerSize(); ++k)
        for (SpMat::InnerIterator it(c, k); it; ++it) trips.emplace_back(a.rows() + it.row(), it.col(), it.value());
    SpMat coeffs(target.size(), morley.size());
    coeffs.setFromTriplets(trips.begin(), trips.end());
    std::string name = fault == Fault::skip_bubble ? "E_MR[skip-bubble]" : "E_MR";
    return {name, morley, std::move(target), prune(coeffs)};
}

SmoothingMap build_smoother(const DofSpace& source, Fault fault) {
    switch (source.kind) {
        case SpaceKind::cr:
        case SpaceKind::gl: return moment_smoother(source, fault);
        case SpaceKind::morley: return morley_smoother(source, fault);
        default: throw ConfigError("no smoother for space " + source.name());
    }
}

namespace {

std::vector<std::set<Index>> column_supports(const SpMat& m, const BrokenLayout& layout, double tolerance) {
    std::vector<std::set<Index>> out(static_cast<std::size_t>(m.cols()));
    for (Index j = 0; j < m.outerSize(); ++j) {
        double scale = 0.0;
        for (SpMat::InnerIterator it(m, j); it; ++it) scale = std::max(scale, std::abs(it.value()));
        for (SpMat::InnerIterator it(m, j); it; ++it)
            if (std::abs(it.value()) > tolerance * scale)
                out[static_cast<std::size_t>(j)].insert(layout.cell(it.row() / layout.local_size()).element);
    }
    return out;
}

}  // namespace

LocalityReport locality(const SmoothingMap& map, double tolerance) {
    const Mesh& mesh = map.source.layout.mesh();
    const auto image = column_supports(map.images(), map.target.layout, tolerance);
    const auto support = column_supports(map.source.basis, map.source.layout, tolerance);
    LocalityReport r;
    for (std::size_t j = 0; j < image.size(); ++j) {
        r.max_footprint = std::max<Index>(r.max_footprint, static_cast<Index>(image[j].size()));
        std::set<Index> hood;
        for (Index k : support[j])
            for (Index v : mesh.element(k))
                for (Index kk : mesh.vertex_star(v)) hood.insert(kk);
        for (Index k : image[j])
            if (!hood.count(k)) {
                ++r.violations;
                break;
            }
    }
    return r;
}

}  // namespace ncfem
