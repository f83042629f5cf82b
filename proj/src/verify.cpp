#include "ncfem/verify.hpp"

#include "ncfem/mesh_io.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace ncfem {

namespace {

SpMat symmetric_part(const SpMat& A) { return SpMat(0.5 * (A + SpMat(A.transpose()))); }

void require_positive(const Eigen::SimplicialLDLT<SpMat>& ldlt, const char* what) {
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
        throw NumericalError(std::string(what) + ": Gram matrix is not positive definite");
}

// Number of values above tol * max; values inside [tol/100, tol*100] * max
// make the count ambiguous and are reported.
Index gap_rank(const Vec& values, double tol, const char* what) {
    if (values.size() == 0) return 0;
    const double top = values.cwiseAbs().maxCoeff();
    if (top == 0.0) return 0;
    Index r = 0;
    for (Index i = 0; i < values.size(); ++i) {
        const double v = std::abs(values(i)) / top;
        if (v > 1e-2 * tol && v < 1e2 * tol)
            throw NumericalError(std::string(what) + ": singular value " + std::to_string(v) + " inside the rank dead zone");
        if (v > tol) ++r;
    }
    return r;
}

// L^{-1} M L^{-T} for G = L L^T.
Mat whitened(const Eigen::LLT<Mat>& llt, const Mat& M) {
    const Mat X = llt.matrixL().solve(M);
    return llt.matrixL().solve(X.transpose()).transpose();
}

Vec random_unit(Index n, std::mt19937& gen) {
    std::normal_distribution<double> dist;
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = dist(gen);
    return v / v.norm();
}

struct Quotient {
    std::function<double(const Vec&)> numerator, denominator;
};

void sample_rayleigh(SpectralReport& r, const Quotient& q, const Vec& top, const SpectralOptions& o, Index n) {
    std::mt19937 gen(o.seed);
    double best = 0.0;
    for (int i = 0; i < o.rayleigh_samples; ++i) {
        const Vec c = random_unit(n, gen);
        best = std::max(best, q.numerator(c) / q.denominator(c));
    }
    r.rayleigh_max = std::sqrt(best);
    if (top.size() == n) r.rayleigh_at_vector = std::sqrt(q.numerator(top) / q.denominator(top));
}

}  // namespace

GramPair gram_pair(const SmoothingMap& E, int order) {
    GramPair g;
    g.order = order;
    const BrokenLayout& T = E.target.layout;
    g.K = stiffness(T, order);
    g.XT = SpMat(transfer(E.source.layout, T) * E.source.basis);
    g.Y = E.images();
    g.C = E.coefficients;
    const SpMat KX = g.K * g.XT;
    const SpMat KY = g.K * g.Y;
    g.GS = symmetric_part(SpMat(g.XT.transpose() * KX));
    g.M = SpMat(g.XT.transpose() * KY);
    g.GT = symmetric_part(SpMat(g.Y.transpose() * KY));
    return g;
}

double right_inverse_residual(const GramPair& g) {
    const Index n = g.GS.rows();
    if (n == 0) return 0.0;
    Eigen::SimplicialLDLT<SpMat> ldlt(g.GS);
    require_positive(ldlt, "right-inverse residual");
    constexpr Index block = 256;
    double worst = 0.0;
    for (Index j0 = 0; j0 < n; j0 += block) {
        const Index b = std::min(block, n - j0);
        Mat R = ldlt.solve(Mat(g.M.middleCols(j0, b)));
        R.middleRows(j0, b) -= Mat::Identity(b, b);
        const Mat GR = g.GS * R;
        for (Index c = 0; c < b; ++c) {
            const double num = std::max(0.0, R.col(c).dot(GR.col(c)));
            worst = std::max(worst, std::sqrt(num / g.GS.coeff(j0 + c, j0 + c)));
        }
    }
    return worst;
}

double overconsistency_residual(const GramPair& g) {
    if (g.GS.nonZeros() == 0) return 0.0;
    const double scale = SpMat(g.GS).coeffs().cwiseAbs().maxCoeff();
    const SpMat D = g.M - g.GS;
    return D.nonZeros() == 0 ? 0.0 : D.coeffs().cwiseAbs().maxCoeff() / scale;
}

double conforming_invariance_residual(const GramPair& g, const SpMat& conforming) {
    if (conforming.cols() == 0) return 0.0;
    const SpMat D = g.Y * conforming - g.XT * conforming;
    const SpMat KD = g.K * D;
    const SpMat GC = g.GS * conforming;
    double worst = 0.0;
    for (Index j = 0; j < conforming.cols(); ++j) {
        const double num = std::max(0.0, D.col(j).dot(KD.col(j)));
        const double den = conforming.col(j).dot(GC.col(j));
        worst = std::max(worst, std::sqrt(num / den));
    }
    return worst;
}

SpMat conforming_subspace(const DofSpace& space) {
    if (space.kind == SpaceKind::morley) return morley_conforming_part(space).basis.sparseView();
    if (space.kind != SpaceKind::cr && space.kind != SpaceKind::gl)
        throw ConfigError("conforming subspace is defined for CR, GL and Morley spaces");
    const DofSpace lag = lagrange_space(space.layout.mesh_ptr(), space.kind == SpaceKind::cr ? 1 : space.degree);
    const SpMat V = transfer(lag.layout, space.layout) * lag.basis;
    SpMat C;
    if (space.has_functionals()) {
        C = space.functionals * V;
    } else {
        const SpMat B = space.basis;
        Eigen::SimplicialLDLT<SpMat> ldlt(SpMat(B.transpose() * B));
    require_positive(ldlt, "conforming subspace");
        C = ldlt.solve(SpMat(B.transpose() * V));
    }
    C.prune(1e-14, 1.0);
    const SpMat R = space.basis * C - V;
    const double res = R.nonZeros() == 0 ? 0.0 : R.coeffs().cwiseAbs().maxCoeff();
    if (res > 1e-9) throw NumericalError("S_0^p is not contained in " + space.name() + " (residual " + std::to_string(res) + ")");
    return C;
}

LanczosResult lanczos_max(const GeneralizedOperator& op, double tolerance, int max_steps) {
    const Index n = op.n;
    LanczosResult out;
    if (n == 0) return out;
    const Index m = std::min<Index>(n, max_steps);
    std::mt19937 gen(7);
    Vec v = random_unit(n, gen);
    for (int restart = 0; restart < 8; ++restart) {
        Mat Q(n, m + 1), BQ(n, m + 1);
        std::vector<double> alpha, beta;
        Vec Bv = op.apply_B(v);
        const double nv = std::sqrt(v.dot(Bv));
        Q.col(0) = v / nv;
        BQ.col(0) = Bv / nv;
        Vec ritz;
        for (Index j = 0; j < m; ++j) {
            const Vec Aq = op.apply_A(Q.col(j));
            alpha.push_back(Q.col(j).dot(Aq));
            Vec w = op.solve_B(Aq);
            for (int pass = 0; pass < 2; ++pass)
                w -= Q.leftCols(j + 1) * (BQ.leftCols(j + 1).transpose() * w);
            const Vec Bw = op.apply_B(w);
            const double b = std::sqrt(std::max(0.0, w.dot(Bw)));
            beta.push_back(b);

            Vec d = Eigen::Map<Vec>(alpha.data(), j + 1);
            Vec e = j > 0 ? Vec(Eigen::Map<Vec>(beta.data(), j)) : Vec();
            Eigen::SelfAdjointEigenSolver<Mat> tri;
            tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
            const Index top = j;  // eigenvalues ascending
            const double theta = tri.eigenvalues()(top);
            const double resid = std::abs(b * tri.eigenvectors()(j, top));
            const bool exhausted = j + 1 == n || b <= 1e-14 * std::abs(theta);
            out.value = theta;
            out.steps += 1;
            ritz = Q.leftCols(j + 1) * tri.eigenvectors().col(top);
            if (resid <= tolerance * std::abs(theta) || exhausted) {
                out.vector = ritz / std::sqrt(ritz.dot(op.apply_B(ritz)));
                out.converged = true;
                return out;
            }
            if (j + 1 < m + 1) {
                Q.col(j + 1) = w / b;
                BQ.col(j + 1) = Bw / b;
            }
        }
        v = ritz;
    }
    out.vector = v / std::sqrt(v.dot(op.apply_B(v)));
    return out;
}

SpectralReport spectral_report(const GramPair& g, const SpectralOptions& o) {
    SpectralReport r;
    const Index n = g.GS.rows();
    if (n == 0) throw ConfigError("spectral report of an empty space");
    r.dense = !o.force_iterative && n <= o.dense_limit;
    if (r.dense) {
        const Mat G(g.GS), M(g.M), GT(g.GT);
        Eigen::LLT<Mat> llt(G);
        if (llt.info() != Eigen::Success) throw NumericalError("spectral report: G_S is not positive definite");
        const Mat C = whitened(llt, M);
        Eigen::BDCSVD<Mat> svd(C);
        const Vec s = svd.singularValues();
        r.continuity = s(0);
        r.inf_sup = s(n - 1);
        r.degenerate = gap_rank(s, 1e-10, "spectral report") < n;
        r.cond = r.degenerate ? std::numeric_limits<double>::infinity() : r.continuity / r.inf_sup;
        const Mat X = llt.matrixL().solve(M);
        const Mat GPi = X.transpose() * X;  // M^T G^{-1} M
        Vec top;
        if (r.degenerate) {
            r.c_stab = r.c_qopt = std::numeric_limits<double>::infinity();
        } else {
            Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(GT, GPi);
            r.c_stab = std::sqrt(ges.eigenvalues()(n - 1));
            top = ges.eigenvectors().col(n - 1);
            const Mat P = llt.solve(M);
            const Mat Pinv = P.partialPivLu().inverse();
            Eigen::GeneralizedSelfAdjointEigenSolver<Mat> q(Mat(Pinv.transpose() * GT * Pinv), G, Eigen::EigenvaluesOnly);
            r.c_qopt = std::sqrt(q.eigenvalues()(n - 1));
        }
        if (o.proxy != nullptr && o.proxy->size() > 0 && o.proxy->size() <= 4 * o.dense_limit) {
            if (o.proxy->basis.rows() != g.K.rows()) throw ConfigError("spectral report: proxy must live on the target layout");
            const SpMat& V = o.proxy->basis;
            const SpMat KV = g.K * V;
            Eigen::LLT<Mat> lv{Mat(SpMat(V.transpose() * KV))};
            if (lv.info() != Eigen::Success) throw NumericalError("spectral report: proxy Gram matrix is singular");
            const Mat W = lv.matrixL().solve(Mat(SpMat(KV.transpose() * g.XT)));
            Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(Mat(W.transpose() * W), G, Eigen::EigenvaluesOnly);
            r.cos_min = std::sqrt(std::clamp(ges.eigenvalues()(0), 0.0, 1.0));
        }
        const Quotient q{[&](const Vec& c) { return c.dot(GT * c); }, [&](const Vec& c) { return c.dot(GPi * c); }};
        if (!r.degenerate) sample_rayleigh(r, q, top, o, n);
    } else {
        Eigen::SimplicialLDLT<SpMat> ldlt(g.GS);
    require_positive(ldlt, "spectral report");
        const bool same = overconsistency_residual(g) <= 1e-12;
        Eigen::SparseLU<SpMat> lu, lut;
        bool invertible = true;
        if (!same) {
            lu.compute(g.M);
            lut.compute(SpMat(g.M.transpose()));
            invertible = lu.info() == Eigen::Success && lut.info() == Eigen::Success;
        }
        auto apply_G = [&](const Vec& x) -> Vec { return g.GS * x; };
        auto apply_Pi = [&](const Vec& x) -> Vec { return same ? Vec(g.GS * x) : Vec(g.M.transpose() * ldlt.solve(Vec(g.M * x))); };
        auto solve_Pi = [&](const Vec& y) -> Vec {
            if (same) return ldlt.solve(y);
            return lu.solve(Vec(g.GS * lut.solve(y)));
        };
        auto solve_G = [&](const Vec& y) -> Vec { return ldlt.solve(y); };
        if (!invertible) {
            r.degenerate = true;
            r.cond = r.c_stab = std::numeric_limits<double>::infinity();
            return r;
        }
        const LanczosResult up = lanczos_max({n, apply_Pi, apply_G, solve_G});
        const LanczosResult down = lanczos_max({n, apply_G, apply_Pi, solve_Pi});
        r.continuity = std::sqrt(up.value);
        r.inf_sup = 1.0 / std::sqrt(down.value);
        r.cond = r.continuity / r.inf_sup;
        r.degenerate = !(r.inf_sup > 1e-10 * r.continuity);
        const LanczosResult st = lanczos_max({n, [&](const Vec& x) -> Vec { return g.GT * x; }, apply_Pi, solve_Pi});
        r.c_stab = std::sqrt(st.value);
        const Quotient q{[&](const Vec& c) { return c.dot(g.GT * c); }, [&](const Vec& c) { return c.dot(apply_Pi(c)); }};
        sample_rayleigh(r, q, st.vector, o, n);
    }
    return r;
}

double dense_condition_oracle(const GramPair& g) {
    const Mat G(g.GS), M(g.M);
    Eigen::SelfAdjointEigenSolver<Mat> eig(G);
    if (eig.eigenvalues().minCoeff() <= 0.0) throw NumericalError("condition oracle: G_S is not positive definite");
    const Mat R = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
    Eigen::JacobiSVD<Mat> svd(Mat(R * M * R));
    const Vec& s = svd.singularValues();
    return s(0) / s(s.size() - 1);
}

NondegeneracyReport nondegeneracy(const GramPair& g, double tol) {
    NondegeneracyReport r;
    r.n = g.GS.rows();
    const Mat G(g.GS), M(g.M);
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) throw NumericalError("nondegeneracy: G_S is not positive definite");

    // dim T from the column-normalized coefficients in the target basis
    Mat C(g.C);
    for (Index j = 0; j < C.cols(); ++j)
        if (C.col(j).norm() > 0.0) C.col(j).normalize();
    Eigen::BDCSVD<Mat> cs(C);
    r.rank_E = gap_rank(cs.singularValues(), tol, "rank of E");

    // (a) b_E through the singular values of L^{-1} M L^{-T}
    Eigen::BDCSVD<Mat> svd(whitened(llt, M));
    r.rank_b = gap_rank(svd.singularValues(), tol, "rank of b_E");
    r.b_nondegenerate = r.rank_b == r.n;

    // (b) Pi restricted to T through the coordinates P = G^{-1} M
    Eigen::FullPivLU<Mat> lu(llt.solve(M));
    lu.setThreshold(tol);
    r.rank_projection = lu.rank();
    r.projection_invertible = r.rank_projection == r.n && r.rank_E == r.n;

    // (c) S cap T^perp = null(M^T)
    Eigen::ColPivHouseholderQR<Mat> qr(Mat(M.transpose()));
    qr.setThreshold(tol * std::max(1.0, M.cwiseAbs().maxCoeff()));
    r.dim_s_cap_t_perp = r.n - qr.rank();
    r.trivial_intersection = r.dim_s_cap_t_perp == 0;
    return r;
}

SmoothingMap skewed_smoother(const SmoothingMap& E, double amount) {
    const Index n = E.source.size();
    std::vector<Triplet> t;
    for (Index j = 0; j < n; ++j) {
        t.emplace_back(j, j, 1.0);
        if (j > 0) t.emplace_back(j - 1, j, amount);
    }
    SpMat S(n, n);
    S.setFromTriplets(t.begin(), t.end());
    return {E.name + "-skew", E.source, E.target, SpMat(E.coefficients * S)};
}

ConformingPart morley_conforming_part(const DofSpace& morley) {
    if (morley.kind != SpaceKind::morley) throw ConfigError("conforming part is defined for the Morley space");
    const BrokenLayout& L = morley.layout;
    const Mesh& mesh = L.mesh();
    const Index ls = L.local_size();
    std::vector<Triplet> t;
    Index row = 0;
    auto add = [&](const FaceSide& side, const Eigen::RowVectorXd& r, double sign) {
        for (Index i = 0; i < ls; ++i)
            if (r(i) != 0.0) t.emplace_back(row, L.offset(side.cell) + i, sign * r(i));
    };
    const double g = std::sqrt(3.0) / 6.0;
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        const Face& face = mesh.face(f);
        const double h = face.measure;
        const bool interior = !face.boundary();
        const FaceSide a = face_side(L, f, 0);
        const FaceSide b = interior ? face_side(L, f, 1) : FaceSide{};
        if (interior)
            for (double s : {0.0, 0.5, 1.0}) {
                Vec mu(2);
                mu << 1.0 - s, s;
                add(a, value_row(L, a.cell, face_to_cell(a, mu, 3)), 1.0);
                add(b, value_row(L, b.cell, face_to_cell(b, mu, 3)), -1.0);
                ++row;
            }
        for (double s : {0.5 - g, 0.5 + g}) {
            Vec mu(2);
            mu << 1.0 - s, s;
            const Mat ga = gradient_rows(L, a.cell, face_to_cell(a, mu, 3));
            const Mat gb = interior ? gradient_rows(L, b.cell, face_to_cell(b, mu, 3)) : Mat();
            for (int c = 0; c < 2; ++c) {
                add(a, h * ga.row(c), 1.0);
                if (interior) add(b, h * gb.row(c), -1.0);
                ++row;
            }
        }
    }
    SpMat C(row, L.size());
    C.setFromTriplets(t.begin(), t.end());
    const Mat R(C * morley.basis);
    const Index n = morley.size();
    Eigen::BDCSVD<Mat> svd(R, Eigen::ComputeFullV);
    Vec s = Vec::Zero(n);
    s.head(std::min(n, R.rows())) = svd.singularValues().head(std::min(n, R.rows()));
    const Index rank = gap_rank(s, 1e-10, "Morley conforming part");
    ConformingPart out;
    out.dimension = n - rank;
    out.basis = svd.matrixV().rightCols(out.dimension);
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw ConfigError("slope fit needs at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]) / static_cast<double>(n);
        my += std::log(y[i]) / static_cast<double>(n);
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

BubbleInstabilityReport bubble_instability(const std::vector<int>& ns) {
    BubbleInstabilityReport out;
    const auto smooth = [](const Point& x) { return std::sin(std::numbers::pi * x(0)) * std::sin(std::numbers::pi * x(1)); };
    for (int n : ns) {
        auto mesh = std::make_shared<const Mesh>(crisscross_mesh(n));
        const DofSpace cr = cr_space(mesh);
        const SmoothingMap B = face_bubble_smoother(cr);
        const SpMat K = stiffness(B.target.layout, 1);
        const SpMat G = energy_matrix(cr, 1);
        const SpMat Y = B.images();
        auto ratio = [&](const Vec& sigma) {
            const Vec y = Y * sigma;
            return std::sqrt(y.dot(K * y) / sigma.dot(G * sigma));
        };
        out.n.push_back(n);
        out.h.push_back(mesh->h_max());
        out.ratio.push_back(ratio(Vec::Ones(cr.size())));
        out.interpolant_ratio.push_back(ratio(cr_interpolate(cr, smooth, 10)));
    }
    out.slope = loglog_slope(out.h, out.ratio);
    out.interpolant_slope = loglog_slope(out.h, out.interpolant_ratio);
    return out;
}

AveragingWitness averaging_inconsistency(std::shared_ptr<const Mesh> mesh) {
    AveragingWitness out;
    const DofSpace cr = cr_space(mesh);
    const SmoothingMap A = nodal_averaging(cr);
    const SpMat K = stiffness(cr.layout, 1);
    const SpMat G = energy_matrix(cr, 1);
    const Mat lag = coordinates(cr, Mat(A.target.basis)).first;
    // a-orthogonal complement of S_0^1 inside CR
    const Mat c = Mat(lag.transpose()) * Mat(G);
    Eigen::JacobiSVD<Mat> svd(c, Eigen::ComputeFullV);
    const Index r = gap_rank(svd.singularValues(), 1e-10, "S_0^1 in CR");
    const Mat Z = svd.matrixV().rightCols(cr.size() - r);
    const SpMat Y = A.images();
    double best = 0.0;
    for (Index j = 0; j < Z.cols(); ++j) {
        Vec sigma = Z.col(j);
        sigma /= std::sqrt(sigma.dot(G * sigma));
        const Vec s = Y * sigma;
        const double a = s.dot(K * s);
        if (a > best) {
            best = a;
            out.sigma = sigma;
            out.a_value = a;
            out.b_value = s.dot(K * (cr.basis * sigma));
        }
    }
    out.found = best > 1e-6;
    return out;
}

Vec project_onto(const Field& v, const DofSpace& space, int order) {
    const BrokenLayout& A = v.layout();
    const BrokenLayout& B = space.layout;
    if (A.mesh_ptr() != B.mesh_ptr()) throw ConfigError("projection: field and space live on different meshes");
    const Partition part = A.partition() == Partition::clough_tocher || B.partition() == Partition::clough_tocher
                               ? Partition::clough_tocher
                               : Partition::elements;
    const BrokenLayout C(A.mesh_ptr(), part, std::max(A.degree(), B.degree()));
    const SpMat K = stiffness(C, order);
    const SpMat X = transfer(B, C) * space.basis;
    const Vec w = transfer(A, C) * v.coefficients();
    const SpMat G = symmetric_part(SpMat(X.transpose() * (K * X)));
    const Vec rhs = X.transpose() * (K * w);
    return solve_spd(G, rhs, SolverChoice::direct).x;
}

std::vector<LevelResult> quasi_optimality(const std::vector<std::shared_ptr<const Mesh>>& meshes, const Method& method,
                                          Variant variant, const ExactSolution& u, const LoadFunctional& load,
                                          bool with_stability, Fault fault) {
    if (u.order != method.order()) throw ConfigError("manufactured solution does not match the method's problem");
    std::vector<LevelResult> out;
    for (std::size_t l = 0; l < meshes.size(); ++l) {
        const auto& mesh = meshes[l];
        const Discretization d = discretize(mesh, method, variant, fault);
        LevelResult r;
        r.level = static_cast<int>(l);
        r.h = mesh->h_max();
        r.dofs = d.space.size();
        r.energy_error = energy_error(u, solve_method(d, load).field);
        r.best_error = best_approximation(u, d.space).error;
        r.exact = r.best_error < 1e-13;
        r.ratio = r.exact ? std::numeric_limits<double>::quiet_NaN() : r.energy_error / r.best_error;
        if (with_stability && d.smoother) r.c_stab = spectral_report(gram_pair(*d.smoother, method.order())).c_stab;
        if (!out.empty()) r.rate = std::log(out.back().energy_error / r.energy_error) / std::log(out.back().h / r.h);
        out.push_back(r);
    }
    return out;
}

namespace {

Check make_check(std::string name, bool pass, double measured, double threshold, std::string ref) {
    return {std::move(name), pass ? "pass" : "fail", measured, threshold, std::move(ref)};
}

Check skipped(std::string name, std::string ref) { return {std::move(name), "skip", 0.0, 0.0, std::move(ref)}; }

}  // namespace

bool SuiteReport::passed() const {
    return std::none_of(checks.begin(), checks.end(), [](const Check& c) { return c.status == "fail"; });
}

SuiteReport verify_suite(std::shared_ptr<const Mesh> mesh, const Method& method, Fault fault, const VerifyTolerances& tol) {
    SuiteReport report;
    std::vector<Check>& out = report.checks;
    const Discretization d = discretize(mesh, method, Variant::smoothed, fault);
    const SmoothingMap& E = *d.smoother;
    report.smoother = E.name;
    const DofSpace& S = d.space;
    if (S.has_functionals()) {
        const double r = duality_residual(S);
        out.push_back(make_check("dof-duality", r <= tol.duality, r, tol.duality, "dual basis"));
    } else {
        out.push_back(skipped("dof-duality", "dual basis"));
    }
    const GramPair g = gram_pair(E, method.order());
    const double ri = right_inverse_residual(g);
    report.right_inverse_residual = ri;
    out.push_back(make_check("right-inverse", ri <= tol.right_inverse, ri, tol.right_inverse, "Pi E = id"));
    const double oc = overconsistency_residual(g);
    out.push_back(make_check("overconsistency", oc <= tol.overconsistency, oc, tol.overconsistency, "a(s, E sigma) = a(s, sigma)"));

    if (method.kind == SpaceKind::morley) {
        const ConformingPart cp = morley_conforming_part(S);
        out.push_back({"conforming-part-trivial", cp.dimension == 0 ? "pass" : "skip", static_cast<double>(cp.dimension), 0.0,
                       "dim MR cap H2_0"});
    }
    const SpMat conforming = conforming_subspace(S);
    if (conforming.cols() > 0) {
        const double ci = conforming_invariance_residual(g, conforming);
        report.conforming_invariance_residual = ci;
        out.push_back(make_check("conforming-invariance", ci <= tol.invariance, ci, tol.invariance, "E s = s on S cap V"));
    } else {
        out.push_back(skipped("conforming-invariance", "E s = s on S cap V"));
    }
    const LocalityReport loc = locality(E);
    report.locality_max_footprint = loc.max_footprint;
    out.push_back(make_check("locality", loc.violations == 0, static_cast<double>(loc.violations), 0.0, "supp E phi in patch"));

    SpectralOptions so;
    so.proxy = &E.target;
    const SpectralReport sp = spectral_report(g, so);
    report.operator_norm = sp.c_stab;
    const double cd = std::abs(sp.cond - 1.0);
    out.push_back(make_check("condition-number", cd <= tol.cond, sp.cond, 1.0 + tol.cond, "cond(b_E) = 1"));
    const bool finite = std::isfinite(sp.c_stab);
    out.push_back(make_check("stability-constant", finite && sp.c_stab >= 1.0 - 1e-9, sp.c_stab, 1.0, "C_stab >= 1"));
    if (finite && std::isfinite(sp.cos_min) && sp.cos_min > 0.0)
        out.push_back(make_check("angle-bound", sp.c_stab >= (1.0 - 1e-9) / sp.cos_min, sp.c_stab, 1.0 / sp.cos_min,
                                 "C_stab >= 1 / cos angle(S, V)"));
    else
        out.push_back(skipped("angle-bound", "C_stab >= 1 / cos angle(S, V)"));
    if (finite) {
        out.push_back(make_check("rayleigh-sampling", sp.rayleigh_max <= sp.c_stab * (1.0 + 1e-6), sp.rayleigh_max,
                                 sp.c_stab * (1.0 + 1e-6), "random quotients below C_stab"));
        const double gap = std::abs(sp.rayleigh_at_vector - sp.c_stab);
        out.push_back(make_check("rayleigh-maximizer", gap <= 1e-6 * sp.c_stab, sp.rayleigh_at_vector, sp.c_stab,
                                 "quotient at the maximizer"));
    }
    if (std::isfinite(sp.c_qopt)) {
        const double gap = std::abs(sp.c_qopt - sp.c_stab) / sp.c_stab;
        out.push_back(make_check("quasi-optimality-constant", gap <= 1e-6, sp.c_qopt, sp.c_stab, "C_qopt = C_stab"));
    }
    if (S.size() <= so.dense_limit) {
        const NondegeneracyReport nd = nondegeneracy(g);
        out.push_back(make_check("nondegeneracy", nd.consistent() && nd.b_nondegenerate, static_cast<double>(nd.rank_b),
                                 static_cast<double>(nd.n), "three equivalent tests"));
    } else {
        out.push_back(skipped("nondegeneracy", "three equivalent tests"));
    }
    return report;
}

}  // namespace ncfem
