#include "ncfem/assembly.hpp"

#include "ncfem/bernstein.hpp"
#include "ncfem/parallel.hpp"
#include "ncfem/quadrature.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <numbers>

namespace ncfem {

namespace {

struct FirstOrderTables {
    std::vector<Mat> T;  // T[z * nv + y] = D_z^T M D_y
};

struct SecondOrderTables {
    std::vector<std::pair<int, int>> pairs;  // z <= y
    std::vector<Mat> T;                      // T[P * npairs + Q] = D_P^T M D_Q
};

const FirstOrderTables& first_order_tables(int nv, int p) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, FirstOrderTables> cache;
    std::lock_guard lock(mutex);
    auto [it, inserted] = cache.try_emplace({nv, p});
    if (inserted) {
        const Mat& M = BernsteinTables::product_mean(nv, p - 1, p - 1);
        for (int z = 0; z < nv; ++z)
            for (int y = 0; y < nv; ++y) {
                const Mat& Dz = BernsteinTables::derivative(nv, p, z);
                const Mat& Dy = BernsteinTables::derivative(nv, p, y);
                it->second.T.push_back(Dz.transpose() * M * Dy);
            }
    }
    return it->second;
}

const SecondOrderTables& second_order_tables(int nv, int p) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, SecondOrderTables> cache;
    std::lock_guard lock(mutex);
    auto [it, inserted] = cache.try_emplace({nv, p});
    if (inserted) {
        auto& t = it->second;
        std::vector<Mat> D;
        for (int z = 0; z < nv; ++z)
            for (int y = z; y < nv; ++y) {
                t.pairs.emplace_back(z, y);
                D.push_back(BernsteinTables::derivative(nv, p - 1, z) * BernsteinTables::derivative(nv, p, y));
            }
        const Mat& M = BernsteinTables::product_mean(nv, p - 2, p - 2);
        for (const Mat& a : D)
            for (const Mat& b : D) t.T.push_back(a.transpose() * M * b);
    }
    return it->second;
}

Mat cell_stiffness(const BrokenLayout& layout, Index c, int order) {
    const int nv = layout.nvars(), p = layout.degree();
    const Index n = layout.local_size();
    const Cell& cell = layout.cell(c);
    const auto& g = cell.grad_lambda;
    Mat K = Mat::Zero(n, n);
    if (p < order) return K;
    if (order == 1) {
        const auto& t = first_order_tables(nv, p);
        for (int z = 0; z < nv; ++z)
            for (int y = 0; y < nv; ++y) K += g.col(z).dot(g.col(y)) * t.T[static_cast<std::size_t>(z * nv + y)];
    } else {
        const auto& t = second_order_tables(nv, p);
        const std::size_t np = t.pairs.size();
        for (std::size_t P = 0; P < np; ++P)
            for (std::size_t Q = 0; Q < np; ++Q) {
                const auto [z, y] = t.pairs[P];
                const auto [u, w] = t.pairs[Q];
                const double mp = z == y ? 1.0 : 2.0, mq = u == w ? 1.0 : 2.0;
                // symmetric parts of g_z g_y^T and g_u g_w^T contracted
                const double s = 0.5 * (g.col(z).dot(g.col(u)) * g.col(y).dot(g.col(w)) +
                                        g.col(z).dot(g.col(w)) * g.col(y).dot(g.col(u)));
                K += (mp * mq * s) * t.T[P * np + Q];
            }
    }
    return cell.measure * K;
}

int rule_degree_for(int data_degree, int layout_degree, int extra) {
    const int d = data_degree >= 0 ? data_degree + layout_degree : layout_degree + extra;
    return std::min(d, kMaxQuadratureDegree);
}

const double pi = std::numbers::pi;

}  // namespace

SpMat stiffness(const BrokenLayout& layout, int order) {
    if (order != 1 && order != 2) throw Error("stiffness: order must be 1 or 2");
    const Index nc = layout.num_cells(), n = layout.local_size();
    std::vector<Mat> blocks(static_cast<std::size_t>(nc));
    parallel_for(nc, [&](Index c) { blocks[static_cast<std::size_t>(c)] = cell_stiffness(layout, c, order); });
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(nc * n * n));
    for (Index c = 0; c < nc; ++c) {
        const Mat& K = blocks[static_cast<std::size_t>(c)];
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < n; ++i)
                if (K(i, j) != 0.0) trips.emplace_back(layout.offset(c) + i, layout.offset(c) + j, K(i, j));
    }
    SpMat S(layout.size(), layout.size());
    S.setFromTriplets(trips.begin(), trips.end());
    return S;
}

SpMat energy_matrix(const DofSpace& space, int order) {
    const SpMat K = stiffness(space.layout, order);
    SpMat A = space.basis.transpose() * K * space.basis;
    return SpMat(0.5 * (A + SpMat(A.transpose())));
}

Vec load_vector(const LoadFunctional& load, const BrokenLayout& layout, int extra) {
    const int p = layout.degree(), d = layout.dim();
    const auto& rule = simplex_rule(d, rule_degree_for(load.degree, p, extra));
    const Index n = layout.local_size();
    Vec out = Vec::Zero(layout.size());
    parallel_for(layout.num_cells(), [&](Index c) {
        const Cell& cell = layout.cell(c);
        Vec local = Vec::Zero(n);
        for (Index q = 0; q < rule.size(); ++q) {
            const Bary lambda = rule.points.col(q);
            const Point x = cell.vertices * lambda;
            const double w = rule.weights(q);
            if (load.f0) local += (w * load.f0(cell.element, x)) * value_row(layout, c, lambda).transpose();
            if (load.g) local -= w * (gradient_rows(layout, c, lambda).transpose() * load.g(cell.element, x));
            if (load.H) {
                const SmallMat H = load.H(cell.element, x);
                const Mat rows = hessian_rows(layout, c, lambda);
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) local += (w * H(i, j)) * rows.row(i * d + j).transpose();
            }
        }
        out.segment(layout.offset(c), n) = cell.measure * local;
    });
    return out;
}

ExactSolution manufactured_solution(const std::string& name) {
    ExactSolution u;
    u.name = name;
    if (name == "sinsin") {
        u.order = 1;
        u.value = [](Index, const Point& x) { return std::sin(pi * x(0)) * std::sin(pi * x(1)); };
        u.gradient = [](Index, const Point& x) {
            Point g(2);
            g << pi * std::cos(pi * x(0)) * std::sin(pi * x(1)), pi * std::sin(pi * x(0)) * std::cos(pi * x(1));
            return g;
        };
        u.hessian = [](Index, const Point& x) {
            const double s0 = std::sin(pi * x(0)), s1 = std::sin(pi * x(1));
            const double c0 = std::cos(pi * x(0)), c1 = std::cos(pi * x(1));
            SmallMat H(2, 2);
            H << -pi * pi * s0 * s1, pi * pi * c0 * c1, pi * pi * c0 * c1, -pi * pi * s0 * s1;
            return H;
        };
    } else if (name == "biquartic") {
        // u = X^2 Y^2 with X = x(1 - x), Y = y(1 - y)
        u.order = 2;
        u.degree = 8;
        auto a = [](double t) { return std::pow(t * (1 - t), 2); };
        auto a1 = [](double t) { return 2 * t * (1 - t) * (1 - 2 * t); };
        auto a2 = [](double t) { return 2 * (1 - 2 * t) * (1 - 2 * t) - 4 * t * (1 - t); };
        u.value = [a](Index, const Point& x) { return a(x(0)) * a(x(1)); };
        u.gradient = [a, a1](Index, const Point& x) {
            Point g(2);
            g << a1(x(0)) * a(x(1)), a(x(0)) * a1(x(1));
            return g;
        };
        u.hessian = [a, a1, a2](Index, const Point& x) {
            SmallMat H(2, 2);
            H << a2(x(0)) * a(x(1)), a1(x(0)) * a1(x(1)), a1(x(0)) * a1(x(1)), a(x(0)) * a2(x(1));
            return H;
        };
    } else {
        throw ConfigError("unknown manufactured solution '" + name + "' (expected sinsin or biquartic)");
    }
    return u;
}

LoadFunctional manufactured_load(const ExactSolution& u) {
    LoadFunctional l;
    l.name = "manufactured:" + u.name;
    if (u.name == "sinsin") {
        l.f0 = [](Index, const Point& x) { return 2 * pi * pi * std::sin(pi * x(0)) * std::sin(pi * x(1)); };
    } else if (u.name == "biquartic") {
        l.degree = 4;
        auto a = [](double t) { return std::pow(t * (1 - t), 2); };
        auto a2 = [](double t) { return 2 * (1 - 2 * t) * (1 - 2 * t) - 4 * t * (1 - t); };
        l.f0 = [a, a2](Index, const Point& x) { return 24 * a(x(1)) + 2 * a2(x(0)) * a2(x(1)) + 24 * a(x(0)); };
    } else {
        throw ConfigError("no analytic load for '" + u.name + "'");
    }
    return l;
}

ExactSolution field_solution(const Field& u, int order) {
    ExactSolution e;
    e.name = "field";
    e.order = order;
    e.degree = u.layout().degree();
    auto f = std::make_shared<const Field>(u);
    e.value = [f](Index k, const Point& x) { return f->value_in(k, x); };
    e.gradient = [f](Index k, const Point& x) { return f->gradient_in(k, x); };
    e.hessian = [f](Index k, const Point& x) { return f->hessian_in(k, x); };
    return e;
}

LoadFunctional field_load(const Field& u, int order) {
    LoadFunctional l;
    l.name = "field";
    auto f = std::make_shared<const Field>(u);
    if (order == 1) {
        l.degree = std::max(0, u.layout().degree() - 1);
        l.g = [f](Index k, const Point& x) { return Point(-f->gradient_in(k, x)); };
    } else {
        l.degree = std::max(0, u.layout().degree() - 2);
        l.H = [f](Index k, const Point& x) { return f->hessian_in(k, x); };
    }
    return l;
}

LoadFunctional checkerboard_load(const Mesh& mesh) {
    const Point center = 0.5 * (mesh.vertices().rowwise().minCoeff() + mesh.vertices().rowwise().maxCoeff());
    std::vector<double> sign(static_cast<std::size_t>(mesh.num_elements()));
    for (Index k = 0; k < mesh.num_elements(); ++k) {
        const Point b = mesh.geometry(k).barycenter - center;
        sign[static_cast<std::size_t>(k)] = b(0) * b(1) >= 0 ? 1.0 : -1.0;
    }
    LoadFunctional l;
    l.name = "checkerboard";
    l.degree = 0;
    const int d = mesh.dim();
    l.g = [sign = std::move(sign), d](Index k, const Point&) {
        return Point(Point::Constant(d, sign[static_cast<std::size_t>(k)]));
    };
    return l;
}

LoadFunctional constant_load(double value) {
    LoadFunctional l;
    l.name = "constant";
    l.degree = 0;
    l.f0 = [value](Index, const Point&) { return value; };
    return l;
}

namespace {

// Normwise backward error |Ax - b| / (|A| |x| + |b|) in the max norm.
double backward_error(const SpMat& A, const Vec& x, const Vec& b, double anorm) {
    return (A * x - b).cwiseAbs().maxCoeff() / (anorm * x.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff());
}

std::string scientific(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace

SolveReport solve_spd(const SpMat& A, const Vec& b, SolverChoice choice, double tolerance) {
    SolveReport r;
    if (A.rows() == 0) {
        r.x = Vec::Zero(0);
        r.solver = "empty";
        return r;
    }
    if (b.cwiseAbs().maxCoeff() == 0.0) {
        r.x = Vec::Zero(A.rows());
        r.solver = "zero-rhs";
        return r;
    }
    Vec rowsum = Vec::Zero(A.rows());
    for (Index j = 0; j < A.outerSize(); ++j)
        for (SpMat::InnerIterator it(A, j); it; ++it) rowsum(it.row()) += std::abs(it.value());
    const double anorm = rowsum.maxCoeff();
    const bool direct = choice == SolverChoice::direct || (choice == SolverChoice::automatic && A.rows() <= 50000);
    if (direct) {
        Eigen::SimplicialLDLT<SpMat> ldlt(A);
        if (ldlt.info() != Eigen::Success) throw NumericalError("LDL^T factorization failed");
        const Vec D = ldlt.vectorD();
        if (D.minCoeff() <= 0.0) throw NumericalError("system matrix is not positive definite (pivot " + scientific(D.minCoeff()) + ")");
        r.x = ldlt.solve(b);
        r.solver = "ldlt";
        r.residual = backward_error(A, r.x, b, anorm);
        for (int it = 0; it < 3 && r.residual > tolerance; ++it) {
            r.x += ldlt.solve(Vec(b - A * r.x));
            r.residual = backward_error(A, r.x, b, anorm);
            ++r.iterations;
        }
    } else {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
        cg.setTolerance(tolerance * 0.1);
        cg.setMaxIterations(static_cast<Index>(10 * A.rows()));
        cg.compute(A);
        if (cg.info() != Eigen::Success) throw NumericalError("CG preconditioner setup failed");
        r.x = cg.solve(b);
        r.iterations = static_cast<int>(cg.iterations());
        r.solver = "cg";
        r.residual = backward_error(A, r.x, b, anorm);
    }
    if (!(r.residual <= tolerance))
        throw NumericalError(r.solver + ": backward error " + scientific(r.residual) + " above " + scientific(tolerance));
    return r;
}

Method Method::parse(const std::string& text) {
    Method m;
    if (text == "cr") {
        m.kind = SpaceKind::cr;
        m.p = 1;
    } else if (text == "morley") {
        m.kind = SpaceKind::morley;
        m.p = 2;
    } else if (text.rfind("gl:", 0) == 0 || text == "gl") {
        m.kind = SpaceKind::gl;
        m.p = 2;
        if (text.size() > 3) {
            try {
                std::size_t used = 0;
                m.p = std::stoi(text.substr(3), &used);
                if (used != text.size() - 3) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ConfigError("bad method '" + text + "' (expected gl:p)");
            }
        }
        if (m.p < 1) throw ConfigError("GL degree must be >= 1");
    } else {
        throw ConfigError("unknown method '" + text + "' (expected cr, gl:p or morley)");
    }
    return m;
}

std::string Method::name() const {
    if (kind == SpaceKind::gl) return "gl:" + std::to_string(p);
    return to_string(kind);
}

Variant parse_variant(const std::string& text) {
    if (text == "classical") return Variant::classical;
    if (text == "smoothed") return Variant::smoothed;
    throw ConfigError("unknown variant '" + text + "' (expected classical or smoothed)");
}

std::string to_string(Variant v) { return v == Variant::classical ? "classical" : "smoothed"; }

Discretization discretize(std::shared_ptr<const Mesh> mesh, const Method& method, Variant variant, Fault fault) {
    Discretization d{method, variant, method.kind == SpaceKind::cr      ? cr_space(mesh)
                                      : method.kind == SpaceKind::morley ? morley_space(mesh)
                                                                         : gl_space(mesh, method.p),
                     {}, std::nullopt};
    d.matrix = energy_matrix(d.space, method.order());
    if (variant == Variant::smoothed) d.smoother = build_smoother(d.space, fault);
    return d;
}

Vec assemble_rhs(const Discretization& disc, const LoadFunctional& load) {
    if (disc.variant == Variant::classical) {
        if (load.rough())
            throw ConfigError("the classical variant needs an L^2 load; '" + load.name + "' has a divergence-form part");
        return disc.space.basis.transpose() * load_vector(load, disc.space.layout);
    }
    const SmoothingMap& E = *disc.smoother;
    return E.images().transpose() * load_vector(load, E.target.layout);
}

DiscreteSolution solve_method(const Discretization& disc, const LoadFunctional& load, SolverChoice choice) {
    const Vec rhs = assemble_rhs(disc, load);
    SolveReport rep = solve_spd(disc.matrix, rhs, choice);
    Vec x = rep.x;
    return {x, Field(disc.space.layout, disc.space.basis * x), std::move(rep)};
}

double energy_error(const ExactSolution& u, const Field& v, int extra) {
    const BrokenLayout& L = v.layout();
    const int p = L.degree();
    const int deg = u.degree >= 0 ? 2 * std::max(u.degree, p) : 2 * p + extra;
    const auto& rule = simplex_rule(L.dim(), std::min(deg, kMaxQuadratureDegree));
    std::vector<double> parts(static_cast<std::size_t>(L.num_cells()));
    parallel_for(L.num_cells(), [&](Index c) {
        const Cell& cell = L.cell(c);
        double s = 0.0;
        for (Index q = 0; q < rule.size(); ++q) {
            const Bary lambda = rule.points.col(q);
            const Point x = cell.vertices * lambda;
            if (u.order == 1)
                s += rule.weights(q) * (u.gradient(cell.element, x) - v.gradient(c, lambda)).squaredNorm();
            else
                s += rule.weights(q) * (u.hessian(cell.element, x) - v.hessian(c, lambda)).squaredNorm();
        }
        parts[static_cast<std::size_t>(c)] = cell.measure * s;
    });
    double total = 0.0;
    for (double s : parts) total += s;
    return std::sqrt(total);
}

BestApproximation best_approximation(const ExactSolution& u, const DofSpace& space, int extra) {
    LoadFunctional l;
    l.degree = u.degree >= 0 ? std::max(0, u.degree - u.order) : -1;
    if (u.order == 1)
        l.g = [&u](Index k, const Point& x) { return Point(-u.gradient(k, x)); };
    else
        l.H = u.hessian;
    const Vec rhs = space.basis.transpose() * load_vector(l, space.layout, extra);
    const SpMat G = energy_matrix(space, u.order);
    BestApproximation b;
    b.coefficients = solve_spd(G, rhs, SolverChoice::direct).x;
    b.error = energy_error(u, Field(space.layout, space.basis * b.coefficients), extra);
    return b;
}

double cr_localized_error(const ExactSolution& u, const Mesh& mesh, int rule_degree) {
    const auto& rule = simplex_rule(mesh.dim(), rule_degree);
    std::vector<double> parts(static_cast<std::size_t>(mesh.num_elements()));
    parallel_for(mesh.num_elements(), [&](Index k) {
        std::vector<Point> g(static_cast<std::size_t>(rule.size()));
        Point mean = Point::Zero(mesh.dim());
        for (Index q = 0; q < rule.size(); ++q) {
            g[static_cast<std::size_t>(q)] = u.gradient(k, mesh.point(k, rule.points.col(q)));
            mean += rule.weights(q) * g[static_cast<std::size_t>(q)];
        }
        double s = 0.0;
        for (Index q = 0; q < rule.size(); ++q) s += rule.weights(q) * (g[static_cast<std::size_t>(q)] - mean).squaredNorm();
        parts[static_cast<std::size_t>(k)] = mesh.geometry(k).measure * s;
    });
    double total = 0.0;
    for (double s : parts) total += s;
    return std::sqrt(total);
}

}  // namespace ncfem
