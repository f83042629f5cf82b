#include "ncfem/field.hpp"
#include "ncfem/mesh_io.hpp"
#include "ncfem/spaces.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ncfem;

namespace {

std::shared_ptr<const Mesh> square(int n) { return std::make_shared<const Mesh>(square_mesh(n)); }
std::shared_ptr<const Mesh> crisscross(int n) { return std::make_shared<const Mesh>(crisscross_mesh(n)); }

Vec random_vector(Index n, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = dist(gen);
    return v;
}

Field random_member(const DofSpace& s, unsigned seed) { return Field(s.layout, s.basis * random_vector(s.size(), seed)); }

Point on_face(const Mesh& mesh, const Face& f, double t) {
    return (1.0 - t) * mesh.vertex(f.vertices[0]) + t * mesh.vertex(f.vertices[1]);
}

Index interior_vertices(const Mesh& m) {
    Index n = 0;
    for (Index v = 0; v < m.num_vertices(); ++v) n += !m.is_boundary_vertex(v);
    return n;
}

// Monomials in the face parameter, for moment tests independent of the
// Bernstein machinery.
FacePolynomial face_monomial(const Mesh& mesh, const Face& f, int k) {
    const Point a = mesh.vertex(f.vertices[0]), b = mesh.vertex(f.vertices[1]);
    return [a, b, k](const Point& x) { return std::pow((x - a).norm() / (b - a).norm(), k); };
}

}  // namespace

TEST(Spaces, CrouzeixRaviartDimensionAndDuality) {
    auto m = square(3);
    DofSpace cr = cr_space(m);
    EXPECT_EQ(cr.size(), m->num_interior_faces());
    EXPECT_LT(duality_residual(cr), 1e-13);
    Field v = random_member(cr, 1);
    for (Index f = 0; f < m->num_faces(); ++f)
        EXPECT_NEAR(jump_moment(v, f, [](const Point&) { return 1.0; }, 0, 2), 0.0, 1e-13);
}

TEST(Spaces, CrouzeixRaviartBasisHasUnitFaceMean) {
    auto m = square(2);
    DofSpace cr = cr_space(m);
    const auto& rule = simplex_rule(1, 4);
    for (Index j = 0; j < cr.size(); ++j) {
        Field phi(cr.layout, Vec(cr.basis.col(j)));
        for (Index f = 0; f < m->num_faces(); ++f) {
            const Face& face = m->face(f);
            double mean = 0.0;
            for (Index q = 0; q < rule.size(); ++q) mean += rule.weights(q) * phi.value_in(face.elements[0], on_face(*m, face, rule.points(1, q)));
            EXPECT_NEAR(mean, f == cr.dofs[static_cast<std::size_t>(j)].entity ? 1.0 : 0.0, 1e-13);
        }
    }
}

TEST(Spaces, LagrangeIsContinuousAndVanishesOnBoundary) {
    auto m = crisscross(2);
    for (int p = 1; p <= 4; ++p) {
        DofSpace s = lagrange_space(m, p);
        EXPECT_LT(duality_residual(s), 1e-11) << p;
        Field v = random_member(s, 10 + p);
        for (Index f = 0; f < m->num_faces(); ++f) {
            const Face& face = m->face(f);
            for (double t : {0.0, 0.21, 0.5, 0.77, 1.0}) {
                const Point x = on_face(*m, face, t);
                const double a = v.value_in(face.elements[0], x);
                const double b = face.boundary() ? 0.0 : v.value_in(face.elements[1], x);
                EXPECT_NEAR(a, b, 1e-12);
            }
        }
    }
}

TEST(Spaces, LagrangeNodeCount) {
    auto m = square(3);
    // interior nodes of the p-lattice on the unit square: (3p - 1)^2
    for (int p = 1; p <= 3; ++p) EXPECT_EQ(lagrange_space(m, p).size(), (3 * p - 1) * (3 * p - 1));
}

class GlRoutes : public ::testing::TestWithParam<int> {};

TEST_P(GlRoutes, LocalAndKernelSpanTheSameSpace) {
    const int p = GetParam();
    for (auto m : {square(2), crisscross(1)}) {
        DofSpace local = gl_space(m, p, GlRoute::local);
        DofSpace kernel = gl_space(m, p, GlRoute::kernel);
        ASSERT_EQ(local.size(), kernel.size()) << "p=" << p;
        const Mat Q = Mat(kernel.basis);
        const Mat B = Mat(local.basis);
        EXPECT_LT((B - Q * (Q.transpose() * B)).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((Q.transpose() * Q - Mat::Identity(Q.cols(), Q.cols())).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST_P(GlRoutes, JumpsAreOrthogonalToLowerDegree) {
    const int p = GetParam();
    auto m = square(2);
    DofSpace s = gl_space(m, p);
    if (s.has_functionals()) EXPECT_LT(duality_residual(s), 1e-10);
    Field v = random_member(s, 100 + p);
    double scale = 0.0;
    for (Index f = 0; f < m->num_faces(); ++f)
        for (int k = 0; k < p; ++k) {
            const double jm = jump_moment(v, f, face_monomial(*m, m->face(f), k), k, 2 * p + 2);
            EXPECT_NEAR(jm, 0.0, 1e-11) << "face " << f << " k " << k;
        }
    // and the space is genuinely nonconforming: some degree-p moment jumps
    for (Index f = 0; f < m->num_faces(); ++f)
        scale = std::max(scale, std::abs(jump_moment(v, f, face_monomial(*m, m->face(f), p), p, 2 * p + 2)));
    EXPECT_GT(scale, 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Degrees, GlRoutes, ::testing::Values(2, 3, 4, 5));

TEST(Spaces, GlDegreeOneIsCrouzeixRaviart) {
    auto m = square(2);
    EXPECT_EQ(gl_space(m, 1).size(), cr_space(m).size());
}

TEST(Spaces, JumpConstraintsAnnihilateConformingFunctions) {
    auto m = crisscross(1);
    DofSpace lag = lagrange_space(m, 3);
    const SpMat C = jump_constraints(lag.layout, 2);
    EXPECT_LT(Mat(C * lag.basis).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Spaces, MorleyContinuityProperties) {
    auto m = square(3);
    DofSpace s = morley_space(m);
    EXPECT_EQ(s.size(), interior_vertices(*m) + m->num_interior_faces());
    EXPECT_LT(duality_residual(s), 1e-11);
    Field v = random_member(s, 7);
    for (Index f = 0; f < m->num_faces(); ++f) {
        const Face& face = m->face(f);
        for (double t : {0.0, 1.0}) {
            const Point x = on_face(*m, face, t);
            const double b = face.boundary() ? 0.0 : v.value_in(face.elements[1], x);
            EXPECT_NEAR(v.value_in(face.elements[0], x), b, 1e-12);
        }
        EXPECT_NEAR(normal_jump_moment(v, f, [](const Point&) { return 1.0; }, 0, 2), 0.0, 1e-12);
    }
}

TEST(Spaces, HctIsClampedC1) {
    auto m = crisscross(2);
    DofSpace s = hct_space(m);
    EXPECT_EQ(s.size(), 3 * interior_vertices(*m) + m->num_interior_faces());
    EXPECT_LT(duality_residual(s), 1e-9);
    Field v = random_member(s, 3);
    for (Index f = 0; f < m->num_faces(); ++f) {
        const Face& face = m->face(f);
        for (double t : {0.0, 0.3, 0.5, 0.9, 1.0}) {
            const Point x = on_face(*m, face, t);
            const double a = v.value_in(face.elements[0], x);
            const Point ga = v.gradient_in(face.elements[0], x);
            const double b = face.boundary() ? 0.0 : v.value_in(face.elements[1], x);
            const Point gb = face.boundary() ? Point(Point::Zero(2)) : v.gradient_in(face.elements[1], x);
            EXPECT_NEAR(a, b, 1e-10);
            EXPECT_LT((ga - gb).norm(), 1e-9);
        }
    }
    // interior Clough-Tocher edges: compare the two sub-triangles directly
    for (Index k = 0; k < m->num_elements(); ++k)
        for (int i = 0; i < 3; ++i)
            for (double sp : {0.2, 0.6}) {
                Bary lam = Bary::Constant(3, sp / 3.0);
                lam(i) += 1.0 - sp;
                const Point x = m->point(k, lam);
                // nudge into each cell adjacent to the edge
                const Point c1 = m->point(k, Bary::Unit(3, (i + 1) % 3)), c2 = m->point(k, Bary::Unit(3, (i + 2) % 3));
                const Point x1 = x + 1e-9 * (c1 - x), x2 = x + 1e-9 * (c2 - x);
                EXPECT_NEAR(v.value_in(k, x1), v.value_in(k, x2), 1e-7);
                EXPECT_LT((v.gradient_in(k, x1) - v.gradient_in(k, x2)).norm(), 1e-6);
            }
}

TEST(Spaces, HctBasisInterpolatesItsDof) {
    auto m = square(2);
    DofSpace s = hct_space(m);
    for (Index j = 0; j < s.size(); ++j) {
        Field phi(s.layout, Vec(s.basis.col(j)));
        const auto& d = s.dofs[static_cast<std::size_t>(j)];
        if (d.type == "vertex-value") {
            EXPECT_NEAR(phi.value_in(m->vertex_star(d.entity).front(), m->vertex(d.entity)), 1.0, 1e-10);
        } else if (d.type == "vertex-gradient") {
            const Point g = phi.gradient_in(m->vertex_star(d.entity).back(), m->vertex(d.entity));
            EXPECT_NEAR(g(d.component), 1.0, 1e-9);
            EXPECT_NEAR(g(1 - d.component), 0.0, 1e-9);
        } else {
            const Face& f = m->face(d.entity);
            EXPECT_NEAR(phi.gradient_in(f.elements[1], f.midpoint).dot(f.normal), 1.0, 1e-9);
        }
    }
}

TEST(Spaces, FaceBubblesHaveUnitFaceMeans) {
    auto m = crisscross(1);
    DofSpace s = face_bubble_space(m);
    EXPECT_LT(duality_residual(s), 1e-13);
    const auto& rule = simplex_rule(1, 6);
    for (Index j = 0; j < s.size(); ++j) {
        Field b(s.layout, Vec(s.basis.col(j)));
        for (Index f = 0; f < m->num_faces(); ++f) {
            const Face& face = m->face(f);
            for (int side = 0; side < (face.boundary() ? 1 : 2); ++side) {
                double mean = 0.0;
                for (Index q = 0; q < rule.size(); ++q)
                    mean += rule.weights(q) * b.value_in(face.elements[static_cast<std::size_t>(side)], on_face(*m, face, rule.points(1, q)));
                EXPECT_NEAR(mean, f == s.dofs[static_cast<std::size_t>(j)].entity ? 1.0 : 0.0, 1e-13);
            }
        }
    }
}

TEST(Spaces, MorleyBubblesHaveUnitNormalMeans) {
    auto m = square(2);
    DofSpace s = morley_bubble_space(m);
    EXPECT_LT(duality_residual(s), 1e-11);
    const auto& rule = simplex_rule(1, 12);
    for (Index j = 0; j < s.size(); ++j) {
        Field b(s.layout, Vec(s.basis.col(j)));
        const Index own = s.dofs[static_cast<std::size_t>(j)].entity;
        for (Index f = 0; f < m->num_faces(); ++f) {
            const Face& face = m->face(f);
            for (int side = 0; side < (face.boundary() ? 1 : 2); ++side) {
                const Index k = face.elements[static_cast<std::size_t>(side)];
                double mean = 0.0, vmax = 0.0;
                for (Index q = 0; q < rule.size(); ++q) {
                    const Point x = on_face(*m, face, rule.points(1, q));
                    mean += rule.weights(q) * b.gradient_in(k, x).dot(face.normal);
                    vmax = std::max(vmax, std::abs(b.value_in(k, x)));
                }
                EXPECT_NEAR(mean, f == own ? 1.0 : 0.0, 1e-11);
                EXPECT_LT(vmax, 1e-12);
            }
        }
    }
}

TEST(Spaces, BubbleNormalizationFactors) {
    auto [cr, mr] = bubble_normalization_factors(2);
    EXPECT_NEAR(cr, 2.0, 1e-14);
    EXPECT_NEAR(mr, 1.0 / 21.0, 1e-14);
}

TEST(Spaces, CrInterpolantReproducesAffine) {
    auto m = crisscross(2);
    DofSpace cr = cr_space(m);
    // x(1-x) is not affine, but its face means are computed exactly
    auto u = [](const Point& x) { return x(0) * (1 - x(0)) + 2 * x(1); };
    Vec c = cr_interpolate(cr, u, 4);
    for (Index i = 0; i < cr.size(); ++i) {
        const Face& f = m->face(cr.dofs[static_cast<std::size_t>(i)].entity);
        const Point a = m->vertex(f.vertices[0]), b = m->vertex(f.vertices[1]);
        // Simpson is exact for quadratics
        const double simpson = (u(a) + 4 * u(Point((a + b) / 2)) + u(b)) / 6;
        EXPECT_NEAR(c(i), simpson, 1e-14);
    }
}

TEST(Spaces, RejectsSingleElementMesh) {
    Mat v(2, 3);
    v << 0, 1, 0, 0, 0, 1;
    auto m = std::make_shared<const Mesh>(v, std::vector<std::vector<Index>>{{0, 1, 2}});
    EXPECT_THROW(cr_space(m), ConfigError);
    EXPECT_THROW(morley_space(m), ConfigError);
}
