#include "ncfem/mesh_io.hpp"
#include "ncfem/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
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

// |grad v|^2 by quadrature over the cells of the layout
double quadrature_dirichlet(const Field& v, int rule_degree) {
    const BrokenLayout& L = v.layout();
    const auto& rule = simplex_rule(2, rule_degree);
    double s = 0.0;
    for (Index c = 0; c < L.num_cells(); ++c)
        for (Index q = 0; q < rule.size(); ++q)
            s += L.cell(c).measure * rule.weights(q) * v.gradient(c, rule.points.col(q)).squaredNorm();
    return s;
}

SmoothingMap smoother_for(std::shared_ptr<const Mesh> m, const std::string& method, Fault fault = Fault::none) {
    return *discretize(m, Method::parse(method), Variant::smoothed, fault).smoother;
}

const char* kMethods[] = {"cr", "gl:2", "gl:3", "gl:4", "morley"};

}  // namespace

TEST(Verify, RightInverseCertificates) {
    auto m = crisscross(2);
    for (const char* name : kMethods) {
        const SmoothingMap E = smoother_for(m, name);
        const GramPair g = gram_pair(E, Method::parse(name).order());
        EXPECT_LT(right_inverse_residual(g), 1e-10) << name;
        EXPECT_LT(overconsistency_residual(g), 1e-10) << name;
        const SpectralReport r = spectral_report(g);
        EXPECT_NEAR(r.cond, 1.0, 1e-9) << name;
        EXPECT_GE(r.continuity, r.inf_sup * (1 - 1e-12)) << name;
    }
}

TEST(Verify, FaultIsDetected) {
    const SmoothingMap E = smoother_for(crisscross(2), "cr", Fault::skip_bubble);
    EXPECT_GT(right_inverse_residual(gram_pair(E, 1)), 1e-3);
}

TEST(Verify, ProjectionOfSmoothedBasisIsTheBasis) {
    const SmoothingMap E = smoother_for(square(3), "cr");
    const SpMat Y = E.images();
    for (Index j = 0; j < E.source.size(); j += 3) {
        const Vec x = project_onto(Field(E.target.layout, Vec(Y.col(j))), E.source, 1);
        EXPECT_LT((x - Vec::Unit(E.source.size(), j)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Verify, CrProjectionOfConformingFieldIsFaceMeanInterpolation) {
    auto m = square(3);
    const DofSpace lag = lagrange_space(m, 3);
    const Field v(lag.layout, lag.basis * random_vector(lag.size(), 4));
    const DofSpace cr = cr_space(m);
    const Vec x = project_onto(v, cr, 1);
    const Vec y = cr_interpolate(cr, [&](const Point& p) { return v.value_in(*find_element(*m, p), p); }, 6);
    EXPECT_LT((x - y).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Verify, IdentityOnConformingSpaceHasUnitConstants) {
    const DofSpace lag = lagrange_space(crisscross(2), 2);
    SpMat I(lag.size(), lag.size());
    I.setIdentity();
    const SmoothingMap E{"id", lag, lag, I};
    const SpectralReport r = spectral_report(gram_pair(E, 1));
    EXPECT_NEAR(r.c_stab, 1.0, 1e-12);
    EXPECT_NEAR(r.cond, 1.0, 1e-12);
}

TEST(Verify, TwoTriangleStabilityIsOneQuotient) {
    const SmoothingMap E = smoother_for(square(1), "cr");
    ASSERT_EQ(E.source.size(), 1);
    const Field image(E.target.layout, Vec(E.images().col(0)));
    const Field psi(E.source.layout, Vec(E.source.basis.col(0)));
    const double expected = std::sqrt(quadrature_dirichlet(image, 8) / quadrature_dirichlet(psi, 2));
    EXPECT_NEAR(spectral_report(gram_pair(E, 1)).c_stab, expected, 1e-12 * expected);
}

TEST(Verify, LanczosAgreesWithDense) {
    for (const char* name : {"gl:2", "morley"}) {
        const GramPair g = gram_pair(smoother_for(crisscross(3), name), Method::parse(name).order());
        SpectralOptions iterative;
        iterative.force_iterative = true;
        const SpectralReport a = spectral_report(g), b = spectral_report(g, iterative);
        EXPECT_TRUE(a.dense);
        EXPECT_FALSE(b.dense);
        EXPECT_NEAR(a.c_stab, b.c_stab, 1e-8 * a.c_stab) << name;
        EXPECT_NEAR(b.cond, 1.0, 1e-9) << name;
    }
}

TEST(Verify, LanczosFindsTheLargestGeneralizedEigenvalue) {
    const Index n = 300;
    Vec a(n), b(n);
    for (Index i = 0; i < n; ++i) {
        a(i) = 1.0 + static_cast<double>(i % 17);
        b(i) = 2.0 + static_cast<double>(i % 5);
    }
    const GeneralizedOperator op{n, [&](const Vec& x) -> Vec { return a.cwiseProduct(x); },
                                 [&](const Vec& x) -> Vec { return b.cwiseProduct(x); },
                                 [&](const Vec& x) -> Vec { return x.cwiseQuotient(b); }};
    const LanczosResult r = lanczos_max(op);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, a.cwiseQuotient(b).maxCoeff(), 1e-10);
}

TEST(Verify, RayleighQuotientsAndAngleBound) {
    for (const char* name : kMethods) {
        const SmoothingMap E = smoother_for(crisscross(2), name);
        SpectralOptions o;
        o.proxy = &E.target;
        const SpectralReport r = spectral_report(gram_pair(E, Method::parse(name).order()), o);
        EXPECT_LE(r.rayleigh_max, r.c_stab * (1 + 1e-6)) << name;
        EXPECT_NEAR(r.rayleigh_at_vector, r.c_stab, 1e-6 * r.c_stab) << name;
        EXPECT_NEAR(r.c_qopt, r.c_stab, 1e-6 * r.c_stab) << name;
        ASSERT_TRUE(std::isfinite(r.cos_min)) << name;
        EXPECT_GE(r.c_stab, (1 - 1e-9) / r.cos_min) << name;
    }
}

TEST(Verify, NondegeneracyTestsAgree) {
    auto m = crisscross(2);
    for (const char* name : kMethods) {
        const NondegeneracyReport r = nondegeneracy(gram_pair(smoother_for(m, name), Method::parse(name).order()));
        EXPECT_TRUE(r.consistent()) << name;
        EXPECT_TRUE(r.b_nondegenerate) << name;
        EXPECT_EQ(r.dim_s_cap_t_perp, 0) << name;
    }
    for (int n : {1, 2}) {
        const SmoothingMap A = nodal_averaging(cr_space(crisscross(n)));
        const NondegeneracyReport r = nondegeneracy(gram_pair(A, 1));
        EXPECT_TRUE(r.consistent());
        EXPECT_FALSE(r.b_nondegenerate);
        EXPECT_EQ(r.rank_E, A.target.size());
        EXPECT_EQ(r.dim_s_cap_t_perp, r.n - r.rank_b);
    }
}

TEST(Verify, SkewedSmootherConditionMatchesOracle) {
    for (const char* name : {"cr", "gl:2", "morley"}) {
        const SmoothingMap S = skewed_smoother(smoother_for(crisscross(2), name), 0.3);
        const GramPair g = gram_pair(S, Method::parse(name).order());
        const SpectralReport r = spectral_report(g);
        EXPECT_GT(r.cond, 1.01) << name;
        EXPECT_NEAR(r.cond, dense_condition_oracle(g), 1e-8 * r.cond) << name;
        SpectralOptions iterative;
        iterative.force_iterative = true;
        const SpectralReport it = spectral_report(g, iterative);
        EXPECT_NEAR(it.cond, r.cond, 1e-7 * r.cond) << name;
        EXPECT_NEAR(it.c_stab, r.c_stab, 1e-7 * r.c_stab) << name;
        EXPECT_GT(right_inverse_residual(g), 1e-3);
    }
}

TEST(Verify, MorleyConformingPart) {
    for (int n : {1, 2, 4}) EXPECT_EQ(morley_conforming_part(morley_space(square(n))).dimension, 0) << n;
    const auto m = crisscross(3);
    const DofSpace mr = morley_space(m);
    const ConformingPart cp = morley_conforming_part(mr);
    ASSERT_GE(cp.dimension, 1);
    // the member is C^1 and clamped: normal-derivative jumps and boundary traces vanish
    const Field w(mr.layout, mr.basis * cp.basis.col(0));
    for (Index f = 0; f < m->num_faces(); ++f) {
        EXPECT_NEAR(normal_jump_moment(w, f, [](const Point& x) { return x(0) - x(1); }, 1, 4), 0.0, 1e-10);
        EXPECT_NEAR(jump_moment(w, f, [](const Point& x) { return x(0) * x(1); }, 2, 6), 0.0, 1e-10);
    }
    const SmoothingMap E = smoother_for(m, "morley");
    EXPECT_LT(conforming_invariance_residual(gram_pair(E, 2), cp.basis.sparseView()), 1e-9);
}

TEST(Verify, ConformingInvarianceForLowerOrderMethods) {
    for (const char* name : {"cr", "gl:2", "gl:3"}) {
        const SmoothingMap E = smoother_for(crisscross(2), name);
        const SpMat C = conforming_subspace(E.source);
        EXPECT_GT(C.cols(), 0);
        EXPECT_LT(conforming_invariance_residual(gram_pair(E, 1), C), 1e-10) << name;
    }
}

TEST(Verify, BubbleSmootherIsUnstable) {
    const BubbleInstabilityReport r = bubble_instability({4, 8, 16});
    for (std::size_t i = 1; i < r.ratio.size(); ++i) EXPECT_GT(r.ratio[i], r.ratio[i - 1]);
    // sum of all face bases: |grad B sigma| ~ h^-1 against |grad_M sigma| ~ h^-1/2
    EXPECT_NEAR(r.slope, -0.5, 0.1);
    // smooth interpolants: |grad_M sigma| stays bounded
    EXPECT_NEAR(r.interpolant_slope, -1.0, 0.1);
}

TEST(Verify, AveragingInconsistencyWitness) {
    const AveragingWitness w = averaging_inconsistency(crisscross(1));
    ASSERT_TRUE(w.found);
    EXPECT_LT(std::abs(w.b_value), 1e-12);
    EXPECT_GT(std::abs(w.a_value), 1e-6);
}

TEST(Verify, GalerkinErrorIsOrthogonalToSmoothedTests) {
    const auto u = manufactured_solution("sinsin");
    const Discretization d = discretize(square(4), Method::parse("cr"), Variant::smoothed);
    const DiscreteSolution s = solve_method(d, manufactured_load(u));
    const SmoothingMap& E = *d.smoother;
    // a(u, E sigma_i) through the flux form of the exact gradient
    LoadFunctional flux;
    flux.g = [&](Index k, const Point& x) { return Point(-u.gradient(k, x)); };
    const Vec au = E.images().transpose() * load_vector(flux, E.target.layout, 12);
    const GramPair g = gram_pair(E, 1);
    const Vec aU = g.M.transpose() * s.coefficients;
    EXPECT_LT((au - aU).cwiseAbs().maxCoeff(), 1e-8 * au.cwiseAbs().maxCoeff());
}

TEST(Verify, CrBestApproximationIsOrthogonalAndLocal) {
    const auto u = manufactured_solution("sinsin");
    auto m = square(4);
    const DofSpace cr = cr_space(m);
    const BestApproximation b = best_approximation(u, cr);
    LoadFunctional flux;
    flux.g = [&](Index k, const Point& x) { return Point(-u.gradient(k, x)); };
    const Vec au = cr.basis.transpose() * load_vector(flux, cr.layout, 12);
    const Vec as = energy_matrix(cr, 1) * b.coefficients;
    EXPECT_LT((au - as).cwiseAbs().maxCoeff(), 1e-9 * au.cwiseAbs().maxCoeff());
    EXPECT_NEAR(b.error, cr_localized_error(u, *m, 14), 1e-9 * b.error);
}

TEST(Verify, BestErrorDecreasesUnderRefinement) {
    const auto u = manufactured_solution("sinsin");
    double last = 1e300;
    for (const auto& m : refinement_levels("gen:square:2", 4)) {
        const double e = best_approximation(u, cr_space(m)).error;
        EXPECT_LT(e, last);
        last = e;
    }
}

TEST(Verify, RieszIdentityOnConformingProxy) {
    const DofSpace lag = lagrange_space(crisscross(2), 2);
    const SpMat K = energy_matrix(lag, 1);
    const Vec l = lag.basis.transpose() * load_vector(constant_load(), lag.layout);
    const Vec x = solve_spd(K, l).x;
    // sup_v <l, v> / |v| = |L^{-1} l| with K = L L^T
    Eigen::LLT<Mat> llt{Mat(K)};
    const double dual = Vec(llt.matrixL().solve(l)).norm();
    EXPECT_NEAR(std::sqrt(x.dot(K * x)), dual, 1e-10 * dual);
}

TEST(Verify, QuasiOptimalityRatiosStayBelowStability) {
    const auto u = manufactured_solution("sinsin");
    const auto rows = quasi_optimality(refinement_levels("gen:square:2", 3), Method::parse("cr"), Variant::smoothed, u,
                                       manufactured_load(u), true);
    ASSERT_EQ(rows.size(), 3u);
    for (const LevelResult& r : rows) {
        EXPECT_FALSE(r.exact);
        EXPECT_LE(r.ratio, r.c_stab * (1 + 1e-6));
    }
    // a member of S is reproduced and reported as exact
    auto m = square(2);
    const DofSpace lag = lagrange_space(m, 1);
    const Field w(lag.layout, lag.basis * random_vector(lag.size(), 9));
    const auto exact = quasi_optimality({m}, Method::parse("cr"), Variant::smoothed, field_solution(w, 1), field_load(w, 1), false);
    EXPECT_TRUE(exact[0].exact);
    EXPECT_LT(exact[0].energy_error, 1e-10);
}

TEST(Verify, LoglogSlopeOfPowerLaw) {
    EXPECT_NEAR(loglog_slope({1.0, 0.5, 0.25}, {3.0, 0.75, 0.1875}), 2.0, 1e-12);
    EXPECT_THROW(loglog_slope({1.0}, {1.0}), ConfigError);
}

TEST(Verify, SuitePassesAndCatchesTheFault) {
    const SuiteReport cr = verify_suite(square(4), Method::parse("cr"), Fault::none);
    EXPECT_TRUE(cr.passed());
    EXPECT_NEAR(cr.operator_norm, spectral_report(gram_pair(smoother_for(square(4), "cr"), 1)).c_stab, 1e-12);
    EXPECT_GT(cr.locality_max_footprint, 0);
    const SuiteReport morley = verify_suite(crisscross(2), Method::parse("morley"), Fault::none);
    EXPECT_TRUE(morley.passed());
    bool trivial = false;
    for (const Check& c : morley.checks) trivial = trivial || (c.name == "conforming-part-trivial" && c.status == "pass");
    EXPECT_TRUE(trivial);
    const SuiteReport broken = verify_suite(square(4), Method::parse("cr"), Fault::skip_bubble);
    EXPECT_FALSE(broken.passed());
    for (const Check& c : broken.checks)
        if (c.name == "right-inverse") EXPECT_EQ(c.status, "fail");
}
