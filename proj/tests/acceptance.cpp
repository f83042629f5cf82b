// One PASS/FAIL line per acceptance criterion. Exit status 1 if any fails,
// unless --report-only is given.

#include "ncfem/mesh_io.hpp"
#include "ncfem/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

using namespace ncfem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::shared_ptr<const Mesh> gen(const std::string& s) { return make_mesh("gen:" + s); }

SmoothingMap smoother_for(std::shared_ptr<const Mesh> m, const Method& method) {
    return *discretize(std::move(m), method, Variant::smoothed).smoother;
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

Vec random_vector(Index n, unsigned seed) {
    std::mt19937 g(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = dist(g);
    return v;
}

struct Case {
    const char* method;
    const char* mesh;
};

// mesh sizes chosen for 2k - 5k unknowns
const Case kRightInverseCases[] = {
    {"cr", "square:40"}, {"gl:2", "square:24"}, {"gl:3", "square:16"}, {"morley", "square:32"}};

Outcome right_inverse() {
    Outcome o{true, ""};
    for (const Case& c : kRightInverseCases) {
        const Method m = Method::parse(c.method);
        const SmoothingMap E = smoother_for(gen(c.mesh), m);
        const double r = right_inverse_residual(gram_pair(E, m.order()));
        o.pass = o.pass && r <= 1e-9;
        o.detail += std::string(c.method) + " n=" + std::to_string(E.source.size()) + " " + fmt("%.1e", r) + "; ";
    }
    return o;
}

Outcome overconsistency() {
    Outcome o{true, ""};
    for (const Case& c : {Case{"cr", "square:16"}, Case{"gl:2", "square:12"}, Case{"gl:3", "square:8"},
                          Case{"morley", "square:16"}}) {
        const Method m = Method::parse(c.method);
        const double r = overconsistency_residual(gram_pair(smoother_for(gen(c.mesh), m), m.order()));
        o.pass = o.pass && r <= 1e-10;
        o.detail += std::string(c.method) + " " + fmt("%.1e", r) + "; ";
    }
    return o;
}

Outcome condition_number() {
    Outcome o{true, ""};
    double worst = 0.0;
    for (const Case& c : {Case{"cr", "crisscross:4"}, Case{"gl:2", "crisscross:4"}, Case{"gl:3", "crisscross:3"},
                          Case{"morley", "crisscross:4"}, Case{"cr", "square:32"}}) {
        const Method m = Method::parse(c.method);
        const SpectralReport r = spectral_report(gram_pair(smoother_for(gen(c.mesh), m), m.order()));
        worst = std::max(worst, std::abs(r.cond - 1.0));
        o.pass = o.pass && std::abs(r.cond - 1.0) <= 1e-9;
    }
    o.detail = "max |cond - 1| " + fmt("%.1e", worst) + "; skewed vs oracle:";
    for (const char* name : {"cr", "gl:2", "morley"}) {
        const Method m = Method::parse(name);
        const GramPair g = gram_pair(skewed_smoother(smoother_for(gen("crisscross:3"), m), 0.3), m.order());
        const double cond = spectral_report(g).cond, oracle = dense_condition_oracle(g);
        const double rel = std::abs(cond - oracle) / oracle;
        o.pass = o.pass && cond > 1.0 + 1e-6 && rel <= 1e-8;
        o.detail += std::string(" ") + name + " " + fmt("%.4f", cond) + " (" + fmt("%.1e", rel) + ")";
    }
    return o;
}

Outcome localization() {
    Outcome o{true, ""};
    const ExactSolution u = manufactured_solution("sinsin");
    for (const auto& mesh : refinement_levels("gen:square:4", 3)) {
        const double global = best_approximation(u, cr_space(mesh)).error;
        const double local = cr_localized_error(u, *mesh, 20);
        const double rel = std::abs(global - local) / local;
        o.pass = o.pass && rel <= 1e-9;
        o.detail += fmt("%.1e ", rel);
    }
    return o;
}

struct StudyCase {
    const char* method;
    const char* load;
    const char* base;
};

Outcome quasi_optimality_ratios() {
    Outcome o{true, ""};
    for (const StudyCase& c : {StudyCase{"cr", "sinsin", "gen:square:8"}, StudyCase{"gl:2", "sinsin", "gen:square:16"},
                               StudyCase{"morley", "biquartic", "gen:square:12"}}) {
        const ExactSolution u = manufactured_solution(c.load);
        const auto rows = quasi_optimality(refinement_levels(c.base, 3), Method::parse(c.method), Variant::smoothed, u,
                                           manufactured_load(u), true);
        double lo = rows[0].c_stab, hi = rows[0].c_stab;
        bool bounded = true;
        double worst = 0.0;
        for (const LevelResult& r : rows) {
            lo = std::min(lo, r.c_stab);
            hi = std::max(hi, r.c_stab);
            bounded = bounded && std::isfinite(r.c_stab) && r.ratio <= r.c_stab * (1 + 1e-6);
            worst = std::max(worst, r.ratio / r.c_stab);
        }
        const double variation = (hi - lo) / hi;
        o.pass = o.pass && bounded && variation < 0.05;
        o.detail += std::string(c.method) + " C_stab " + fmt("%.3f", lo) + ".." + fmt("%.3f", hi) + " var " +
                    fmt("%.1f%%", 100 * variation) + " max ratio/C " + fmt("%.2f", worst) + "; ";
    }
    return o;
}

Outcome convergence_rates() {
    Outcome o{true, ""};
    struct RateCase {
        StudyCase study;
        double expected, tolerance;
    };
    for (const RateCase& c : {RateCase{{"cr", "sinsin", "gen:square:4"}, 1.0, 0.1},
                              RateCase{{"gl:2", "sinsin", "gen:square:4"}, 2.0, 0.15},
                              RateCase{{"morley", "biquartic", "gen:square:4"}, 1.0, 0.15}}) {
        const ExactSolution u = manufactured_solution(c.study.load);
        const auto rows = quasi_optimality(refinement_levels(c.study.base, 4), Method::parse(c.study.method),
                                           Variant::smoothed, u, manufactured_load(u), false);
        std::vector<double> h, e;
        for (const LevelResult& r : rows) {
            h.push_back(r.h);
            e.push_back(r.energy_error);
        }
        const double rate = loglog_slope(h, e);
        o.pass = o.pass && std::abs(rate - c.expected) <= c.tolerance;
        o.detail += std::string(c.study.method) + " " + fmt("%.3f", rate) + "; ";
    }
    return o;
}

Outcome negative_results() {
    Outcome o{true, ""};
    const BubbleInstabilityReport b = bubble_instability({4, 8, 16});
    const bool a = b.slope <= -0.9;
    o.detail += "(a) slope " + fmt("%.3f", b.slope) + (a ? " ok" : " FAIL") + " [CR interpolant slope " +
                fmt("%.3f", b.interpolant_slope) + "]; ";
    const AveragingWitness w = averaging_inconsistency(gen("crisscross:1"));
    const bool wb = w.found && std::abs(w.b_value) <= 1e-12 && std::abs(w.a_value) > 1e-6;
    o.detail += "(b) b " + fmt("%.1e", w.b_value) + " a " + fmt("%.3f", w.a_value) + (wb ? " ok" : " FAIL") + "; ";
    bool c = true;
    o.detail += "(c) dims";
    for (int n : {1, 2, 4}) {
        const Index dim = morley_conforming_part(morley_space(gen("square:" + std::to_string(n)))).dimension;
        c = c && dim == 0;
        o.detail += " " + std::to_string(dim);
    }
    o.detail += c ? " ok" : " FAIL";
    o.pass = a && wb && c;
    return o;
}

Outcome exact_reproduction() {
    Outcome o{true, ""};
    auto check = [&](const std::string& label, const Field& u, const Method& m, std::shared_ptr<const Mesh> mesh) {
        const ExactSolution ex = field_solution(u, m.order());
        const double norm = energy_error(ex, Field(u.layout(), Vec::Zero(u.layout().size())));
        const DiscreteSolution s = solve_method(discretize(mesh, m, Variant::smoothed), field_load(u, m.order()));
        const double err = energy_error(ex, s.field) / norm;
        o.pass = o.pass && err <= 1e-10;
        o.detail += label + " " + fmt("%.1e", err) + "; ";
    };
    auto mesh = gen("crisscross:3");
    for (int p = 1; p <= 3; ++p) {
        const DofSpace lag = lagrange_space(mesh, p);
        const Field u(lag.layout, lag.basis * random_vector(lag.size(), 10 + static_cast<unsigned>(p)));
        check(p == 1 ? "cr" : "gl:" + std::to_string(p), u, Method::parse(p == 1 ? "cr" : "gl:" + std::to_string(p)), mesh);
    }
    const DofSpace mr = morley_space(mesh);
    const ConformingPart cp = morley_conforming_part(mr);
    if (cp.dimension == 0) {
        o.detail += "morley skipped (MR cap H^2_0 trivial)";
    } else {
        check("morley", Field(mr.layout, mr.basis * cp.basis.col(0)), Method::parse("morley"), mesh);
    }
    return o;
}

Outcome rough_loads() {
    Outcome o{true, ""};
    auto mesh = gen("square:8");
    const LoadFunctional l = checkerboard_load(*mesh);
    for (const char* name : {"cr", "gl:2", "gl:3", "morley"}) {
        const DiscreteSolution s = solve_method(discretize(mesh, Method::parse(name), Variant::smoothed), l);
        const bool finite = s.coefficients.allFinite() && s.coefficients.norm() > 0.0;
        o.pass = o.pass && finite;
        o.detail += std::string(name) + (finite ? " finite; " : " NOT FINITE; ");
    }
    for (const char* name : {"cr", "gl:2", "morley"}) {
        bool rejected = false;
        try {
            assemble_rhs(discretize(mesh, Method::parse(name), Variant::classical), l);
        } catch (const ConfigError&) {
            rejected = true;
        }
        o.pass = o.pass && rejected;
        o.detail += std::string("classical ") + name + (rejected ? " rejected; " : " ACCEPTED; ");
    }
    return o;
}

double radical_inverse(std::uint64_t i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
        i /= static_cast<std::uint64_t>(base);
    }
    return r;
}

// Halton points in the cube, sorted into uniform simplex spacings
double qmc_monomial_mean(const std::vector<int>& alpha, int samples, double shift) {
    static const int bases[] = {2, 3, 5};
    const int n = static_cast<int>(alpha.size()) - 1;
    double sum = 0.0;
    std::vector<double> u(static_cast<std::size_t>(n));
    for (int s = 1; s <= samples; ++s) {
        for (int i = 0; i < n; ++i) {
            const double x = radical_inverse(static_cast<std::uint64_t>(s), bases[i]) + shift * (i + 1);
            u[static_cast<std::size_t>(i)] = x - std::floor(x);
        }
        std::sort(u.begin(), u.end());
        double prev = 0.0, f = 1.0;
        for (int i = 0; i <= n; ++i) {
            const double next = i < n ? u[static_cast<std::size_t>(i)] : 1.0;
            f *= std::pow(next - prev, alpha[static_cast<std::size_t>(i)]);
            prev = next;
        }
        sum += f;
    }
    return sum / samples;
}

Outcome quadrature_hygiene() {
    Outcome o{true, ""};
    std::mt19937 g(7);
    std::uniform_int_distribution<int> nd(1, 3), ad(0, 8);
    std::uniform_real_distribution<double> coord(-1.0, 1.0), shift(0.0, 1.0);
    double worst = 0.0;
    for (int c = 0; c < 20; ++c) {
        const int n = nd(g);
        Mat v;
        do {
            v.resize(std::max(n, 2), n + 1);
            for (Index i = 0; i < v.size(); ++i) v.data()[i] = coord(g);
        } while (simplex_measure(v) <= 0.05);
        std::vector<int> alpha(static_cast<std::size_t>(n + 1));
        int budget = 8;
        for (int& a : alpha) {
            a = std::min(ad(g), budget);
            budget -= a;
        }
        const double exact = integrate_barycentric_monomial(v, alpha);
        const double mc = simplex_measure(v) * qmc_monomial_mean(alpha, 1 << 20, shift(g));
        worst = std::max(worst, std::abs(mc - exact) / exact);
    }
    o.pass = worst <= 1e-3;
    o.detail = "max rel " + fmt("%.1e", worst);
    const Discretization d = discretize(gen("square:16"), Method::parse("gl:2"), Variant::classical);
    const Vec b = assemble_rhs(d, constant_load());
    const Vec x1 = solve_spd(d.matrix, b, SolverChoice::direct).x;
    const Vec x2 = solve_spd(d.matrix, b, SolverChoice::cg).x;
    const double rel = (x1 - x2).norm() / x1.norm();
    o.pass = o.pass && rel <= 1e-10;
    o.detail += "; cg vs direct " + fmt("%.1e", rel) + " (n=" + std::to_string(d.space.size()) + ")";
    return o;
}

struct Criterion {
    const char* label;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const bool report_only = argc > 1 && std::string_view(argv[1]) == "--report-only";
    const Criterion criteria[] = {
        {"AC1 right-inverse certification", 30, right_inverse},
        {"AC2 overconsistency", 10, overconsistency},
        {"AC3 condition number", 10, condition_number},
        {"AC4 CR localization identity", 10, localization},
        {"AC5 quasi-optimality ratios", 120, quasi_optimality_ratios},
        {"AC6 convergence rates", 120, convergence_rates},
        {"AC7 negative results", 60, negative_results},
        {"AC8 exact reproduction", 10, exact_reproduction},
        {"AC9 H^-1 capability split", 5, rough_loads},
        {"AC10 quadrature/oracle hygiene", 30, quadrature_hygiene},
    };
    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = seconds <= c.budget_seconds;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("%s %s: %s [%.1f s / %.0f s%s]\n", pass ? "PASS" : "FAIL", c.label, o.detail.c_str(), seconds,
                    c.budget_seconds, in_time ? "" : " over budget");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
    return failures == 0 || report_only ? 0 : 1;
}
