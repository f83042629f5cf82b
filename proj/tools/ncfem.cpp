// ncfem: solve runs, convergence studies, verification suites and named
// experiments. Exit codes: 0 ok, 1 failed verification, 2 rejected
// configuration, 3 numerical failure.

#include "ncfem/mesh_io.hpp"
#include "ncfem/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace ncfem;
using nlohmann::ordered_json;

namespace {

struct RunConfig {
    std::string command;
    std::string method = "cr";
    int p = 0;
    std::string variant = "smoothed";
    std::string mesh = "gen:square:4";
    std::string load;
    int levels = 4;
    std::string out = "ncfem_out";
    std::string fault = "none";
    std::string experiment;
    VerifyTolerances tol;
};

struct LoadSpec {
    std::string text;
    std::optional<ExactSolution> exact;
    bool checkerboard = false;
    double constant = 1.0;
};

Method resolve_method(const RunConfig& c) {
    if (c.method == "gl") {
        if (c.p < 1) throw ConfigError("--method gl needs --p >= 1");
        return Method::parse("gl:" + std::to_string(c.p));
    }
    const Method m = Method::parse(c.method);
    if (c.p != 0 && (m.kind != SpaceKind::gl || m.p != c.p))
        throw ConfigError("--p " + std::to_string(c.p) + " conflicts with --method " + c.method);
    return m;
}

Fault resolve_fault(const std::string& s) {
    if (s == "none") return Fault::none;
    if (s == "skip-bubble") return Fault::skip_bubble;
    throw ConfigError("unknown fault '" + s + "'");
}

LoadSpec resolve_load(const RunConfig& c, const Method& m) {
    LoadSpec l;
    l.text = c.load.empty() ? (m.order() == 2 ? "manufactured:biquartic" : "manufactured:sinsin") : c.load;
    const std::string& s = l.text;
    if (s.rfind("manufactured:", 0) == 0) {
        l.exact = manufactured_solution(s.substr(13));
        if (l.exact->order != m.order())
            throw ConfigError("load " + s + " is a " + (l.exact->order == 1 ? "Poisson" : "biharmonic") +
                              " solution, method " + m.name() + " is not");
    } else if (s == "checkerboard") {
        l.checkerboard = true;
    } else if (s == "constant" || s.rfind("constant:", 0) == 0) {
        if (s.size() > 9) {
            std::size_t used = 0;
            try {
                l.constant = std::stod(s.substr(9), &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != s.size() - 9) throw ConfigError("bad constant load '" + s + "'");
        }
    } else {
        throw ConfigError("unknown load '" + s + "'");
    }
    return l;
}

LoadFunctional build_load(const LoadSpec& l, const Mesh& mesh) {
    if (l.exact) return manufactured_load(*l.exact);
    if (l.checkerboard) return checkerboard_load(mesh);
    return constant_load(l.constant);
}

// rejected before any mesh is built
void check_combination(Variant v, const LoadSpec& l) {
    if (v == Variant::classical && l.checkerboard)
        throw ConfigError("the classical variant cannot take the divergence-form checkerboard load");
}

std::shared_ptr<const Mesh> load_mesh(const std::string& source, const Method& m) {
    auto mesh = make_mesh(source);
    if (m.kind == SpaceKind::morley && mesh->dim() != 2)
        throw ConfigError("morley needs a planar mesh, got dimension " + std::to_string(mesh->dim()));
    return mesh;
}

std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12e", x);
    return buf;
}

std::filesystem::path prepare(const std::string& dir) {
    std::filesystem::create_directories(dir);
    return dir;
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

ordered_json base_manifest(const RunConfig& c, const Method& m) {
    ordered_json j;
    j["command"] = c.command;
    j["method"] = m.name();
    return j;
}

int cmd_solve(const RunConfig& c) {
    const Method m = resolve_method(c);
    const Variant v = parse_variant(c.variant);
    const LoadSpec ls = resolve_load(c, m);
    check_combination(v, ls);
    const Fault fault = resolve_fault(c.fault);
    auto mesh = load_mesh(c.mesh, m);

    const Discretization d = discretize(mesh, m, v, fault);
    const DiscreteSolution s = solve_method(d, build_load(ls, *mesh));

    const auto dir = prepare(c.out);
    {
        std::ofstream f(dir / "solution.csv");
        if (!f) throw ConfigError("cannot write " + (dir / "solution.csv").string());
        write_samples_csv(f, s.field, 4, m.order() == 2);
    }
    ordered_json j = base_manifest(c, m);
    j["variant"] = to_string(v);
    j["mesh"] = c.mesh;
    j["mesh_hash"] = hex(mesh_hash(*mesh));
    j["elements"] = mesh->num_elements();
    j["load"] = ls.text;
    j["dofs"] = d.space.size();
    j["solver"] = s.report.solver;
    j["iterations"] = s.report.iterations;
    j["residual"] = s.report.residual;
    if (ls.exact) j["energy_error"] = energy_error(*ls.exact, s.field);
    write_json(dir / "manifest.json", j);
    std::cout << m.name() << ' ' << to_string(v) << ": " << d.space.size() << " dofs";
    if (ls.exact) std::cout << ", energy error " << num(j["energy_error"].get<double>());
    std::cout << '\n';
    return 0;
}

int cmd_convergence(const RunConfig& c) {
    const Method m = resolve_method(c);
    const Variant v = parse_variant(c.variant);
    const LoadSpec ls = resolve_load(c, m);
    check_combination(v, ls);
    if (c.levels < 3) throw ConfigError("convergence needs --levels >= 3");
    if (!ls.exact) throw ConfigError("convergence needs a manufactured load");
    const Fault fault = resolve_fault(c.fault);
    load_mesh(c.mesh, m);
    const auto meshes = refinement_levels(c.mesh, c.levels);

    const auto rows = quasi_optimality(meshes, m, v, *ls.exact, manufactured_load(*ls.exact), false, fault);
    std::vector<double> h, e;
    for (const LevelResult& r : rows) {
        h.push_back(r.h);
        e.push_back(r.energy_error);
    }
    const double fit = loglog_slope(h, e);

    const auto dir = prepare(c.out);
    std::ofstream csv(dir / "convergence.csv"), dat(dir / "convergence.dat");
    if (!csv || !dat) throw ConfigError("cannot write into " + dir.string());
    csv << "level,h_max,dofs,energy_error,best_error,ratio,rate\n";
    dat << "# level h_max dofs energy_error best_error ratio rate\n";
    for (const LevelResult& r : rows) {
        csv << r.level << ',' << num(r.h) << ',' << r.dofs << ',' << num(r.energy_error) << ',' << num(r.best_error)
            << ',' << num(r.ratio) << ',' << num(r.rate) << '\n';
        dat << r.level << ' ' << num(r.h) << ' ' << r.dofs << ' ' << num(r.energy_error) << ' ' << num(r.best_error)
            << ' ' << num(r.ratio) << ' ' << num(r.rate) << '\n';
    }
    csv << "fit,,,,,," << num(fit) << '\n';
    dat << "# fitted rate " << num(fit) << '\n';

    ordered_json j = base_manifest(c, m);
    j["variant"] = to_string(v);
    j["mesh"] = c.mesh;
    j["levels"] = c.levels;
    j["load"] = ls.text;
    j["fitted_rate"] = fit;
    write_json(dir / "manifest.json", j);
    std::cout << m.name() << ' ' << to_string(v) << ": fitted rate " << num(fit) << '\n';
    return 0;
}

int cmd_verify(const RunConfig& c) {
    const Method m = resolve_method(c);
    const Fault fault = resolve_fault(c.fault);
    auto mesh = load_mesh(c.mesh, m);
    const SuiteReport r = verify_suite(mesh, m, fault, c.tol);

    ordered_json j = base_manifest(c, m);
    j["mesh"] = c.mesh;
    j["mesh_hash"] = hex(mesh_hash(*mesh));
    j["fault"] = c.fault;
    ordered_json checks = ordered_json::array();
    for (const Check& k : r.checks)
        checks.push_back({{"name", k.name}, {"status", k.status}, {"measured", k.measured},
                          {"threshold", k.threshold}, {"ref", k.ref}});
    j["checks"] = checks;
    j["smoother"] = {{"name", r.smoother},
                     {"right_inverse_residual", r.right_inverse_residual},
                     {"conforming_invariance_residual", r.conforming_invariance_residual},
                     {"operator_norm", r.operator_norm},
                     {"locality_max_footprint", r.locality_max_footprint}};
    j["passed"] = r.passed();
    write_json(prepare(c.out) / "verify.json", j);

    for (const Check& k : r.checks) std::cout << k.status << ' ' << k.name << ' ' << num(k.measured) << '\n';
    if (r.passed()) return 0;
    std::cerr << "failing checks:";
    for (const Check& k : r.checks)
        if (k.status == "fail") std::cerr << ' ' << k.name;
    std::cerr << '\n';
    return 1;
}

int cmd_experiment(const RunConfig& c) {
    const auto dir = prepare(c.out);
    ordered_json j;
    j["command"] = "experiment";
    j["experiment"] = c.experiment;
    std::ofstream dat(dir / (c.experiment + ".dat"));
    if (!dat) throw ConfigError("cannot write into " + dir.string());

    if (c.experiment == "bubble-instability") {
        if (c.levels < 2) throw ConfigError("bubble-instability needs --levels >= 2");
        std::vector<int> ns;
        for (int l = 0; l < c.levels; ++l) ns.push_back(4 << l);
        const BubbleInstabilityReport r = bubble_instability(ns);
        j["n"] = r.n;
        j["h"] = r.h;
        j["ratio"] = r.ratio;
        j["slope"] = r.slope;
        j["threshold"] = -0.9;
        j["status"] = r.slope <= -0.9 ? "pass" : "fail";
        j["interpolant_ratio"] = r.interpolant_ratio;
        j["interpolant_slope"] = r.interpolant_slope;
        dat << "# n h ratio interpolant_ratio\n";
        for (std::size_t i = 0; i < r.n.size(); ++i)
            dat << r.n[i] << ' ' << num(r.h[i]) << ' ' << num(r.ratio[i]) << ' ' << num(r.interpolant_ratio[i]) << '\n';
        std::cout << "slope " << num(r.slope) << ", interpolant slope " << num(r.interpolant_slope) << '\n';
    } else if (c.experiment == "averaging-inconsistency") {
        const std::string source = c.mesh.empty() ? "gen:crisscross:1" : c.mesh;
        auto mesh = load_mesh(source, Method::parse("cr"));
        const AveragingWitness w = averaging_inconsistency(mesh);
        j["mesh"] = source;
        j["found"] = w.found;
        j["b_value"] = w.b_value;
        j["a_value"] = w.a_value;
        j["status"] = w.found && std::abs(w.b_value) <= 1e-12 && std::abs(w.a_value) > 1e-6 ? "pass" : "fail";
        dat << "# dof sigma\n";
        for (Index i = 0; i < w.sigma.size(); ++i) dat << i << ' ' << num(w.sigma(i)) << '\n';
        std::cout << "b(s, sigma) " << num(w.b_value) << ", a(s, A sigma) " << num(w.a_value) << '\n';
    } else if (c.experiment == "morley-conforming-part") {
        std::vector<std::string> sources;
        if (c.mesh.empty())
            sources = {"gen:square:1", "gen:square:2", "gen:square:4"};
        else
            sources = {c.mesh};
        ordered_json rows = ordered_json::array();
        bool trivial = true;
        dat << "# mesh dofs dimension\n";
        for (const std::string& s : sources) {
            const DofSpace mr = morley_space(load_mesh(s, Method::parse("morley")));
            const Index dim = morley_conforming_part(mr).dimension;
            trivial = trivial && dim == 0;
            rows.push_back({{"mesh", s}, {"dofs", mr.size()}, {"dimension", dim}});
            dat << s << ' ' << mr.size() << ' ' << dim << '\n';
            std::cout << s << ": dim " << dim << '\n';
        }
        j["meshes"] = rows;
        j["status"] = trivial ? "pass" : "fail";
    } else {
        throw ConfigError("unknown experiment '" + c.experiment +
                          "' (bubble-instability, averaging-inconsistency, morley-conforming-part)");
    }
    write_json(dir / (c.experiment + ".json"), j);
    return 0;
}

void add_common(CLI::App* app, RunConfig& c) {
    app->add_option("--method", c.method, "cr, gl:p, gl (with --p) or morley");
    app->add_option("--p", c.p, "degree for --method gl");
    app->add_option("--mesh", c.mesh, "gen:square:n, gen:crisscross:n, gen:lshape:n or a mesh file");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--fault", c.fault, "none or skip-bubble (test hook)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonconforming finite elements with smoothed test functions"};
    app.require_subcommand(1);
    RunConfig c;

    auto* solve = app.add_subcommand("solve", "solve one problem");
    add_common(solve, c);
    solve->add_option("--variant", c.variant, "classical or smoothed");
    solve->add_option("--load", c.load, "manufactured:sinsin|biquartic, checkerboard, constant[:value]");

    auto* conv = app.add_subcommand("convergence", "refinement study against a manufactured solution");
    add_common(conv, c);
    conv->add_option("--variant", c.variant, "classical or smoothed");
    conv->add_option("--load", c.load, "manufactured:sinsin or manufactured:biquartic");
    conv->add_option("--levels", c.levels, "number of meshes (>= 3)");

    auto* verify = app.add_subcommand("verify", "invariant suite of the smoothing operator");
    add_common(verify, c);
    verify->add_option("--tol-right-inverse", c.tol.right_inverse);
    verify->add_option("--tol-overconsistency", c.tol.overconsistency);
    verify->add_option("--tol-cond", c.tol.cond);
    verify->add_option("--tol-duality", c.tol.duality);
    verify->add_option("--tol-invariance", c.tol.invariance);

    auto* exp = app.add_subcommand("experiment", "named experiment");
    exp->add_option("name", c.experiment, "bubble-instability, averaging-inconsistency or morley-conforming-part")
        ->required();
    exp->add_option("--mesh", c.mesh, "mesh override");
    exp->add_option("--levels", c.levels, "levels for bubble-instability");
    exp->add_option("--out", c.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (solve->parsed()) {
            c.command = "solve";
            return cmd_solve(c);
        }
        if (conv->parsed()) {
            c.command = "convergence";
            return cmd_convergence(c);
        }
        if (verify->parsed()) {
            c.command = "verify";
            return cmd_verify(c);
        }
        c.command = "experiment";
        // experiments pick their own default meshes
        if (exp->count("--mesh") == 0) c.mesh.clear();
        if (exp->count("--levels") == 0) c.levels = 3;
        return cmd_experiment(c);
    } catch (const ConfigError& e) {
        std::cerr << "ncfem: " << e.what() << '\n';
        return 2;
    } catch (const MeshError& e) {
        std::cerr << "ncfem: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "ncfem: " << e.what() << '\n';
        return 3;
    } catch (const QuadratureError& e) {
        std::cerr << "ncfem: " << e.what() << '\n';
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "ncfem: " << e.what() << '\n';
        return 2;
    }
}
