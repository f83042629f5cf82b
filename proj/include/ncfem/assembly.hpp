#pragma once

#include "ncfem/field.hpp"
#include "ncfem/smoothing.hpp"

#include <functional>
#include <optional>
#include <string>

namespace ncfem {

/// Block-diagonal broken energy matrix over a layout: order 1 gives
/// int grad u . grad v, order 2 gives int D^2 u : D^2 v, cell by cell and
/// exact (Bernstein reference tables).
SpMat stiffness(const BrokenLayout& layout, int order);

/// basis^T stiffness basis
SpMat energy_matrix(const DofSpace& space, int order);

using ElementScalar = std::function<double(Index element, const Point& x)>;
using ElementVector = std::function<Point(Index element, const Point& x)>;
using ElementMatrix = std::function<SmallMat(Index element, const Point& x)>;

/// <l, v> = int f0 v - int g . grad v + int H : D^2 v. The element index lets
/// piecewise data be evaluated on the correct side of a face.
struct LoadFunctional {
    std::string name;
    ElementScalar f0;
    ElementVector g;
    ElementMatrix H;
    int degree = -1;  // polynomial degree of the data, -1 when not polynomial

    /// True when the load is not an L^2 density alone.
    bool rough() const { return static_cast<bool>(g) || static_cast<bool>(H); }
};

/// Pairing of the load with every broken basis polynomial of the layout.
/// Polynomial data are integrated exactly; otherwise with degree
/// layout degree + `extra` (capped at the largest available rule).
Vec load_vector(const LoadFunctional& load, const BrokenLayout& layout, int extra = 8);

/// Exact solution of a manufactured problem, element aware like the loads.
struct ExactSolution {
    std::string name;
    int order = 1;  // 1: Poisson, 2: biharmonic
    ElementScalar value;
    ElementVector gradient;
    ElementMatrix hessian;
    int degree = -1;
};

/// "sinsin" (Poisson) or "biquartic" (biharmonic, clamped).
ExactSolution manufactured_solution(const std::string& name);
/// f = -Delta u or Delta^2 u for the analytic catalog.
LoadFunctional manufactured_load(const ExactSolution& u);

/// Piecewise polynomial exact solution and its divergence-form load
/// g = -grad u (order 1) or H = D^2 u (order 2).
ExactSolution field_solution(const Field& u, int order);
LoadFunctional field_load(const Field& u, int order);

/// f0 = 0, g = +-(1, 1) in a checkerboard of the bounding box quadrants.
LoadFunctional checkerboard_load(const Mesh& mesh);
LoadFunctional constant_load(double value = 1.0);

enum class SolverChoice { automatic, direct, cg };

struct SolveReport {
    Vec x;
    double residual = 0.0;  // |Ax - b| / (|A| |x| + |b|), max norms
    std::string solver;
    int iterations = 0;
};

/// SPD solve with normwise backward error <= tolerance. The direct path uses a
/// sparse LDL^T factorization (NumericalError on a nonpositive pivot) with
/// iterative refinement; automatic switches to preconditioned CG above
/// 5e4 unknowns.
SolveReport solve_spd(const SpMat& A, const Vec& b, SolverChoice choice = SolverChoice::automatic,
                      double tolerance = 1e-12);

struct Method {
    SpaceKind kind = SpaceKind::cr;
    int p = 1;

    /// "cr", "gl:p" or "morley"
    static Method parse(const std::string& text);
    std::string name() const;
    int order() const { return kind == SpaceKind::morley ? 2 : 1; }
};

enum class Variant { classical, smoothed };
Variant parse_variant(const std::string& text);
std::string to_string(Variant v);

struct Discretization {
    Method method;
    Variant variant = Variant::smoothed;
    DofSpace space;
    SpMat matrix;  // a_M restricted to the space
    std::optional<SmoothingMap> smoother;
};

Discretization discretize(std::shared_ptr<const Mesh> mesh, const Method& method, Variant variant,
                          Fault fault = Fault::none);

/// <l, E sigma_i> (smoothed) or int f0 sigma_i (classical; rough loads are
/// rejected with ConfigError).
Vec assemble_rhs(const Discretization& disc, const LoadFunctional& load);

struct DiscreteSolution {
    Vec coefficients;
    Field field;
    SolveReport report;
};
DiscreteSolution solve_method(const Discretization& disc, const LoadFunctional& load,
                              SolverChoice choice = SolverChoice::automatic);

/// Broken energy norm of u - v, integrated cell by cell on the layout of v
/// with degree 2 * degree(v) + extra.
double energy_error(const ExactSolution& u, const Field& v, int extra = 8);

/// Energy projection of u onto the space and the resulting best error.
struct BestApproximation {
    Vec coefficients;
    double error = 0.0;
};
BestApproximation best_approximation(const ExactSolution& u, const DofSpace& space, int extra = 8);

/// sqrt(sum_K |grad u - mean_K grad u|^2_K), the localized CR best error.
double cr_localized_error(const ExactSolution& u, const Mesh& mesh, int rule_degree);

}  // namespace ncfem
