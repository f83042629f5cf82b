#pragma once

// Numerical certification of a smoothing map E: S -> T against the energy
// projection Pi onto S, all through Gram matrices on the target layout.

#include "ncfem/assembly.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace ncfem {

struct GramPair {
    int order = 1;
    SpMat K;   // broken energy on the target layout
    SpMat XT;  // source basis embedded in the target layout
    SpMat Y;   // E applied to the source basis
    SpMat C;   // E in target coordinates
    SpMat GS;  // XT^T K XT
    SpMat M;   // XT^T K Y, the matrix of b_E(s, sigma) = a(s, E sigma)
    SpMat GT;  // Y^T K Y
};

GramPair gram_pair(const SmoothingMap& E, int order);

/// max_j |Pi E sigma_j - sigma_j| / |sigma_j| in the energy norm.
double right_inverse_residual(const GramPair& g);

/// max |M - GS| / max |GS|: the matrices of a(., E.) and a|SxS.
double overconsistency_residual(const GramPair& g);

/// max relative energy distance |E s - s| / |s| over the columns of
/// `conforming` (coordinates in the source basis of functions in S cap V).
double conforming_invariance_residual(const GramPair& g, const SpMat& conforming);

/// Coordinates of a basis of S cap V: S_0^p for CR/GL, the clamped C^1
/// Morley functions for Morley.
SpMat conforming_subspace(const DofSpace& space);

/// Largest eigenvalue of A x = lambda B x for SPD operators, by Lanczos in
/// the B inner product with full reorthogonalization and restarts.
struct GeneralizedOperator {
    Index n = 0;
    std::function<Vec(const Vec&)> apply_A;
    std::function<Vec(const Vec&)> apply_B;
    std::function<Vec(const Vec&)> solve_B;
};
struct LanczosResult {
    double value = 0.0;
    Vec vector;
    int steps = 0;
    bool converged = false;
};
LanczosResult lanczos_max(const GeneralizedOperator& op, double tolerance = 1e-10, int max_steps = 400);

struct SpectralOptions {
    Index dense_limit = 1200;
    bool force_iterative = false;
    int rayleigh_samples = 100;
    unsigned seed = 1;
    const DofSpace* proxy = nullptr;  // conforming proxy for the angle bound
};

struct SpectralReport {
    static constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    bool dense = false;
    bool degenerate = false;
    double c_stab = nan;      // sup |E s| / |Pi E s|
    double c_qopt = nan;      // |(Pi|_T)^{-1}|, dense path only
    double continuity = nan;  // |Pi E|
    double inf_sup = nan;     // 1 / |(Pi E)^{-1}|
    double cond = nan;        // continuity / inf_sup
    double cos_min = nan;     // smallest cosine between S and the proxy
    double rayleigh_max = nan;       // largest of the random quotients
    double rayleigh_at_vector = nan; // quotient at the computed maximizer
};
SpectralReport spectral_report(const GramPair& g, const SpectralOptions& options = {});

/// cond(b_E) through G^{-1/2} M G^{-1/2} with an eigen-decomposition of G
/// and a Jacobi SVD; independent of the production path.
double dense_condition_oracle(const GramPair& g);

/// The three equivalent nondegeneracy tests on dense matrices.
struct NondegeneracyReport {
    Index n = 0;
    Index rank_E = 0;           // dim T
    Index rank_b = 0;           // rank of b_E
    Index rank_projection = 0;  // rank of Pi E
    Index dim_s_cap_t_perp = 0;
    bool b_nondegenerate = false;
    bool projection_invertible = false;
    bool trivial_intersection = false;
    bool consistent() const {
        return b_nondegenerate == projection_invertible && projection_invertible == trivial_intersection;
    }
};
NondegeneracyReport nondegeneracy(const GramPair& g, double rank_tolerance = 1e-10);

/// E composed with the unit upper bidiagonal map I + amount * shift; its
/// projection Pi E is no longer the identity.
SmoothingMap skewed_smoother(const SmoothingMap& E, double amount);

/// Dimension of MR cap H^2_0 (Morley functions with continuous gradient
/// and clamped boundary), with a basis of it in Morley coordinates.
struct ConformingPart {
    Index dimension = 0;
    Mat basis;
};
ConformingPart morley_conforming_part(const DofSpace& morley);

struct BubbleInstabilityReport {
    std::vector<int> n;
    std::vector<double> h, ratio;
    double slope = 0.0;  // least-squares slope of log ratio vs log h
    // same quotient for the CR interpolant of sin(pi x) sin(pi y)
    std::vector<double> interpolant_ratio;
    double interpolant_slope = 0.0;
};
/// |grad B sigma| / |grad_M sigma| for sigma = sum_F Psi_F on crisscross meshes.
BubbleInstabilityReport bubble_instability(const std::vector<int>& ns);

struct AveragingWitness {
    bool found = false;
    double b_value = 0.0;  // b(s, sigma) = a(s, sigma) with s = A_1 sigma
    double a_value = 0.0;  // a(s, A_1 sigma)
    Vec sigma;
};
/// sigma in CR a-orthogonal to S_0^1 with A_1 sigma != 0.
AveragingWitness averaging_inconsistency(std::shared_ptr<const Mesh> mesh);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Energy projection of a broken field onto S: G_S x = (a(v, s_i))_i,
/// solved to a relative residual of 1e-12.
Vec project_onto(const Field& v, const DofSpace& space, int order);

/// One refinement level of a quasi-optimality study.
struct LevelResult {
    int level = 0;
    double h = 0.0;
    Index dofs = 0;
    double energy_error = 0.0;
    double best_error = 0.0;
    double ratio = 0.0;  // energy_error / best_error, NaN when exact
    double c_stab = std::numeric_limits<double>::quiet_NaN();
    bool exact = false;  // best error below 1e-13: u lies in S
    double rate = std::numeric_limits<double>::quiet_NaN();  // vs the previous level
};

/// Solves on every mesh of a refinement study and compares with the best
/// approximation; C_stab per level when requested (smoothed variant only).
std::vector<LevelResult> quasi_optimality(const std::vector<std::shared_ptr<const Mesh>>& meshes, const Method& method,
                                          Variant variant, const ExactSolution& u, const LoadFunctional& load,
                                          bool with_stability, Fault fault = Fault::none);

struct Check {
    std::string name;
    std::string status;  // pass | fail | skip
    double measured = 0.0;
    double threshold = 0.0;
    std::string ref;
};

struct VerifyTolerances {
    double right_inverse = 1e-9;
    double overconsistency = 1e-10;
    double cond = 1e-9;
    double duality = 1e-10;
    double invariance = 1e-9;
};

struct SuiteReport {
    std::string smoother;
    std::vector<Check> checks;
    double right_inverse_residual = 0.0;
    double conforming_invariance_residual = 0.0;
    double operator_norm = 0.0;  // C_stab, the energy norm of E for right inverses
    Index locality_max_footprint = 0;

    bool passed() const;
};

/// The invariant suite for one method on one mesh.
SuiteReport verify_suite(std::shared_ptr<const Mesh> mesh, const Method& method, Fault fault,
                         const VerifyTolerances& tol = {});

}  // namespace ncfem
