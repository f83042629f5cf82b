#pragma once

// Smoothing operators from a nonconforming space into a conforming target.
// Every operator is stored as a sparse coefficient map into a concrete target
// DofSpace: Lagrange S_0^q for the second-order problems and the block space
// HCT + Morley normal bubbles for the biharmonic problem.

#include "ncfem/spaces.hpp"

#include <string>

namespace ncfem {

struct SmoothingMap {
    std::string name;
    DofSpace source;
    DofSpace target;
    SpMat coefficients;  // target.size() x source.size()

    /// Broken coefficients of E(source basis) over the target layout.
    SpMat images() const { return SpMat(target.basis * coefficients); }
};

enum class Fault { none, skip_bubble };

/// Simplified nodal averaging A_p into S_0^p (p = source degree): the value
/// at every interior Lagrange node is taken from the smallest element
/// containing it.
SmoothingMap nodal_averaging(const DofSpace& source);

/// The plain bubble smoother sigma -> sum_F (mean_F sigma) * face bubble,
/// target S_0^d. Preserves face means but is unstable under refinement.
SmoothingMap face_bubble_smoother(const DofSpace& cr);

/// Q_F as a reference matrix: Bernstein trace coefficients of degree
/// `in_degree` on a face simplex with `nvars` coordinates to Q_F v of degree
/// `out_degree`, defined by mean(Q_F v q Phi_F) = mean(v q) for all q of
/// degree out_degree, Phi_F = prod of the face barycentrics.
const Mat& face_weighted_projection(int nvars, int in_degree, int out_degree);

/// Element counterpart Q_K with weight Phi_K = prod of all barycentrics.
const Mat& element_weighted_projection(int nvars, int in_degree, int out_degree);

/// E_p = A_p + B_p (id - A_p) for CR (p = 1) and GL^p, target S_0^{p+d-1}.
/// With Fault::skip_bubble the bubble part is dropped (E = A_p).
SmoothingMap moment_smoother(const DofSpace& source, Fault fault = Fault::none);

/// A_HCT: Morley -> HCT, vertex values and gradients from K_z, normal
/// derivatives at face midpoints from K1.
SmoothingMap hct_averaging(const DofSpace& morley, const DofSpace& hct);

/// Target of E_MR: HCT + Morley normal bubbles on the Clough-Tocher layout of
/// degree 9 (no dof functionals).
DofSpace hct_bubble_space(const DofSpace& hct, const DofSpace& bubbles);

/// E_MR = A_HCT + B_dn (id - A_HCT).
SmoothingMap morley_smoother(const DofSpace& morley, Fault fault = Fault::none);

/// Smoother matching the source kind (CR/GL -> moment_smoother, Morley ->
/// morley_smoother).
SmoothingMap build_smoother(const DofSpace& source, Fault fault = Fault::none);

/// Element support of every image column, and the locality check: the
/// support of E phi_i must lie in the elements touching supp phi_i.
struct LocalityReport {
    Index max_footprint = 0;  // largest number of elements in one image support
    Index violations = 0;     // columns leaving their neighbourhood
};
LocalityReport locality(const SmoothingMap& map, double tolerance = 1e-12);

}  // namespace ncfem
