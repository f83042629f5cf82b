#pragma once

#include "ncfem/common.hpp"

#include <span>
#include <vector>

namespace ncfem {

/// Exponents attached to the vertices of a simplex (one entry per barycentric
/// coordinate).
using MultiIndex = std::vector<int>;

int order(std::span<const int> alpha);

/// alpha! = prod alpha_i!
double multi_factorial(std::span<const int> alpha);

double factorial(int n);

double binomial(int n, int k);

/// Closed-form integral of prod lambda_i^{alpha_i} over an n-simplex of unit
/// measure: n! alpha! / (n + |alpha|)!.
double barycentric_monomial_integral(int n, std::span<const int> alpha);

/// All multi-indices with `nvars` entries and order `degree`, in a fixed
/// order (lexicographically descending), with O(1) reverse lookup.
class MultiIndexSet {
public:
    MultiIndexSet(int nvars, int degree);

    int nvars() const { return nvars_; }
    int degree() const { return degree_; }
    Index size() const { return static_cast<Index>(indices_.size()); }

    const MultiIndex& operator[](Index i) const { return indices_[static_cast<std::size_t>(i)]; }

    /// Position of alpha, or -1 if alpha has the wrong order or a negative entry.
    Index find(std::span<const int> alpha) const;

    auto begin() const { return indices_.begin(); }
    auto end() const { return indices_.end(); }

private:
    int nvars_;
    int degree_;
    std::vector<MultiIndex> indices_;
    std::vector<Index> lookup_;
};

/// Shared, lazily built table. Thread safe; the returned reference is stable.
const MultiIndexSet& multi_indices(int nvars, int degree);

/// Number of polynomials of degree <= p in n variables.
inline Index polynomial_dimension(int n, int p) {
    return p < 0 ? 0 : static_cast<Index>(binomial(n + p, n) + 0.5);
}

}  // namespace ncfem
