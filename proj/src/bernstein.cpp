#include "ncfem/bernstein.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace ncfem {

namespace {

template <typename Build>
const Mat& cached(std::tuple<int, int, int, int> key, Build&& build) {
    static std::mutex mutex;
    static std::map<std::tuple<int, int, int, int>, std::unique_ptr<Mat>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[key];
    if (!slot) slot = std::make_unique<Mat>(build());
    return *slot;
}

}  // namespace

const Mat& BernsteinTables::vandermonde(int nvars, int degree) {
    return cached({0, nvars, degree, 0}, [&] {
        const auto& set = multi_indices(nvars, degree);
        Mat V(set.size(), set.size());
        for (Index i = 0; i < set.size(); ++i) {
            Bary lambda(nvars);
            for (int z = 0; z < nvars; ++z)
                lambda(z) = degree == 0 ? 1.0 / nvars : double(set[i][static_cast<std::size_t>(z)]) / degree;
            V.row(i) = bb::basis_values<double>(degree, lambda).transpose();
        }
        return V;
    });
}

const Mat& BernsteinTables::nodal_to_bernstein(int nvars, int degree) {
    return cached({1, nvars, degree, 0}, [&] {
        const Mat& V = vandermonde(nvars, degree);
        return Mat(V.fullPivLu().inverse());
    });
}

const Mat& BernsteinTables::mass(int nvars, int degree) {
    return cached({2, nvars, degree, 0}, [&] {
        const auto& set = multi_indices(nvars, degree);
        const int n = nvars - 1;
        Mat M(set.size(), set.size());
        MultiIndex g(static_cast<std::size_t>(nvars));
        for (Index i = 0; i < set.size(); ++i)
            for (Index j = 0; j < set.size(); ++j) {
                for (int z = 0; z < nvars; ++z)
                    g[static_cast<std::size_t>(z)] = set[i][static_cast<std::size_t>(z)] + set[j][static_cast<std::size_t>(z)];
                M(i, j) = bb::multinomial(degree, set[i]) * bb::multinomial(degree, set[j]) *
                          barycentric_monomial_integral(n, g);
            }
        return M;
    });
}

const Mat& BernsteinTables::elevation(int nvars, int from, int to) {
    return cached({3, nvars, from, to}, [&] {
        const auto& low = multi_indices(nvars, from);
        const auto& high = multi_indices(nvars, to);
        Mat E(high.size(), low.size());
        for (Index j = 0; j < low.size(); ++j) {
            bb::VecX<double> e = bb::VecX<double>::Zero(low.size());
            e(j) = 1.0;
            E.col(j) = bb::elevate<double>(e, nvars, from, to);
        }
        return E;
    });
}

const Mat& BernsteinTables::derivative(int nvars, int degree, int z) {
    return cached({4, nvars, degree, z}, [&] {
        const auto& high = multi_indices(nvars, degree);
        const Index rows = degree == 0 ? 1 : multi_indices(nvars, degree - 1).size();
        Mat D(rows, high.size());
        for (Index j = 0; j < high.size(); ++j) {
            bb::VecX<double> e = bb::VecX<double>::Zero(high.size());
            e(j) = 1.0;
            D.col(j) = bb::differentiate<double>(e, nvars, degree, z);
        }
        return D;
    });
}

const Mat& BernsteinTables::product_mean(int nvars, int pa, int pb) {
    return cached({5, nvars, pa, pb}, [&] {
        const auto& sa = multi_indices(nvars, pa);
        const auto& sb = multi_indices(nvars, pb);
        Mat M(sa.size(), sb.size());
        MultiIndex g(static_cast<std::size_t>(nvars));
        for (Index i = 0; i < sa.size(); ++i)
            for (Index j = 0; j < sb.size(); ++j) {
                for (int z = 0; z < nvars; ++z)
                    g[static_cast<std::size_t>(z)] = sa[i][static_cast<std::size_t>(z)] + sb[j][static_cast<std::size_t>(z)];
                M(i, j) = bb::multinomial(pa, sa[i]) * bb::multinomial(pb, sb[j]) *
                          barycentric_monomial_integral(nvars - 1, g);
            }
        return M;
    });
}

double triple_product_mean(int nvars, const MultiIndex& a, int pa, const MultiIndex& b, int pb, const MultiIndex& c,
                           int pc) {
    MultiIndex g(static_cast<std::size_t>(nvars));
    for (std::size_t z = 0; z < g.size(); ++z) g[z] = a[z] + b[z] + c[z];
    return bb::multinomial(pa, a) * bb::multinomial(pb, b) * bb::multinomial(pc, c) *
           barycentric_monomial_integral(nvars - 1, g);
}

}  // namespace ncfem
