#include "ncfem/multi_index.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <utility>

namespace ncfem {

int order(std::span<const int> alpha) { return std::accumulate(alpha.begin(), alpha.end(), 0); }

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

double multi_factorial(std::span<const int> alpha) {
    double r = 1.0;
    for (int a : alpha) r *= factorial(a);
    return r;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double barycentric_monomial_integral(int n, std::span<const int> alpha) {
    // n! alpha! / (n+|alpha|)! evaluated as a running product to stay exact
    // for the degrees used here.
    const int total = order(alpha);
    long double r = 1.0L;
    for (int a : alpha)
        for (int i = 2; i <= a; ++i) r *= i;
    for (int i = n + 1; i <= n + total; ++i) r /= i;
    return static_cast<double>(r);
}

namespace {

void enumerate(int nvars, int remaining, MultiIndex& current, int pos, std::vector<MultiIndex>& out) {
    if (pos == nvars - 1) {
        current[static_cast<std::size_t>(pos)] = remaining;
        out.push_back(current);
        return;
    }
    for (int a = remaining; a >= 0; --a) {
        current[static_cast<std::size_t>(pos)] = a;
        enumerate(nvars, remaining - a, current, pos + 1, out);
    }
}

}  // namespace

MultiIndexSet::MultiIndexSet(int nvars, int degree) : nvars_(nvars), degree_(degree) {
    if (nvars < 1 || degree < 0) throw Error("MultiIndexSet: invalid nvars/degree");
    MultiIndex current(static_cast<std::size_t>(nvars), 0);
    enumerate(nvars, degree, current, 0, indices_);
    Index table = 1;
    for (int i = 0; i < nvars; ++i) table *= (degree + 1);
    lookup_.assign(static_cast<std::size_t>(table), -1);
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        Index key = 0;
        for (int j = nvars - 1; j >= 0; --j) key = key * (degree + 1) + indices_[i][static_cast<std::size_t>(j)];
        lookup_[static_cast<std::size_t>(key)] = static_cast<Index>(i);
    }
}

Index MultiIndexSet::find(std::span<const int> alpha) const {
    if (static_cast<int>(alpha.size()) != nvars_) return -1;
    Index key = 0;
    int total = 0;
    for (int j = nvars_ - 1; j >= 0; --j) {
        const int a = alpha[static_cast<std::size_t>(j)];
        if (a < 0 || a > degree_) return -1;
        total += a;
        key = key * (degree_ + 1) + a;
    }
    if (total != degree_) return -1;
    return lookup_[static_cast<std::size_t>(key)];
}

const MultiIndexSet& multi_indices(int nvars, int degree) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::unique_ptr<MultiIndexSet>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{nvars, degree}];
    if (!slot) slot = std::make_unique<MultiIndexSet>(nvars, degree);
    return *slot;
}

}  // namespace ncfem
