#include "ncfem/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace ncfem {

void gauss_jacobi(int m, int a, Vec& nodes, Vec& weights) {
    // Golub-Welsch on the Jacobi matrix for (1-x)^alpha (1+x)^beta, beta = 0,
    // then mapped from [-1, 1] to [0, 1].
    const double alpha = a, beta = 0.0;
    Mat J = Mat::Zero(m, m);
    for (int n = 0; n < m; ++n) {
        const double s = 2.0 * n + alpha + beta;
        J(n, n) = (n == 0) ? (beta - alpha) / (alpha + beta + 2.0) : (beta * beta - alpha * alpha) / (s * (s + 2.0));
        if (n + 1 < m) {
            const double k = n + 1;
            const double t = 2.0 * k + alpha + beta;
            const double b = std::sqrt(4.0 * k * (k + alpha) * (k + beta) * (k + alpha + beta) /
                                       (t * t * (t + 1.0) * (t - 1.0)));
            J(n, n + 1) = J(n + 1, n) = b;
        }
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(J);
    const double mu0 = std::pow(2.0, alpha + beta + 1.0) * std::tgamma(alpha + 1.0) * std::tgamma(beta + 1.0) /
                       std::tgamma(alpha + beta + 2.0);
    nodes.resize(m);
    weights.resize(m);
    for (int i = 0; i < m; ++i) {
        const double x = eig.eigenvalues()(i);
        const double v = eig.eigenvectors()(0, i);
        nodes(i) = 0.5 * (1.0 + x);
        weights(i) = mu0 * v * v * std::pow(2.0, -alpha - 1.0);
    }
}

namespace {

// Cartesian points of the reference simplex {x >= 0, sum x <= 1}.
void collapsed(int dim, int m, Mat& pts, Vec& w) {
    if (dim == 0) {
        pts = Mat::Zero(0, 1);
        w = Vec::Ones(1);
        return;
    }
    Mat sub;
    Vec subw;
    collapsed(dim - 1, m, sub, subw);
    Vec t, tw;
    gauss_jacobi(m, dim - 1, t, tw);
    pts.resize(dim, m * sub.cols());
    w.resize(m * sub.cols());
    Index k = 0;
    for (int i = 0; i < m; ++i)
        for (Index j = 0; j < sub.cols(); ++j, ++k) {
            pts(0, k) = t(i);
            if (dim > 1) pts.col(k).tail(dim - 1) = (1.0 - t(i)) * sub.col(j);
            w(k) = tw(i) * subw(j);
        }
}

}  // namespace

const QuadratureRule<double>& simplex_rule(int dim, int degree) {
    if (degree > kMaxQuadratureDegree)
        throw QuadratureError("simplex_rule: degree " + std::to_string(degree) + " exceeds the supported maximum");
    if (degree < 0) degree = 0;
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::unique_ptr<QuadratureRule<double>>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{dim, degree}];
    if (!slot) {
        const int m = std::max(1, (degree + 2) / 2);
        Mat x;
        Vec w;
        collapsed(dim, m, x, w);
        auto rule = std::make_unique<QuadratureRule<double>>();
        rule->dim = dim;
        rule->degree = degree;
        rule->points.resize(dim + 1, x.cols());
        for (Index k = 0; k < x.cols(); ++k) {
            rule->points(0, k) = 1.0 - x.col(k).sum();
            rule->points.col(k).tail(dim) = x.col(k);
        }
        rule->weights = w / w.sum();
        slot = std::move(rule);
    }
    return *slot;
}

void require_exactness(const QuadratureRule<double>& rule, int needed, const char* what) {
    if (rule.degree < needed)
        throw QuadratureError(std::string(what) + ": quadrature of degree " + std::to_string(rule.degree) +
                              " cannot integrate degree " + std::to_string(needed) + " exactly");
}

}  // namespace ncfem
