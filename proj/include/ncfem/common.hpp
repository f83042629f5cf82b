#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ncfem {

using Index = Eigen::Index;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

// Points and small geometric matrices never exceed three rows, so they live on
// the stack even though the spatial dimension is a runtime quantity.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Bary = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using GradLambda = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 4>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid mesh input: degenerate simplex, hanging vertex, malformed file.
class MeshError : public Error {
public:
    using Error::Error;
};

/// A quadrature rule was asked to integrate beyond its exactness degree.
class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Singular or ill-conditioned local/global linear algebra.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Rejected combination of method, variant, load or mesh.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace ncfem
