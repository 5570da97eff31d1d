#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace pite {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using VectorXi = Vector<int>;

}  // namespace pite
