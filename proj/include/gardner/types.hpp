#pragma once
#include <Eigen/Core>

namespace gardner {

template <class Scalar, int Rows = Eigen::Dynamic, int Cols = Eigen::Dynamic>
using rowmat_type = Eigen::Matrix<Scalar, Rows, Cols, Eigen::RowMajor>;

template <class Scalar, int Rows = Eigen::Dynamic, int Cols = Eigen::Dynamic>
using colmat_type = Eigen::Matrix<Scalar, Rows, Cols, Eigen::ColMajor>;

template <class Scalar, int Rows = Eigen::Dynamic>
using vec_type = Eigen::Matrix<Scalar, Rows, 1>;

using rowmat_t = rowmat_type<double>;
using colmat_t = colmat_type<double>;
using vec_t = vec_type<double>;

} // namespace gardner
