#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace auxcell {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// 2x2 tensors are flattened column-major: [T11, T21, T12, T22].
// The same ordering is used for deformation gradients, stresses and the
// rows/columns of 4x4 tangent matrices throughout.
inline Vec4 vec4(const Mat2& t) {
  return Vec4(t(0, 0), t(1, 0), t(0, 1), t(1, 1));
}

inline Mat2 mat2(const Vec4& v) {
  Mat2 t;
  t(0, 0) = v[0];
  t(1, 0) = v[1];
  t(0, 1) = v[2];
  t(1, 1) = v[3];
  return t;
}

}  // namespace auxcell
