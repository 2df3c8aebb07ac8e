#pragma once

#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SparseCore>

namespace vfe
{
using Scalar = double;

using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Nodal horizontal displacements, one row per grid node.
using Displacements = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;
using SparseMatrix = Eigen::SparseMatrix<Scalar>;

inline constexpr Scalar pi = std::numbers::pi_v<Scalar>;

/// 2D cross product u_x v_y - u_y v_x.
inline Scalar cross2(const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); }

/// Rotation by +pi/2.
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

} // namespace vfe
