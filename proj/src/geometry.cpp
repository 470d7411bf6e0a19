#include "zippy/geometry.hpp"

#include <cmath>

namespace zippy {

Vec3 ellipsoid_support(const Vec3& semi_axes, const Vec3& d) {
  const Vec3 ainv2 = semi_axes.array().square();  // A^{-1} diagonal
  const Vec3 aid = ainv2.cwiseProduct(d);
  const double sigma = std::sqrt(d.dot(aid));
  if (!(sigma > 0.0)) {
    throw NumericalError("ellipsoid_support: zero direction");
  }
  return aid / sigma;
}

Vec3 ellipsoid_normal(const Vec3& semi_axes, const Vec3& point) {
  const Vec3 n = point.array() / semi_axes.array().square();
  const double len = n.norm();
  if (!(len > 0.0)) {
    throw NumericalError("ellipsoid_normal: center is not a surface point");
  }
  return n / len;
}

Mat3 ellipsoid_support_jacobian(const Vec3& semi_axes, const Vec3& d) {
  const Vec3 ainv2 = semi_axes.array().square();
  const Vec3 aid = ainv2.cwiseProduct(d);
  const double sigma2 = d.dot(aid);
  const double sigma = std::sqrt(sigma2);
  // d(A^{-1}d / sigma) = A^{-1}/sigma - (A^{-1}d)(A^{-1}d)' / sigma^3
  return Mat3(ainv2.asDiagonal()) / sigma - aid * aid.transpose() / (sigma2 * sigma);
}

}  // namespace zippy
