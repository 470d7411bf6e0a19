#pragma once

#include "zippy/types.hpp"

namespace zippy {

/// Support point of the ellipsoid {x : x'Ax = 1}, A = diag(1/a^2, 1/b^2, 1/c^2),
/// in direction d (both in the ellipsoid frame): the unique surface point
/// maximizing d.x, namely  A^{-1} d / sqrt(d' A^{-1} d).
/// d need not be normalized; it must be nonzero.
Vec3 ellipsoid_support(const Vec3& semi_axes, const Vec3& d);

/// Outward unit normal of the ellipsoid at a surface point, proportional to A x.
Vec3 ellipsoid_normal(const Vec3& semi_axes, const Vec3& point);

/// Derivative of the support map with respect to the direction vector,
/// d(support)/d(d). Used for the contact-point migration velocity of a
/// rolling foot.
Mat3 ellipsoid_support_jacobian(const Vec3& semi_axes, const Vec3& d);

}  // namespace zippy
