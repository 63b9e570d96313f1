#include "sphereflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sphereflow {

UnitVector::UnitVector(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("UnitVector: cannot normalize a zero or non-finite vector");
  }
  coords_ = v / n;
}

UnitVector UnitVector::from_normalized(const Vec3& v) {
  UnitVector u;
  u.coords_ = v;
  return u;
}

double geodesic_distance(const UnitVector& a, const UnitVector& b) {
  return std::acos(std::clamp(dot(a, b), -1.0, 1.0));
}

UnitVector exp_map(const UnitVector& base, const TangentVector& v) {
  const double n = v.vec.norm();
  if (n < 1e-12) return base;
  const Vec3 out = std::cos(n) * base.vec() + (std::sin(n) / n) * v.vec;
  return UnitVector(out);
}

TangentBasis tangent_basis(const UnitVector& base) {
  const Vec3& x = base.vec();
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(x[i]) < std::abs(x[axis])) axis = i;
  }
  Vec3 a = Vec3::Zero();
  a[axis] = 1.0;
  const Vec3 e1 = (a - a.dot(x) * x).normalized();
  const Vec3 e2 = x.cross(e1);
  return {base, e1, e2};
}

TangentVector project_to_tangent(const UnitVector& base, const Vec3& w) {
  const Vec3& x = base.vec();
  return {base, w - w.dot(x) * x};
}

}  // namespace sphereflow
