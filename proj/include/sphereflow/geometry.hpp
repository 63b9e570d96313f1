#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sphereflow {

using Vec3 = Eigen::Vector3d;

// A point on the unit sphere S^2. Construction normalizes its argument, so
// the stored coordinates always have unit norm to rounding.
class UnitVector {
 public:
  UnitVector() : coords_(0.0, 0.0, 1.0) {}
  explicit UnitVector(const Vec3& v);
  UnitVector(double x, double y, double z) : UnitVector(Vec3(x, y, z)) {}

  // Wraps an already-normalized vector without renormalizing. Used where
  // bit-exact reproduction of stored coordinates matters (model files).
  static UnitVector from_normalized(const Vec3& v);

  const Vec3& vec() const { return coords_; }
  double operator[](int i) const { return coords_[i]; }
  UnitVector operator-() const { return from_normalized(-coords_); }

 private:
  Vec3 coords_;
};

inline double dot(const UnitVector& a, const UnitVector& b) { return a.vec().dot(b.vec()); }

// A vector in the tangent plane at `base`; its norm is an arc length in radians.
struct TangentVector {
  UnitVector base;
  Vec3 vec = Vec3::Zero();

  double norm() const { return vec.norm(); }
};

// Right-handed orthonormal frame {e1, e2, base}.
struct TangentBasis {
  UnitVector base;
  Vec3 e1;
  Vec3 e2;
};

// Great-circle distance in [0, pi]; the inner product is clamped before acos.
double geodesic_distance(const UnitVector& a, const UnitVector& b);

// exp_base(v) = cos|v| base + sin|v| v/|v|. Returns `base` unchanged when
// |v| < 1e-12.
UnitVector exp_map(const UnitVector& base, const TangentVector& v);

// Deterministic frame: the canonical axis least aligned with `base` (lowest
// index on ties) is Gram-Schmidt'ed against it and completed by e2 = base x e1.
TangentBasis tangent_basis(const UnitVector& base);

// (I - base base^T) w.
TangentVector project_to_tangent(const UnitVector& base, const Vec3& w);

}  // namespace sphereflow
