#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"

using namespace sphereflow;
using doctest::Approx;

TEST_CASE("unit vectors are normalized on construction") {
  const UnitVector u(3.0, 4.0, 0.0);
  CHECK(u.vec().norm() == Approx(1.0).epsilon(1e-15));
  CHECK(u[0] == Approx(0.6));
  CHECK_THROWS_AS(UnitVector(0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("geodesic distance special cases") {
  const UnitVector a(1, 0, 0), b(0, 1, 0);
  CHECK(geodesic_distance(a, a) == 0.0);
  CHECK(geodesic_distance(a, -a) == Approx(std::numbers::pi).epsilon(1e-15));
  CHECK(geodesic_distance(a, b) == Approx(std::numbers::pi / 2).epsilon(1e-15));
}

TEST_CASE("geodesic distance is symmetric and consistent with the inner product") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto a = testing::random_unit(rng), b = testing::random_unit(rng);
    CHECK(geodesic_distance(a, b) == geodesic_distance(b, a));
    CHECK(std::abs(std::cos(geodesic_distance(a, b)) - dot(a, b)) < 1e-12);
  }
}

TEST_CASE("exp map examples") {
  const UnitVector n(0, 0, 1);
  const double pi = std::numbers::pi;
  CHECK(exp_map(n, {n, Vec3::Zero()}).vec() == n.vec());
  CHECK((exp_map(n, {n, Vec3(pi / 2, 0, 0)}).vec() - Vec3(1, 0, 0)).norm() < 1e-15);
  CHECK((exp_map(n, {n, Vec3(pi, 0, 0)}).vec() - Vec3(0, 0, -1)).norm() < 1e-15);
  CHECK(exp_map(n, {n, Vec3(1e-13, 0, 0)}).vec() == n.vec());
}

TEST_CASE("exp map stays on the sphere and travels the right distance") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> len(0.0, 3.0 * std::numbers::pi);
  for (int i = 0; i < 1000; ++i) {
    const auto base = testing::random_unit(rng);
    auto v = testing::random_tangent(rng, base, 1.0);
    v.vec *= len(rng) / v.norm();
    const auto y = exp_map(base, v);
    CHECK(std::abs(y.vec().squaredNorm() - 1.0) < 1e-10);
    const double r = std::fmod(v.norm(), 2 * std::numbers::pi);
    CHECK(geodesic_distance(base, y) == Approx(std::min(r, 2 * std::numbers::pi - r)).epsilon(1e-7));
  }
}

TEST_CASE("exp map is injective inside the injectivity radius") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> len(0.0, 0.999 * std::numbers::pi);
  for (int i = 0; i < 1000; ++i) {
    const auto base = testing::random_unit(rng);
    auto v1 = testing::random_tangent(rng, base, 1.0), v2 = testing::random_tangent(rng, base, 1.0);
    v1.vec *= len(rng) / v1.norm();
    v2.vec *= len(rng) / v2.norm();
    if ((v1.vec - v2.vec).norm() < 1e-6) continue;
    CHECK((exp_map(base, v1).vec() - exp_map(base, v2).vec()).norm() > 1e-12);
  }
}

TEST_CASE("tangent basis is a right-handed orthonormal frame") {
  std::mt19937_64 rng(14);
  std::vector<UnitVector> bases = testing::random_points(rng, 1000);
  bases.push_back(UnitVector(0, 0, 1));
  bases.push_back(UnitVector(1, 1, 1));
  bases.push_back(UnitVector(-1, 0, 0));
  for (const auto& b : bases) {
    const auto f = tangent_basis(b);
    CHECK(std::abs(f.e1.dot(f.e2)) < 1e-10);
    CHECK(std::abs(f.e1.dot(b.vec())) < 1e-10);
    CHECK(std::abs(f.e2.dot(b.vec())) < 1e-10);
    CHECK(std::abs(f.e1.norm() - 1.0) < 1e-10);
    CHECK(std::abs(f.e2.norm() - 1.0) < 1e-10);
    Eigen::Matrix3d m;
    m << f.e1, f.e2, b.vec();
    CHECK(std::abs(m.determinant() - 1.0) < 1e-10);
  }
}

TEST_CASE("tangent basis is deterministic") {
  const UnitVector b(0.3, -0.2, 0.9);
  const auto f1 = tangent_basis(b), f2 = tangent_basis(b);
  CHECK(f1.e1 == f2.e1);
  CHECK(f1.e2 == f2.e2);
}

TEST_CASE("projection onto the tangent plane") {
  const UnitVector n(0, 0, 1);
  CHECK(project_to_tangent(n, n.vec()).norm() == 0.0);
  CHECK(project_to_tangent(n, Vec3(1, 1, 1)).vec == Vec3(1, 1, 0));
  CHECK(project_to_tangent(n, Vec3(1, 2, 0)).vec == Vec3(1, 2, 0));

  std::mt19937_64 rng(15);
  std::normal_distribution<double> g;
  for (int i = 0; i < 1000; ++i) {
    const auto b = testing::random_unit(rng);
    const Vec3 w(g(rng), g(rng), g(rng));
    const auto once = project_to_tangent(b, w);
    const auto twice = project_to_tangent(b, once.vec);
    CHECK(std::abs(once.vec.dot(b.vec())) < 1e-10);
    CHECK((once.vec - twice.vec).norm() < 1e-12);
  }
}
