#include "doctest.h"
#include "oracles.hpp"
#include "uavisac/array.hpp"

using namespace uavisac;

namespace {

double deg(double d) { return d * kPi / 180.0; }

Mat3 elementary_product(const Attitude& a) {
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, std::cos(a.roll), -std::sin(a.roll), 0, std::sin(a.roll), std::cos(a.roll);
  ry << std::cos(a.pitch), 0, std::sin(a.pitch), 0, 1, 0, -std::sin(a.pitch), 0, std::cos(a.pitch);
  rz << std::cos(a.yaw), -std::sin(a.yaw), 0, std::sin(a.yaw), std::cos(a.yaw), 0, 0, 0, 1;
  return rz * ry * rx;
}

Attitude random_attitude(Rng& rng, double bound) {
  std::uniform_real_distribution<double> u(-bound, bound);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("rotation matrix") {
  CHECK(rotation_matrix({}).isApprox(Mat3::Identity(), 1e-15));
  const Vec3 x = rotation_matrix({0, 0, kPi / 2}) * Vec3::UnitX();
  CHECK((x - Vec3::UnitY()).norm() < 1e-15);

  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const Attitude a = random_attitude(rng, kPi);
    const Mat3 r = rotation_matrix(a);
    REQUIRE((r - elementary_product(a)).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("compensation inputs") {
  const auto id = compensation_inputs(Mat3::Identity(), 0.7);
  CHECK(id.p == 0.0);
  CHECK(id.q == 0.0);

  // Pure roll of 30 degrees with the array pointing along +y. R v = (0, cos30,
  // sin30) gives P = -0.5; R e_z = (0, -sin30, cos30) has a cross product with
  // R v along x only, so Q = 0.
  const auto roll = compensation_inputs(rotation_matrix({deg(30), 0, 0}), kPi / 2);
  CHECK(roll.p == doctest::Approx(-0.5));
  CHECK(std::abs(roll.q) < 1e-15);

  for (double yaw : {0.3, -2.0, 3.1}) {
    const auto y = compensation_inputs(rotation_matrix({0, 0, yaw}), 1.1);
    CHECK(std::abs(y.p) < 1e-15);
    CHECK(std::abs(y.q) < 1e-15);
  }
}

TEST_CASE("compensation angle piecewise form") {
  CHECK(compensation_angle(1, 0).mu == doctest::Approx(kPi / 2));
  CHECK(compensation_angle(-1, 0).mu == doctest::Approx(-kPi / 2));
  CHECK(compensation_angle(0, 2).mu == 0.0);
  CHECK(compensation_angle(1, -1).mu == doctest::Approx(3 * kPi / 4));
  CHECK(compensation_angle(-1, -1).mu == doctest::Approx(-3 * kPi / 4));
  CHECK(compensation_angle(0, -1).mu == doctest::Approx(kPi));
  const auto degenerate = compensation_angle(0, 0);
  CHECK(degenerate.degenerate);
  CHECK(degenerate.mu == 0.0);
  Rng rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng), q = u(rng);
    REQUIRE(compensation_angle(p, q).mu == doctest::Approx(std::atan2(p, q)).epsilon(1e-12));
  }
}

TEST_CASE("compensated axis is horizontal") {
  const Vec3 level = compensated_axis(Mat3::Identity(), 0.4, 0.0);
  CHECK((level - Vec3(std::cos(0.4), std::sin(0.4), 0)).norm() < 1e-15);

  const Mat3 r = rotation_matrix({deg(30), 0, 0});
  const auto [p, q] = compensation_inputs(r, kPi / 2);
  const double mu = compensation_angle(p, q).mu;
  CHECK(std::abs(-p * std::cos(mu) + q * std::sin(mu)) < 1e-12);
  const Vec3 axis = compensated_axis(r, kPi / 2, mu);
  CHECK(std::abs(axis.z()) < 1e-9);
  CHECK(axis.norm() == doctest::Approx(1.0));

  Rng rng(3);
  std::uniform_real_distribution<double> heading(0.0, 2 * kPi);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 a = level_axis(random_attitude(rng, deg(45)), heading(rng));
    REQUIRE(std::abs(a.z()) < 1e-9);
    REQUIRE(a.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("steering angle") {
  const Vec3 uav(0, 0, 100);
  CHECK(steering_angle(uav, Vec3::UnitX(), Vec3(100, 0, 100)) == doctest::Approx(0.0));
  CHECK(steering_angle(uav, Vec3::UnitX(), Vec3(0, 0, 0)) == doctest::Approx(kPi / 2));
  CHECK(steering_angle(uav, Vec3::UnitX(), Vec3(100, 0, 0)) == doctest::Approx(kPi / 4));
  CHECK(steering_angle(uav, Vec3::UnitX(), Vec3(-100, 0, 100)) == doctest::Approx(kPi));
  CHECK_THROWS_AS(steering_angle(uav, Vec3::UnitX(), uav), Error);
}

TEST_CASE("steering vector") {
  const double lambda = 0.125;
  ArrayGeometry zero{{0.0}, 0.625, 0.0625};
  CHECK(steering_vector(zero, 0.3, lambda)[0] == Complex(1, 0));

  ArrayGeometry g{{-0.3, 0.0, 0.2, 0.5}, 0.625, 0.0625};
  const CVec broadside = steering_vector(g, kPi / 2, lambda);
  for (int m = 0; m < 4; ++m) CHECK(std::abs(broadside[m] - Complex(1, 0)) < 1e-12);

  ArrayGeometry half{{0.0, lambda / 2}, 0.625, 0.0625};
  const CVec a = steering_vector(half, 0.0, lambda);
  CHECK(std::abs(a[0] - Complex(1, 0)) < 1e-12);
  CHECK(std::abs(a[1] - Complex(-1, 0)) < 1e-12);

  ArrayGeometry bad{{0.0, 0.01}, 0.625, 0.0625};
  CHECK_THROWS_AS(steering_vector(bad, 0.0, lambda), Error);

  Rng rng(4);
  std::uniform_real_distribution<double> off(-0.625, 0.625), th(0.0, kPi);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> r{off(rng), off(rng), off(rng), off(rng)};
    std::vector<double> neg;
    for (double x : r) neg.push_back(-x);
    const double c = std::cos(th(rng));
    const CVec p = steering_vector_cos(r, c, lambda);
    const CVec q = steering_vector_cos(neg, c, lambda);
    for (int m = 0; m < 4; ++m) {
      REQUIRE(std::abs(std::abs(p[m]) - 1.0) < 1e-9);
      REQUIRE(std::abs(p[m] - std::conj(q[m])) < 1e-12);
    }
  }
}

TEST_CASE("project_geometry") {
  const double d_off = 0.625, d_min = 0.0625;
  const std::vector<double> feasible{-0.5, -0.1, 0.2, 0.6};
  CHECK(project_geometry(feasible, d_off, d_min).offsets == feasible);

  const auto packed = project_geometry(std::vector<double>(4, 0.0), d_off, d_min);
  CHECK(packed.feasible());
  for (int m = 1; m < 4; ++m) CHECK(packed.offsets[m] - packed.offsets[m - 1] >= d_min - 1e-12);

  CHECK_NOTHROW(project_geometry(std::vector<double>(21, 0.0), d_off, d_min));
  CHECK_THROWS_AS(project_geometry(std::vector<double>(22, 0.0), d_off, d_min), Error);

  Rng rng(5);
  std::uniform_real_distribution<double> raw(-2.0, 2.0);
  std::uniform_int_distribution<int> count(1, 21);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> r(static_cast<std::size_t>(count(rng)));
    for (auto& x : r) x = raw(rng);
    const auto g = project_geometry(r, d_off, d_min);
    REQUIRE(g.feasible());
    REQUIRE(project_geometry(g.offsets, d_off, d_min).offsets == g.offsets);
  }
}

TEST_CASE("uniform geometry spans the segment") {
  const auto g = uniform_geometry(4, 0.625, 0.0625);
  CHECK(g.offsets.front() == -0.625);
  CHECK(g.offsets.back() == doctest::Approx(0.625));
  CHECK(g.feasible());
  CHECK_THROWS_AS(uniform_geometry(22, 0.625, 0.0625), Error);
}
