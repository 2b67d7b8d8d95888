#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dobo/errors.hpp"
#include "dobo/geometry.hpp"
#include "dobo/rng.hpp"

using dobo::ConstraintSet;

namespace {

Eigen::Vector2d v2(double a, double b) { return Eigen::Vector2d(a, b); }

Eigen::VectorXd v1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

// Independent oracle: scan a dense feasible grid for the closest point.
// The true projection can beat the best grid point by at most the grid
// diagonal, which bounds how far the library's answer may sit from optimal.
double brute_force_min_distance(const ConstraintSet& set, const Eigen::VectorXd& v,
                                int cells, double extent) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= cells; ++i) {
    for (int j = 0; j <= cells; ++j) {
      Eigen::Vector2d p(-extent + 2.0 * extent * i / cells, -extent + 2.0 * extent * j / cells);
      if (!set.contains(p, 1e-12)) continue;
      best = std::min(best, (p - v).norm());
    }
  }
  return best;
}

}  // namespace

TEST_CASE("box projection clamps per coordinate") {
  const auto box = ConstraintSet::box(v2(-3.0, -3.0), v2(3.0, 3.0));
  CHECK((box.project(v2(5.0, -7.0)) - v2(3.0, -3.0)).norm() == 0.0);
  CHECK((box.project(v2(0.5, 2.0)) - v2(0.5, 2.0)).norm() == 0.0);
  CHECK((box.project(v2(-3.0, 3.0)) - v2(-3.0, 3.0)).norm() == 0.0);
}

TEST_CASE("l1 projection matches hand cases") {
  const auto ball = ConstraintSet::l1_ball(2, 1.0);
  CHECK((ball.project(v2(2.0, 0.0)) - v2(1.0, 0.0)).norm() < 1e-12);
  CHECK((ball.project(v2(2.0, 1.0)) - v2(1.0, 0.0)).norm() < 1e-12);
  CHECK((ball.project(v2(1.0, 1.0)) - v2(0.5, 0.5)).norm() < 1e-12);
  CHECK((ball.project(v2(-1.0, 1.0)) - v2(-0.5, 0.5)).norm() < 1e-12);
  // interior points are untouched
  CHECK((ball.project(v2(0.2, -0.3)) - v2(0.2, -0.3)).norm() == 0.0);
}

TEST_CASE("l1 projection agrees with a dense grid search") {
  const double radius = 1.5;
  const auto ball = ConstraintSet::l1_ball(2, radius);
  auto stream = dobo::rng::stream(11, 0, 1, 1, dobo::rng::Purpose::kProbe);
  const int cells = 600;
  const double spacing = 2.0 * radius / cells * std::sqrt(2.0);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Vector2d v(stream.next_uniform(-4.0, 4.0), stream.next_uniform(-4.0, 4.0));
    const Eigen::VectorXd p = ball.project(v);
    REQUIRE(ball.contains(p, 1e-9));
    const double grid_best = brute_force_min_distance(ball, v, cells, radius);
    CHECK((p - v).norm() <= grid_best + 1e-12);
    CHECK(grid_best <= (p - v).norm() + spacing);
  }
}

TEST_CASE("l2 projection rescales") {
  const auto ball = ConstraintSet::l2_ball(2, 2.5);
  CHECK((ball.project(v2(3.0, 4.0)) - v2(1.5, 2.0)).norm() < 1e-12);
  CHECK((ball.project(v2(1.0, -1.0)) - v2(1.0, -1.0)).norm() == 0.0);
}

TEST_CASE("projection is idempotent and non-expansive") {
  const std::vector<ConstraintSet> sets = {
      ConstraintSet::box(v2(-1.0, -2.0), v2(2.0, 1.0)),
      ConstraintSet::l1_ball(2, 3.0),
      ConstraintSet::l2_ball(2, 1.2),
  };
  auto stream = dobo::rng::stream(12, 0, 1, 1, dobo::rng::Purpose::kProbe);
  for (const auto& set : sets) {
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Vector2d a(stream.next_uniform(-5.0, 5.0), stream.next_uniform(-5.0, 5.0));
      const Eigen::Vector2d b(stream.next_uniform(-5.0, 5.0), stream.next_uniform(-5.0, 5.0));
      const Eigen::VectorXd pa = set.project(a);
      const Eigen::VectorXd pb = set.project(b);
      CHECK((set.project(pa) - pa).norm() <= 1e-12);
      CHECK((pa - pb).norm() <= (a - b).norm() + 1e-12);
      // optimality certificate: the residual points away from the set
      CHECK((a - pa).dot(pb - pa) <= 1e-9);
    }
  }
}

TEST_CASE("linear minimization picks extreme points") {
  const auto box = ConstraintSet::box(v2(-3.0, -3.0), v2(3.0, 3.0));
  const auto l1 = ConstraintSet::l1_ball(2, 3.0);
  const auto l2 = ConstraintSet::l2_ball(2, 3.0);

  CHECK((box.linear_minimize(v2(1.0, -2.0)) - v2(-3.0, 3.0)).norm() == 0.0);
  CHECK((l1.linear_minimize(v2(1.0, -2.0)) - v2(0.0, 3.0)).norm() < 1e-12);
  const Eigen::Vector2d g(3.0, 4.0);
  CHECK((l2.linear_minimize(g) - v2(-1.8, -2.4)).norm() < 1e-12);

  // ties break toward the lowest coordinate index
  CHECK((l1.linear_minimize(v2(1.0, 1.0)) - v2(-3.0, 0.0)).norm() < 1e-12);

  // zero direction falls back to the canonical center
  CHECK((box.linear_minimize(v2(0.0, 0.0)) - box.center()).norm() == 0.0);

  auto stream = dobo::rng::stream(13, 0, 1, 1, dobo::rng::Purpose::kProbe);
  for (const auto& set : {box, l1, l2}) {
    const Eigen::Vector2d direction(stream.next_gaussian(), stream.next_gaussian());
    const Eigen::VectorXd minimizer = set.linear_minimize(direction);
    REQUIRE(set.contains(minimizer, 1e-9));
    for (int trial = 0; trial < 1000; ++trial) {
      const Eigen::VectorXd z = dobo::uniform_point(set, stream);
      CHECK(direction.dot(minimizer) <= direction.dot(z) + 1e-9);
    }
  }
}

TEST_CASE("diameters and centers") {
  CHECK(ConstraintSet::box(v2(-3.0, -3.0), v2(3.0, 3.0)).diameter() == Catch::Approx(6.0 * std::sqrt(2.0)));
  CHECK(ConstraintSet::l2_ball(2, 3.0).diameter() == 6.0);
  CHECK(ConstraintSet::l1_ball(2, 3.0).diameter() == 6.0);
  CHECK((ConstraintSet::box(v2(-1.0, 0.0), v2(3.0, 4.0)).center() - v2(1.0, 2.0)).norm() == 0.0);
  CHECK((ConstraintSet::l1_ball(2, 3.0).center() - v2(0.0, 0.0)).norm() == 0.0);
}

TEST_CASE("feasible grid and uniform sampling stay inside") {
  const auto l1 = ConstraintSet::l1_ball(2, 3.0);
  const auto grid = dobo::feasible_grid(l1, 64);
  REQUIRE(grid.size() == 64);
  for (const auto& point : grid) CHECK(l1.contains(point, 1e-9));

  auto stream = dobo::rng::stream(14, 0, 1, 1, dobo::rng::Purpose::kProbe);
  for (int trial = 0; trial < 100; ++trial)
    CHECK(l1.contains(dobo::uniform_point(l1, stream), 1e-9));

  // identical stream state reproduces the draw
  auto s1 = dobo::rng::stream(15, 0, 2, 7, dobo::rng::Purpose::kInit);
  auto s2 = dobo::rng::stream(15, 0, 2, 7, dobo::rng::Purpose::kInit);
  CHECK((dobo::uniform_point(l1, s1) - dobo::uniform_point(l1, s2)).norm() == 0.0);
}

TEST_CASE("geometry input validation") {
  CHECK_THROWS_AS(ConstraintSet::l1_ball(2, 0.0), dobo::UsageError);
  CHECK_THROWS_AS(ConstraintSet::l1_ball(0, 1.0), dobo::UsageError);
  CHECK_THROWS_AS(ConstraintSet::l2_ball(2, std::nan("")), dobo::InputError);
  CHECK_THROWS_AS(ConstraintSet::box(v1(0.0), v2(1.0, 2.0)), dobo::UsageError);
  CHECK_THROWS_AS(ConstraintSet::box(v1(2.0), v1(1.0)), dobo::UsageError);

  const auto box = ConstraintSet::box(v2(-1.0, -1.0), v2(1.0, 1.0));
  Eigen::VectorXd wrong(3);
  wrong << 1, 2, 3;
  CHECK_THROWS_AS(box.project(wrong), dobo::UsageError);
  CHECK_THROWS_AS(box.project(v2(std::nan(""), 0.0)), dobo::InputError);
  CHECK_THROWS_AS(box.linear_minimize(v2(1.0, std::numeric_limits<double>::infinity())),
                  dobo::InputError);
}
