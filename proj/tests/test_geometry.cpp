#include "doctest.h"

#include "kinlab/cycles.hpp"
#include "kinlab/errors.hpp"
#include "kinlab/geometry.hpp"
#include "kinlab/rng.hpp"

#include <cmath>

using namespace kinlab;

namespace {

Vec3 random_unit(CounterRng& rng)
{
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    return v / v.norm();
}

// Independent exit-time oracle: bisection on the sign change of the level set.
double bisect_exit(const Domain& d, const Vec3& x, const Vec3& v, double t_hi)
{
    double lo = 0.0, hi = t_hi;
    for (int i = 0; i < 200; ++i)
    {
        double mid = 0.5 * (lo + hi);
        (d.level(x - mid * v) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("outward normals")
{
    const Domain ball = Domain::ball(1.0);
    CHECK((outward_normal(ball, Vec3(1, 0, 0)) - Vec3(1, 0, 0)).norm() < 1e-14);
    CHECK((outward_normal(ball, Vec3(0, 0, -1)) - Vec3(0, 0, -1)).norm() < 1e-14);
    const Domain slab = Domain::slab(0.5);
    CHECK(outward_normal(slab, Vec3(0.5, 0, 0))[0] == doctest::Approx(1.0));
    CHECK(outward_normal(slab, Vec3(-0.5, 0, 0))[0] == doctest::Approx(-1.0));
    CHECK_THROWS_AS(outward_normal(ball, Vec3(0.5, 0, 0)), NotOnBoundary);
}

TEST_CASE("normals have unit length on random boundary points")
{
    const Domain e = Domain::ellipsoid(Vec3(1.0, 0.7, 0.4));
    CounterRng rng(11, 0);
    for (int i = 0; i < 1000; ++i)
    {
        Vec3 u = random_unit(rng);
        Vec3 x = u.cwiseProduct(e.semi_axes());
        CHECK(std::abs(outward_normal(e, x).norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("specular reflection examples")
{
    const Domain ball = Domain::ball(1.0);
    const Vec3 x(1, 0, 0);
    CHECK((specular_reflect(ball, x, Vec3(1, 2, 3)) - Vec3(-1, 2, 3)).norm() < 1e-14);
    CHECK((specular_reflect(ball, x, Vec3(0, 5, -2)) - Vec3(0, 5, -2)).norm() < 1e-14);
    CHECK((specular_reflect(ball, Vec3(0, 1, 0), Vec3(0, -4, 0)) - Vec3(0, 4, 0)).norm() < 1e-14);
}

TEST_CASE("reflection is an involution and an isometry")
{
    const Domain e = Domain::ellipsoid(Vec3(1.0, 0.6, 0.8));
    CounterRng rng(5, 1);
    double worst_inv = 0.0, worst_speed = 0.0;
    for (int i = 0; i < 10000; ++i)
    {
        Vec3 x = random_unit(rng).cwiseProduct(e.semi_axes());
        Vec3 v(3 * rng.normal(), 3 * rng.normal(), 3 * rng.normal());
        Vec3 r = specular_reflect(e, x, v);
        worst_inv = std::max(worst_inv, (specular_reflect(e, x, r) - v).norm());
        worst_speed = std::max(worst_speed, std::abs(r.norm() - v.norm()));
    }
    CHECK(worst_inv <= 1e-12 * 10);
    CHECK(worst_speed <= 1e-12 * 10);
}

TEST_CASE("backward exit time examples")
{
    const Domain ball = Domain::ball(1.0);
    ExitPoint e = backward_exit_time(ball, Vec3(0, 0, 0), Vec3(1, 0, 0));
    CHECK(e.finite);
    CHECK(e.t_b == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((e.x_b - Vec3(-1, 0, 0)).norm() < 1e-12);
    e = backward_exit_time(ball, Vec3(0.5, 0, 0), Vec3(1, 0, 0));
    CHECK(e.t_b == doctest::Approx(1.5).epsilon(1e-14));
    CHECK((e.x_b - Vec3(-1, 0, 0)).norm() < 1e-12);

    // x - t v = 0.25 + 2 t reaches the wall x = +0.5 at t = 1/8.
    const Domain slab = Domain::slab(0.5);
    e = backward_exit_time(slab, Vec3(0.25, 0, 0), Vec3(-2, 0, 0));
    CHECK(e.t_b == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(e.x_b[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(e.t_b == doctest::Approx(bisect_exit(slab, Vec3(0.25, 0, 0), Vec3(-2, 0, 0), 1.0)).epsilon(1e-12));

    e = backward_exit_time(slab, Vec3(0.1, 0, 0), Vec3(0, 3, 1));
    CHECK_FALSE(e.finite);
    CHECK(std::isinf(e.t_b));
}

TEST_CASE("exit points lie on the boundary and the segment stays inside")
{
    const Domain e = Domain::ellipsoid(Vec3(1.0, 0.5, 0.75));
    CounterRng rng(3, 2);
    for (int i = 0; i < 2000; ++i)
    {
        Vec3 x = 0.9 * rng.uniform() * random_unit(rng).cwiseProduct(e.semi_axes());
        Vec3 v = (0.1 + 3 * rng.uniform()) * random_unit(rng);
        ExitPoint ex = backward_exit_time(e, x, v);
        REQUIRE(ex.finite);
        CHECK(std::abs(e.level(ex.x_b)) <= kTolBoundary);
        for (int k = 0; k <= 10; ++k)
            CHECK(e.level(x - (ex.t_b * k / 10.0) * v) <= kTolBoundary);
        CHECK(ex.t_b == doctest::Approx(bisect_exit(e, x, v, 10.0)).epsilon(1e-9));
    }
}

TEST_CASE("general level set matches the closed form")
{
    const Domain ball = Domain::ball(1.0);
    const Domain ls = Domain::level_set(
        3, [](const Vec3& x) { return x.squaredNorm() - 1.0; }, [](const Vec3& x) { return Vec3(2.0 * x); },
        [](const Vec3&) { return Mat3(2.0 * Mat3::Identity()); }, 2.0, 2.0);
    CounterRng rng(8, 0);
    for (int i = 0; i < 200; ++i)
    {
        Vec3 x = 0.8 * rng.uniform() * random_unit(rng);
        Vec3 v = random_unit(rng);
        CHECK(backward_exit_time(ls, x, v).t_b == doctest::Approx(backward_exit_time(ball, x, v).t_b).epsilon(1e-9));
    }
}

TEST_CASE("kinetic distance examples")
{
    const Domain ball = Domain::ball(1.0);
    CHECK(kinetic_distance(ball, Vec3(0, 0, 0), Vec3(1, 0, 0)) == doctest::Approx(5.0));
    CHECK(kinetic_distance(ball, Vec3(0.5, 0, 0), Vec3(0, 1, 0)) == doctest::Approx(3.5625));
    CHECK(kinetic_distance(ball, Vec3(1, 0, 0), Vec3(0, 2, 1)) == doctest::Approx(0.0));
}

TEST_CASE("kinetic distance vanishes on grazing samples and is positive inside")
{
    const Domain e = Domain::ellipsoid(Vec3(1.0, 0.6, 0.8));
    CounterRng rng(4, 4);
    for (int i = 0; i < 1000; ++i)
    {
        Vec3 x = random_unit(rng).cwiseProduct(e.semi_axes());
        x = e.project_to_boundary(x);
        Vec3 n = outward_normal(e, x);
        Vec3 v = random_unit(rng);
        v -= v.dot(n) * n;
        CHECK(kinetic_distance(e, x, v) <= 1e-9);
        Vec3 inner = 0.5 * x;
        CHECK(kinetic_distance(e, inner, v) > 0.0);
    }
}

TEST_CASE("near-grazing indicator")
{
    const Domain ball = Domain::ball(1.0);
    const Vec3 x(1, 0, 0);
    CHECK(near_grazing(ball, x, Vec3(0, 3, 0), 0.1));
    CHECK_FALSE(near_grazing(ball, x, Vec3(1, 0, 0), 0.1));
    CHECK(near_grazing(ball, x, Vec3(11, 0, 0), 0.1));
    CHECK(near_grazing(ball, x, Vec3(0.05, 0, 0), 0.1));
}

TEST_CASE("log alpha has a finite lower slope along segments")
{
    // Growth bound: d/ds log alpha >= -C (|v| + 1) along free flight.
    const Domain ball = Domain::ball(1.0);
    CounterRng rng(21, 0);
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i)
    {
        Vec3 x = 0.9 * rng.uniform() * random_unit(rng);
        Vec3 v = (0.2 + 2 * rng.uniform()) * random_unit(rng);
        ExitPoint ex = backward_exit_time(ball, x, v);
        const int m = 50;
        for (int k = 0; k + 1 < m; ++k)
        {
            double s0 = ex.t_b * k / m, s1 = ex.t_b * (k + 1) / m;
            double a0 = kinetic_distance(ball, x - s0 * v, v), a1 = kinetic_distance(ball, x - s1 * v, v);
            // Forward time runs opposite to s.
            double slope = (std::log(a0) - std::log(a1)) / (s1 - s0);
            worst = std::min(worst, slope / (v.norm() + 1.0));
        }
    }
    CHECK(std::isfinite(worst));
    CHECK(worst > -50.0);
    MESSAGE("measured alpha growth constant C = " << -worst);
}

TEST_CASE("consecutive specular bounces in the ball have a positive time lower bound")
{
    const Domain ball = Domain::ball(1.0);
    CounterRng rng(9, 9);
    double lower = std::numeric_limits<double>::infinity();
    int traced = 0;
    for (int i = 0; i < 10000; ++i)
    {
        Vec3 x = 0.95 * rng.uniform() * random_unit(rng);
        Vec3 v = (0.5 + 2 * rng.uniform()) * random_unit(rng);
        if (kinetic_distance(ball, x, v) < 1e-6)
            continue;
        CycleTrace tr = trace_specular_cycle(ball, 5.0, x, v, 20, false);
        ++traced;
        for (std::size_t k = 1; k + 1 < tr.entries.size(); ++k)
        {
            const auto& a = tr.entries[k];
            const auto& b = tr.entries[k + 1];
            double nv = std::abs(outward_normal(ball, b.x).dot(b.v));
            if (nv > 0.0)
                lower = std::min(lower, (a.t - b.t) * a.v.squaredNorm() / nv);
        }
    }
    CHECK(traced > 9000);
    // In a ball of radius R the chord law makes the quantity exactly 2R.
    CHECK(lower == doctest::Approx(2.0).epsilon(1e-8));
}
