#include "doctest.h"

#include "kinlab/analysis.hpp"
#include "kinlab/collision.hpp"
#include "kinlab/errors.hpp"
#include "kinlab/rng.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace kinlab;

namespace {

// N = 12 keeps assembly under a minute; the default N = 16 grid is covered by the acceptance suite.
const CollisionOperator& small_operator()
{
    static const CollisionOperator op = load_or_assemble(VelocityGrid(6.0, 12), CollisionParams{}, KINLAB_TEST_CACHE);
    return op;
}

GridVector random_vector(const VelocityGrid& g, std::uint64_t stream)
{
    CounterRng rng(2024, stream);
    GridVector f(g.size());
    for (std::size_t a = 0; a < g.size(); ++a)
        f[a] = rng.normal() * std::exp(-g.node(a).squaredNorm() / 8.0);
    return f;
}

} // namespace

TEST_CASE("velocity grid symmetry and weights")
{
    VelocityGrid g(6.0, 16);
    CHECK(g.size() == 4096);
    for (std::size_t a = 0; a < g.size(); ++a)
    {
        CHECK((g.node(g.mirror(a)) + g.node(a)).norm() < 1e-12);
        CHECK(g.weight(g.mirror(a)) == g.weight(a));
    }
    CHECK(g.weights().sum() == doctest::Approx(12.0 * 12.0 * 12.0));
}

TEST_CASE("grid quadrature of mu matches the truncated Gaussian integral")
{
    for (int n : {16, 24})
    {
        VelocityGrid g(6.0, n);
        const double one_axis = std::sqrt(2 * M_PI) * boost::math::erf(6.0 / std::sqrt(2.0));
        const double exact = std::pow(one_axis, 3) / (2 * M_PI);
        CHECK(g.integrate(g.sample([](const Vec3& v) { return maxwellian(v); })) == doctest::Approx(exact).epsilon(1e-4));
    }
}

TEST_CASE("quadratic stencil reproduces quadratics")
{
    VelocityGrid g(6.0, 12);
    auto q = [](const Vec3& v) { return 1.0 + 0.5 * v[0] - v[1] * v[2] + 0.25 * v.squaredNorm(); };
    const GridVector f = g.sample(q);
    CounterRng rng(1, 1);
    for (int i = 0; i < 200; ++i)
    {
        Vec3 v(5 * (2 * rng.uniform() - 1), 5 * (2 * rng.uniform() - 1), 5 * (2 * rng.uniform() - 1));
        auto st = g.quadratic_stencil(v);
        double acc = 0.0, wsum = 0.0;
        for (int k = 0; k < 27; ++k)
        {
            acc += st.w[k] * f[st.idx[k]];
            wsum += st.w[k];
        }
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(acc == doctest::Approx(q(v)).epsilon(1e-10));
    }
}

TEST_CASE("post-collision velocities")
{
    const Vec3 u(1, 0, 0), v(-1, 0, 0);
    auto [up, vp] = post_collision(u, v, Vec3(1, 0, 0));
    CHECK((up - v).norm() < 1e-15);
    CHECK((vp - u).norm() < 1e-15);
    CHECK(up.squaredNorm() + vp.squaredNorm() == doctest::Approx(2.0));
    auto [ug, vg] = post_collision(Vec3(1, 2, 3), Vec3(1, 0, 3), Vec3(1, 0, 0));
    CHECK((ug - Vec3(1, 2, 3)).norm() < 1e-15);
    CHECK((vg - Vec3(1, 0, 3)).norm() < 1e-15);
    CHECK_THROWS_AS(post_collision(u, v, Vec3(1, 1, 0)), NonUnitOmega);

    CounterRng rng(7, 0);
    for (int i = 0; i < 1000; ++i)
    {
        Vec3 a(rng.normal(), rng.normal(), rng.normal()), b(rng.normal(), rng.normal(), rng.normal());
        Vec3 w(rng.normal(), rng.normal(), rng.normal());
        w.normalize();
        auto [ap, bp] = post_collision(a, b, w);
        CHECK(((ap + bp) - (a + b)).norm() < 1e-13);
        CHECK(ap.squaredNorm() + bp.squaredNorm() == doctest::Approx(a.squaredNorm() + b.squaredNorm()).epsilon(1e-13));
    }
}

TEST_CASE("cutoff function")
{
    CHECK(cutoff_chi(0.05, 0.2) == 0.0);
    CHECK(cutoff_chi(0.4, 0.2) == 1.0);
    CHECK(cutoff_chi(0.3, 0.2) == doctest::Approx(0.5));
    double prev = 0.0;
    for (double s = 0.2; s <= 0.4; s += 0.01)
    {
        CHECK(cutoff_chi(s, 0.2) >= prev);
        prev = cutoff_chi(s, 0.2);
    }
}

TEST_CASE("collision frequency")
{
    CHECK(angular_integral(AngularKernel::abs_cos) == doctest::Approx(2 * M_PI));
    CHECK(collision_frequency_at(0.0, -1.0, AngularKernel::abs_cos) == doctest::Approx(4 * M_PI).epsilon(1e-10));
    // Large-speed limit: nu ~ 2 pi * sqrt(2 pi) / |v| for varrho = -1.
    const double s = 40.0;
    CHECK(collision_frequency_at(s, -1.0, AngularKernel::abs_cos) * s
          == doctest::Approx(2 * M_PI * std::sqrt(2 * M_PI)).epsilon(1e-3));

    VelocityGrid g(6.0, 16);
    const GridVector nu = collision_frequency(g, -1.0, AngularKernel::abs_cos);
    for (std::size_t a = 0; a < g.size(); ++a)
    {
        CHECK(nu[a] > 0.0);
        CHECK(nu[a] == doctest::Approx(nu[g.mirror(a)]).epsilon(1e-12));
    }
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 8; i < 16; ++i)
    {
        double value = nu[g.index(i, i, i)];
        CHECK(value < prev);
        prev = value;
    }
}

TEST_CASE("collision frequency agrees with a Monte Carlo oracle")
{
    // nu(v) = 2 pi E[|v - U|^-1] with U ~ N(0, I) scaled by the mass sqrt(2 pi) of mu.
    CounterRng rng(99, 0);
    for (double speed : {0.0, 1.5, 4.0})
    {
        const Vec3 v(speed, 0, 0);
        double acc = 0.0;
        const int n = 400000;
        for (int i = 0; i < n; ++i)
            acc += 1.0 / (v - Vec3(rng.normal(), rng.normal(), rng.normal())).norm();
        const double mc = 2 * M_PI * std::sqrt(2 * M_PI) * acc / n;
        CHECK(collision_frequency_at(speed, -1.0, AngularKernel::abs_cos) == doctest::Approx(mc).epsilon(1e-2));
    }
}

TEST_CASE("frequency table")
{
    FrequencyTable t(-1.0, AngularKernel::abs_cos);
    for (double s : {0.0, 0.37, 2.5, 9.9, 15.0, 25.0})
        CHECK(t(s) == doctest::Approx(collision_frequency_at(s, -1.0, AngularKernel::abs_cos)).epsilon(1e-6));
}

TEST_CASE("lattice defect of the punctured trapezoid sum")
{
    // D(p) h^(3+p) is the missing mass of |w|^p near the origin.
    const double h = 0.5;
    const double p = -1.0;
    const int m = 40;
    double sum = 0.0;
    for (int i = -m; i <= m; ++i)
        for (int j = -m; j <= m; ++j)
            for (int k = -m; k <= m; ++k)
            {
                if (i == 0 && j == 0 && k == 0)
                    continue;
                const double r2 = h * h * (i * i + j * j + k * k);
                sum += std::pow(r2, 0.5 * p) * std::exp(-r2 / 2);
            }
    sum *= h * h * h;
    const double exact = 4 * M_PI; // int |w|^-1 e^{-|w|^2/2} dw
    CHECK(sum + lattice_defect(p) * std::pow(h, 3 + p) == doctest::Approx(exact).epsilon(2e-3));
}

TEST_CASE("parameter validation")
{
    CollisionParams p;
    p.varrho = 0.5;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p = CollisionParams{};
    p.n_theta = 2;
    p.n_phi = 4;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    CHECK(CollisionParams{}.n_omega() == 72);
}

TEST_CASE("macroscopic projection")
{
    VelocityGrid g(6.0, 12);
    MacroProjection mp(g);
    for (int k = 0; k < 5; ++k)
    {
        GridVector b = mp.basis().col(k);
        CHECK((mp.project(b) - b).norm() < 1e-10 * b.norm());
    }
    GridVector f = random_vector(g, 3);
    GridVector pf = mp.project(f);
    CHECK((mp.project(pf) - pf).norm() < 1e-10 * pf.norm());
    GridVector micro = f - pf;
    for (int k = 0; k < 5; ++k)
        CHECK(std::abs(g.dot(micro, mp.basis().col(k))) < 1e-10 * g.norm(f));
    CHECK(mp.project(micro).norm() < 1e-10 * f.norm());
}

TEST_CASE("assembled operator: null space, symmetry, split")
{
    const CollisionOperator& op = small_operator();
    const auto& g = op.grid();
    MacroProjection mp(g);
    for (int k = 0; k < 5; ++k)
    {
        GridVector b = mp.basis().col(k);
        CHECK(g.norm(op.apply_L(b)) / g.norm(b) < 1e-2);
    }
    CHECK((op.K() - op.K_chi() - op.K_one_minus_chi()).cwiseAbs().maxCoeff() <= 1e-10);
    for (std::uint64_t s = 0; s < 20; ++s)
    {
        GridVector f = random_vector(g, s), h = random_vector(g, 100 + s);
        double lhs = g.dot(op.apply_K(f), h), rhs = g.dot(f, op.apply_K(h));
        CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(lhs)));
    }
    for (std::size_t a = 0; a < g.size(); ++a)
        CHECK(op.nu()[a] > 0.0);
}

TEST_CASE("quadratic form bounds")
{
    const CollisionOperator& op = small_operator();
    const auto& g = op.grid();
    MacroProjection mp(g);
    double c_fit = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s)
    {
        GridVector f = random_vector(g, 500 + s);
        double nn = nu_norm(op, f);
        c_fit = std::max(c_fit, g.dot(op.apply_K(f), f) / (nn * nn));
        CHECK(quadratic_form(op, f) >= -1e-3 * nn * nn);
    }
    CHECK(c_fit < 10.0);
    const double delta = random_coercivity(op, mp, 100, 77);
    CHECK(delta > 0.0);
    MESSAGE("(Kf,f) <= " << c_fit << " |f|_nu^2, coercivity delta = " << delta);
}

TEST_CASE("K^(1-chi) alone equals the split part of the full operator")
{
    const CollisionOperator& op = small_operator();
    Matrix rest = assemble_K_one_minus_chi(op.grid(), op.params());
    // The full operator adds a rank-5 invariant correction to K^chi only.
    CHECK((rest - op.K_one_minus_chi()).cwiseAbs().maxCoeff() <= 1e-12 * op.K_one_minus_chi().cwiseAbs().maxCoeff());
}

TEST_CASE("weighted kernel rows decay with speed")
{
    const CollisionOperator& op = small_operator();
    const auto& g = op.grid();
    std::vector<double> speed, rows;
    const GridVector w = g.sample([](const Vec3& v) { return weight_stationary(0.5, 2.0, v.norm()); });
    for (std::size_t a = 0; a < g.size(); ++a)
    {
        double s = g.node(a).norm();
        if (s < 1.0 || s > 4.5)
            continue;
        double row = 0.0;
        for (std::size_t b = 0; b < g.size(); ++b)
            row += std::abs(op.K_chi()(a, b)) * w[a] / w[b];
        speed.push_back(1.0 + s);
        rows.push_back(row);
    }
    const double slope = loglog_slope(speed, rows);
    CHECK(slope < 0.0);
    MESSAGE("log-log slope of weighted K^chi row sums: " << slope);
}

TEST_CASE("nonlinear term")
{
    VelocityGrid g(6.0, 8);
    CollisionOperator op(g, CollisionParams{}, collision_frequency(g, -1.0, AngularKernel::abs_cos),
                         Matrix::Zero(g.size(), g.size()), Matrix::Zero(g.size(), g.size()));
    GridVector f = random_vector(g, 1), zero = GridVector::Zero(g.size());
    CHECK(gamma(op, zero, f).norm() == 0.0);
    CHECK(gamma(op, f, zero).norm() == 0.0);
    GridVector h = random_vector(g, 2);
    GridVector lin = gamma(op, f + 2.0 * h, f) - gamma(op, f, f) - 2.0 * gamma(op, h, f);
    CHECK(lin.norm() <= 1e-12 * gamma(op, f, f).norm() + 1e-14);
}

TEST_CASE("nonlinear term vanishes on the Maxwellian and keeps the invariants")
{
    const CollisionOperator& op = small_operator();
    const auto& g = op.grid();
    MacroProjection mp(g);
    const GridVector sq = mp.basis().col(0);
    const GridVector gm = gamma(op, sq, sq);
    CHECK(g.norm(gm) / (g.norm(op.nu().cwiseProduct(sq))) < 2e-2);

    GridVector f = sq.cwiseProduct(g.sample([](const Vec3& v) { return 0.1 * std::exp(-0.5 * (v - Vec3(0.5, 0, 0)).squaredNorm()); }));
    const GridVector q = gamma(op, f, f);
    const double scale = g.norm(op.nu().cwiseProduct(f)) * g.norm(f);
    for (int k = 0; k < 5; ++k)
        CHECK(std::abs(g.dot(q, mp.basis().col(k))) <= 2e-2 * scale);
}

TEST_CASE("operator cache round trip")
{
    const CollisionOperator& op = small_operator();
    const auto dir = std::filesystem::temp_directory_path() / "kinlab_cache_test";
    std::filesystem::create_directories(dir);
    const auto file = dir / cache_key(op.grid(), op.params());
    save_operator(op, file);
    const CollisionOperator back = load_operator(file);
    CHECK(back.K() == op.K());
    CHECK(back.nu() == op.nu());
    CHECK(back.params().eps_chi == op.params().eps_chi);
    CHECK(cache_key(op.grid(), op.params()) == "op_n12_v6_rm1_e0p2_t6_p12_abs_cos.bin");
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(load_operator(dir / "missing.bin"), CacheError);

    std::ostringstream os;
    write_operator_csv(op, os, {0, 5});
    CHECK(os.str().size() > 100);
}
