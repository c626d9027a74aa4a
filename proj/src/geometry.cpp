#include "kinlab/geometry.hpp"

#include "kinlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kinlab {

namespace {

// Diagonal quadratic level set xi(x) = sum_i c_i x_i^2 - s over the active
// components. Covers slab, ball and ellipsoid.
struct Quadric
{
    Vec3 c;
    double s;

    double operator()(const Vec3& x) const
    {
        return c[0] * x[0] * x[0] + c[1] * x[1] * x[1] + c[2] * x[2] * x[2] - s;
    }
};

std::string describe(const Vec3& x)
{
    std::ostringstream os;
    os << "(" << x[0] << ", " << x[1] << ", " << x[2] << ")";
    return os.str();
}

Domain::ScalarField quadric_level(const Quadric& q)
{
    return [q](const Vec3& x) { return q(x); };
}

Domain::VectorField quadric_gradient(const Quadric& q)
{
    return [q](const Vec3& x) { return Vec3(2 * q.c[0] * x[0], 2 * q.c[1] * x[1], 2 * q.c[2] * x[2]); };
}

Domain::MatrixField quadric_hessian(const Quadric& q)
{
    Mat3 h = (2.0 * q.c).asDiagonal();
    return [h](const Vec3&) { return h; };
}

constexpr int kMaxMarchSteps = 1000000;
constexpr int kBisectionIterations = 200;

} // namespace

std::string to_string(DomainKind kind)
{
    switch (kind)
    {
        case DomainKind::slab: return "slab";
        case DomainKind::ball: return "ball";
        case DomainKind::ellipsoid: return "ellipsoid";
        case DomainKind::level_set: return "level_set";
    }
    return "unknown";
}

Domain Domain::slab(double half_width)
{
    if (!(half_width > 0))
        throw InvalidParameter("slab half-width must be positive");
    Quadric q{Vec3(1, 0, 0), half_width * half_width};
    Domain d;
    d.kind_ = DomainKind::slab;
    d.dim_ = 1;
    d.axes_ = Vec3(half_width, 0, 0);
    d.convexity_ = 2.0;
    d.diameter_ = 2 * half_width;
    d.xi_ = quadric_level(q);
    d.grad_ = quadric_gradient(q);
    d.hess_ = quadric_hessian(q);
    return d;
}

Domain Domain::ball(double radius, int dim)
{
    if (!(radius > 0))
        throw InvalidParameter("ball radius must be positive");
    if (dim < 2 || dim > 3)
        throw InvalidParameter("ball dimension must be 2 or 3");
    Quadric q{Vec3(1, 1, dim == 3 ? 1 : 0), radius * radius};
    Domain d;
    d.kind_ = DomainKind::ball;
    d.dim_ = dim;
    d.axes_ = Vec3(radius, radius, dim == 3 ? radius : 0);
    d.convexity_ = 2.0;
    d.diameter_ = 2 * radius;
    d.xi_ = quadric_level(q);
    d.grad_ = quadric_gradient(q);
    d.hess_ = quadric_hessian(q);
    return d;
}

Domain Domain::ellipsoid(const Vec3& semi_axes)
{
    if (!(semi_axes.minCoeff() > 0))
        throw InvalidParameter("ellipsoid semi-axes must be positive");
    Quadric q{semi_axes.cwiseInverse().cwiseAbs2(), 1.0};
    Domain d;
    d.kind_ = DomainKind::ellipsoid;
    d.dim_ = 3;
    d.axes_ = semi_axes;
    d.convexity_ = 2.0 * q.c.minCoeff();
    d.diameter_ = 2 * semi_axes.maxCoeff();
    d.xi_ = quadric_level(q);
    d.grad_ = quadric_gradient(q);
    d.hess_ = quadric_hessian(q);
    return d;
}

Domain Domain::level_set(int dim,
                         ScalarField xi,
                         VectorField gradient,
                         MatrixField hessian,
                         double convexity_constant,
                         double diameter)
{
    if (dim < 1 || dim > 3)
        throw InvalidParameter("level-set dimension must be 1, 2 or 3");
    if (!(diameter > 0))
        throw InvalidParameter("level-set diameter must be positive");
    Domain d;
    d.kind_ = DomainKind::level_set;
    d.dim_ = dim;
    d.axes_ = Vec3::Zero();
    d.convexity_ = convexity_constant;
    d.diameter_ = diameter;
    d.xi_ = std::move(xi);
    d.grad_ = std::move(gradient);
    d.hess_ = std::move(hessian);
    return d;
}

double Domain::level(const Vec3& x) const { return xi_(restrict(x)); }

Vec3 Domain::gradient(const Vec3& x) const { return restrict(grad_(restrict(x))); }

Mat3 Domain::hessian(const Vec3& x) const
{
    Mat3 h = hess_(restrict(x));
    for (int i = dim_; i < 3; ++i)
    {
        h.row(i).setZero();
        h.col(i).setZero();
    }
    return h;
}

bool Domain::on_boundary(const Vec3& x) const { return std::abs(level(x)) <= kTolBoundary; }

bool Domain::in_closure(const Vec3& x) const { return level(x) <= kTolBoundary; }

Vec3 Domain::restrict(const Vec3& v) const
{
    Vec3 r = v;
    for (int i = dim_; i < 3; ++i)
        r[i] = 0.0;
    return r;
}

Vec3 Domain::project_to_boundary(const Vec3& x) const
{
    Vec3 y = restrict(x);
    Vec3 g = gradient(y);
    double g2 = g.squaredNorm();
    if (g2 == 0.0)
        return y;
    return y - (level(y) / g2) * g;
}

Vec3 outward_normal(const Domain& d, const Vec3& x)
{
    double xi = d.level(x);
    if (std::abs(xi) > kTolBoundary)
        throw NotOnBoundary("xi = " + std::to_string(xi) + " at " + describe(x));
    Vec3 g = d.gradient(x);
    double norm = g.norm();
    if (norm < 1e-14)
        throw DegenerateGradient("|grad xi| = " + std::to_string(norm) + " at " + describe(x));
    return g / norm;
}

Vec3 specular_reflect(const Domain& d, const Vec3& x, const Vec3& v)
{
    Vec3 n = outward_normal(d, x);
    return v - 2.0 * v.dot(n) * n;
}

ExitPoint backward_exit_time(const Domain& d, const Vec3& x, const Vec3& v)
{
    ExitPoint out;
    Vec3 xa = d.restrict(x);
    Vec3 va = d.restrict(v);
    if (va.squaredNorm() == 0.0)
        return out;

    double xi0 = d.level(xa);
    // Leaving immediately: on the boundary and moving outward backward in time.
    if (std::abs(xi0) <= kTolBoundary && d.gradient(xa).dot(va) <= 0.0)
    {
        out.t_b = 0.0;
        out.x_b = xa;
        out.finite = true;
        return out;
    }

    double t_b = 0.0;
    if (d.kind() != DomainKind::level_set)
    {
        // xi(x - t v) = a t^2 - 2 b t + c with a > 0 and c <= 0.
        Vec3 coef = d.hessian(Vec3::Zero()).diagonal() / 2.0;
        double a = (coef.array() * va.array().square()).sum();
        double b = (coef.array() * xa.array() * va.array()).sum();
        double c = std::min(xi0, 0.0);
        double disc = std::max(b * b - a * c, 0.0);
        double q = b + std::copysign(std::sqrt(disc), b);
        double r1 = q / a;
        double r2 = (q != 0.0) ? c / q : 0.0;
        t_b = std::max(r1, r2);
    }
    else
    {
        double speed = va.norm();
        double h = 1e-3 * d.diameter() / speed;
        double lo = 0.0;
        double hi = 0.0;
        bool bracketed = false;
        for (int k = 1; k <= kMaxMarchSteps; ++k)
        {
            hi = k * h;
            if (d.level(xa - hi * va) > 0.0)
            {
                bracketed = true;
                break;
            }
            lo = hi;
        }
        if (!bracketed)
            throw RootNotFound("no sign change of xi along the backward ray from " + describe(xa));
        for (int it = 0; it < kBisectionIterations && hi - lo > 0.0; ++it)
        {
            double mid = 0.5 * (lo + hi);
            if (d.level(xa - mid * va) > 0.0)
                hi = mid;
            else
                lo = mid;
        }
        t_b = 0.5 * (lo + hi);
    }

    out.t_b = t_b;
    out.x_b = d.project_to_boundary(xa - t_b * va);
    out.finite = true;
    return out;
}

double kinetic_distance(const Domain& d, const Vec3& x, const Vec3& v)
{
    double xi = d.level(x);
    Vec3 va = d.restrict(v);
    double vg = va.dot(d.gradient(x));
    double vhv = va.dot(d.hessian(x) * va);
    return xi * xi + vg * vg - 2.0 * vhv * xi;
}

bool near_grazing(const Domain& d, const Vec3& x, const Vec3& v, double eps)
{
    Vec3 n = outward_normal(d, x);
    double speed = v.norm();
    return std::abs(n.dot(v)) <= eps || speed >= 1.0 / eps || speed <= eps;
}

} // namespace kinlab
