#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <string>

namespace kinlab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Points within this distance of zero in level-set units count as boundary.
inline constexpr double kTolBoundary = 1e-10;

enum class DomainKind
{
    slab,
    ball,
    ellipsoid,
    level_set
};

std::string to_string(DomainKind kind);

/*!
 * Convex region {x | xi(x) < 0} described by a level-set function.
 *
 * Points and velocities are always 3-vectors. Components beyond dim() are
 * spatially inactive: the level set ignores them and positions returned by
 * the domain keep them at zero. The slab is the dim=1 case xi(x) = x1^2 - L^2.
 */
class Domain
{
  public:
    using ScalarField = std::function<double(const Vec3&)>;
    using VectorField = std::function<Vec3(const Vec3&)>;
    using MatrixField = std::function<Mat3(const Vec3&)>;

    static Domain slab(double half_width);
    static Domain ball(double radius, int dim = 3);
    static Domain ellipsoid(const Vec3& semi_axes);
    //! General convex level set; exit times fall back to stepping + bisection.
    static Domain level_set(int dim,
                            ScalarField xi,
                            VectorField gradient,
                            MatrixField hessian,
                            double convexity_constant,
                            double diameter);

    DomainKind kind() const { return kind_; }
    int dim() const { return dim_; }
    double diameter() const { return diameter_; }
    double convexity_constant() const { return convexity_; }
    //! Semi-axes for slab/ball/ellipsoid (slab: (L, 0, 0)).
    const Vec3& semi_axes() const { return axes_; }

    double level(const Vec3& x) const;
    Vec3 gradient(const Vec3& x) const;
    Mat3 hessian(const Vec3& x) const;

    bool on_boundary(const Vec3& x) const;
    bool in_closure(const Vec3& x) const;
    //! Zero the spatially inactive components.
    Vec3 restrict(const Vec3& v) const;
    //! One Newton step along the gradient towards {xi = 0}.
    Vec3 project_to_boundary(const Vec3& x) const;

  private:
    Domain() = default;

    DomainKind kind_ = DomainKind::ball;
    int dim_ = 3;
    Vec3 axes_ = Vec3::Ones();
    double convexity_ = 0.0;
    double diameter_ = 2.0;
    ScalarField xi_;
    VectorField grad_;
    MatrixField hess_;
};

struct ExitPoint
{
    double t_b = std::numeric_limits<double>::infinity();
    Vec3 x_b = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
    //! False when the active velocity components vanish (t_b = +inf).
    bool finite = false;
};

Vec3 outward_normal(const Domain& d, const Vec3& x);

//! R_x v = v - 2 (v.n) n.
Vec3 specular_reflect(const Domain& d, const Vec3& x, const Vec3& v);

//! First backward time at which x - t v leaves the closure of the domain.
ExitPoint backward_exit_time(const Domain& d, const Vec3& x, const Vec3& v);

//! alpha(x, v) = xi^2 + (v.grad xi)^2 - 2 (v.Hess xi.v) xi.
double kinetic_distance(const Domain& d, const Vec3& x, const Vec3& v);

//! |n.v| <= eps or |v| >= 1/eps or |v| <= eps.
bool near_grazing(const Domain& d, const Vec3& x, const Vec3& v, double eps);

} // namespace kinlab
