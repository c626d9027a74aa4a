#include "kinlab/collision.hpp"

#include "kinlab/errors.hpp"
#include "kinlab/quadrature.hpp"
#include "kinlab/weights.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kinlab {

std::string to_string(AngularKernel kind)
{
    switch (kind)
    {
        case AngularKernel::abs_cos: return "abs_cos";
    }
    return "unknown";
}

AngularKernel angular_kernel_from_string(const std::string& name)
{
    if (name == "abs_cos")
        return AngularKernel::abs_cos;
    throw InvalidParameter("unknown angular kernel '" + name + "'");
}

double angular_integral(AngularKernel kind)
{
    switch (kind)
    {
        case AngularKernel::abs_cos: return 2.0 * M_PI;
    }
    return 0.0;
}

double cutoff_chi(double s, double eps)
{
    if (s <= eps)
        return 0.0;
    if (s >= 2.0 * eps)
        return 1.0;
    double x = (s - eps) / eps;
    return x * x * (3.0 - 2.0 * x);
}

std::pair<Vec3, Vec3> post_collision(const Vec3& u, const Vec3& v, const Vec3& omega)
{
    if (std::abs(omega.norm() - 1.0) > 1e-12)
        throw NonUnitOmega("|omega| = " + std::to_string(omega.norm()));
    double proj = (u - v).dot(omega);
    return {u - proj * omega, v + proj * omega};
}

void CollisionParams::validate() const
{
    if (!(varrho > -3.0 && varrho < 0.0))
        throw InvalidParameter("varrho must lie in (-3, 0)");
    if (!(eps_chi > 0.0))
        throw InvalidParameter("eps_chi must be positive");
    if (n_theta < 1 || n_phi < 1 || n_omega() < 32)
        throw InvalidParameter("angular rule needs n_theta, n_phi >= 1 and at least 32 directions");
}

double collision_frequency_at(double speed, double varrho, AngularKernel b0)
{
    // int |w|^varrho mu(v + w) dw = int_0^inf r^(varrho+2) e^{-(r-s)^2/2} (1 - e^{-2rs}) / (rs) dr,
    // which tends to 2 int r^(varrho+2) e^{-r^2/2} dr as s -> 0.
    const double s = speed;
    auto integrand = [&](double r) {
        if (r <= 0.0)
            return 0.0;
        double x = r * s;
        double shape = (x < 1e-8) ? 2.0 - 2.0 * x : -std::expm1(-2.0 * x) / x;
        return std::pow(r, varrho + 2.0) * std::exp(-0.5 * (r - s) * (r - s)) * shape;
    };
    boost::math::quadrature::tanh_sinh<double> integrator(15);
    const double upper = s + 14.0;
    double err = 0.0;
    double l1 = 0.0;
    std::size_t levels = 0;
    double value = integrator.integrate(integrand, 0.0, upper, 1e-12, &err, &l1, &levels);
    if (!std::isfinite(value) || err > 1e-9 * std::max(1.0, std::abs(value)))
    {
        std::ostringstream os;
        os << "nu(|v| = " << speed << "): error estimate " << err << " after " << levels << " levels";
        throw QuadratureNotConverged(os.str());
    }
    return angular_integral(b0) * value;
}

GridVector collision_frequency(const VelocityGrid& grid, double varrho, AngularKernel b0)
{
    FrequencyTable table(varrho, b0, grid.half_width() * std::sqrt(3.0) + 0.5, 0);
    return grid.sample([&](const Vec3& v) { return table(v.norm()); });
}

FrequencyTable::FrequencyTable(double varrho, AngularKernel b0, double r_max, int n_points)
    : varrho_(varrho), r_max_(r_max)
{
    if (n_points <= 0)
        n_points = static_cast<int>(std::ceil(r_max / 0.025)) + 1;
    dr_ = r_max / (n_points - 1);
    value_.resize(n_points);
    for (int i = 0; i < n_points; ++i)
        value_[i] = collision_frequency_at(i * dr_, varrho, b0);

    // Cubic spline with zero slope at r = 0 (nu is even) and natural end at r_max.
    const int n = n_points;
    std::vector<double> diag(n, 4.0), rhs(n, 0.0);
    second_.assign(n, 0.0);
    diag[0] = 2.0;
    rhs[0] = 6.0 * (value_[1] - value_[0]) / (dr_ * dr_);
    for (int i = 1; i < n - 1; ++i)
        rhs[i] = 6.0 * (value_[i + 1] - 2.0 * value_[i] + value_[i - 1]) / (dr_ * dr_);
    diag[n - 1] = 1.0;
    rhs[n - 1] = 0.0;
    // Thomas algorithm; sub/super diagonals are 1 except the last row.
    std::vector<double> c(n, 1.0);
    c[n - 1] = 0.0;
    std::vector<double> cp(n), dp(n);
    cp[0] = c[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (int i = 1; i < n; ++i)
    {
        double sub = (i == n - 1) ? 0.0 : 1.0;
        double m = diag[i] - sub * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (rhs[i] - sub * dp[i - 1]) / m;
    }
    second_[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i)
        second_[i] = dp[i] - cp[i] * second_[i + 1];
}

double FrequencyTable::operator()(double speed) const
{
    if (speed >= r_max_)
        return value_.back() * std::pow(speed / r_max_, varrho_);
    double x = speed / dr_;
    int i = std::min(static_cast<int>(x), static_cast<int>(value_.size()) - 2);
    double t = x - i;
    double a = 1.0 - t;
    double h2 = dr_ * dr_ / 6.0;
    return a * value_[i] + t * value_[i + 1]
           + h2 * ((a * a * a - a) * second_[i] + (t * t * t - t) * second_[i + 1]);
}

double lattice_defect(double varrho)
{
    // Defect of the punctured lattice sum against the exact integral for a wide
    // Gaussian; the O(1/s^2) remainder is removed by Richardson extrapolation.
    auto defect = [varrho](double s) {
        const int reach = static_cast<int>(std::ceil(7.5 * s));
        const double inv2s2 = 1.0 / (2.0 * s * s);
        double sum = 0.0;
        for (int i = 0; i <= reach; ++i)
            for (int j = 0; j <= reach; ++j)
                for (int k = 0; k <= reach; ++k)
                {
                    if (i == 0 && j == 0 && k == 0)
                        continue;
                    double mult = (i ? 2.0 : 1.0) * (j ? 2.0 : 1.0) * (k ? 2.0 : 1.0);
                    double r2 = double(i) * i + double(j) * j + double(k) * k;
                    sum += mult * std::pow(r2, 0.5 * varrho) * std::exp(-r2 * inv2s2);
                }
        double exact = 2.0 * M_PI * std::pow(2.0 * s * s, 0.5 * (varrho + 3.0)) * std::tgamma(0.5 * (varrho + 3.0));
        return exact - sum;
    };
    double d1 = defect(6.0);
    double d2 = defect(12.0);
    return (4.0 * d2 - d1) / 3.0;
}

AngularRule make_angular_rule(const CollisionParams& p)
{
    AngularRule rule;
    auto gl = gauss_legendre(p.n_theta, 0.0, 1.0);
    const double dphi = 2.0 * M_PI / p.n_phi;
    for (int i = 0; i < p.n_theta; ++i)
        for (int j = 0; j < p.n_phi; ++j)
        {
            double c = gl.nodes[i];
            rule.cos_theta.push_back(c);
            rule.phi.push_back((j + 0.5) * dphi);
            // b0 = |cos theta|; omega and -omega give the same collision.
            rule.weight.push_back(2.0 * gl.weights[i] * c * dphi);
        }
    return rule;
}

namespace {

// Orthonormal pair completing the unit vector e.
void frame(const Vec3& e, Vec3& e1, Vec3& e2)
{
    Vec3 helper = (std::abs(e[0]) < 0.9) ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    e1 = e.cross(helper).normalized();
    e2 = e.cross(e1);
}

// Adds coef * L_j(x) to acc[j] over the triquadratic stencil of x.
struct StencilScatter
{
    const VelocityGrid& grid;
    double inv_h;
    double vmax;
    int n;

    inline void operator()(const Vec3& x, double coef, double* acc) const
    {
        int base[3];
        double lw[3][3];
        for (int a = 0; a < 3; ++a)
        {
            double y = (x[a] + vmax) * inv_h;
            int c = static_cast<int>(std::floor(y + 0.5));
            c = std::clamp(c, 1, n - 2);
            double s = y - c;
            lw[a][0] = 0.5 * s * (s - 1.0);
            lw[a][1] = (1.0 - s) * (1.0 + s);
            lw[a][2] = 0.5 * s * (s + 1.0);
            base[a] = c - 1;
        }
        for (int i = 0; i < 3; ++i)
        {
            double wi = coef * lw[0][i];
            for (int j = 0; j < 3; ++j)
            {
                double wij = wi * lw[1][j];
                double* row = acc + grid.index(base[0] + i, base[1] + j, base[2]);
                row[0] += wij * lw[2][0];
                row[1] += wij * lw[2][1];
                row[2] += wij * lw[2][2];
            }
        }
    }

    inline double gather(const Vec3& x, const double* values) const
    {
        int base[3];
        double lw[3][3];
        for (int a = 0; a < 3; ++a)
        {
            double y = (x[a] + vmax) * inv_h;
            int c = static_cast<int>(std::floor(y + 0.5));
            c = std::clamp(c, 1, n - 2);
            double s = y - c;
            lw[a][0] = 0.5 * s * (s - 1.0);
            lw[a][1] = (1.0 - s) * (1.0 + s);
            lw[a][2] = 0.5 * s * (s + 1.0);
            base[a] = c - 1;
        }
        double acc = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
            {
                const double* row = values + grid.index(base[0] + i, base[1] + j, base[2]);
                acc += lw[0][i] * lw[1][j] * (lw[2][0] * row[0] + lw[2][1] * row[1] + lw[2][2] * row[2]);
            }
        return acc;
    }
};

struct LocalRule
{
    std::vector<double> radius;
    std::vector<double> weight; // includes r^varrho r^2 dr (1 - chi) and the solid angle
    std::vector<Vec3> direction;
};

// Quadrature of (1 - chi(|w|)) |w|^varrho g(w) over |w| < 2 eps.
LocalRule make_local_rule(double varrho, double eps)
{
    LocalRule rule;
    const double p = varrho + 3.0;
    // Inner ball: substitution t = r^p / p removes the singularity.
    std::vector<std::pair<double, double>> radial;
    auto inner = gauss_legendre(4, 0.0, std::pow(eps, p) / p);
    for (std::size_t i = 0; i < inner.nodes.size(); ++i)
        radial.emplace_back(std::pow(p * inner.nodes[i], 1.0 / p), inner.weights[i]);
    auto shell = gauss_legendre(4, eps, 2.0 * eps);
    for (std::size_t i = 0; i < shell.nodes.size(); ++i)
    {
        double r = shell.nodes[i];
        radial.emplace_back(r, shell.weights[i] * std::pow(r, varrho + 2.0) * (1.0 - cutoff_chi(r, eps)));
    }
    auto polar = gauss_legendre(4);
    const int n_az = 8;
    for (auto [r, wr] : radial)
        for (std::size_t a = 0; a < polar.nodes.size(); ++a)
            for (int b = 0; b < n_az; ++b)
            {
                double c = polar.nodes[a];
                double s = std::sqrt(std::max(0.0, 1.0 - c * c));
                double phi = 2.0 * M_PI * (b + 0.5) / n_az;
                rule.radius.push_back(r);
                rule.weight.push_back(wr * polar.weights[a] * 2.0 * M_PI / n_az);
                rule.direction.emplace_back(s * std::cos(phi), s * std::sin(phi), c);
            }
    return rule;
}

void symmetrize(Matrix& k, const GridVector& w)
{
    const Eigen::Index n = k.rows();
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b)
        {
            // W K symmetric: W_a K_ab = W_b K_ba
            double s = 0.5 * (w[a] * k(a, b) + w[b] * k(b, a));
            k(a, b) = s / w[a];
            k(b, a) = s / w[b];
        }
}

/*
 * Symmetric low-rank update D with (k_chi + k_rest + D) B = target, where B
 * holds the invariant basis. The 5x5 block B^T W target is symmetrized first,
 * which is required for D to be W-symmetric.
 */
void restore_invariant_action(Matrix& k_chi,
                              const Matrix& k_rest,
                              const MacroProjection& mp,
                              const GridVector& w,
                              const Eigen::Matrix<double, Eigen::Dynamic, 5>& target)
{
    using Block = Eigen::Matrix<double, Eigen::Dynamic, 5>;
    const Block& b = mp.basis();
    const Eigen::Matrix<double, 5, 5>& g_inv = mp.gram_inverse();
    const Block wb = w.asDiagonal() * b;
    Block e = target - k_chi * b - k_rest * b;
    Eigen::Matrix<double, 5, 5> a = wb.transpose() * e;
    Eigen::Matrix<double, 5, 5> skew = 0.5 * (a - a.transpose());
    e -= b * (g_inv * skew);
    a = wb.transpose() * e;
    const Block left = e * g_inv;                               // X = left * (W B)^T
    const Block right = b * g_inv;                              // X* = right * (W E)^T
    const Block we = w.asDiagonal() * e;
    const Block corr = b * (g_inv * a.transpose() * g_inv);     // X* P = corr * (W B)^T
    k_chi.noalias() += left * wb.transpose();
    k_chi.noalias() += right * we.transpose();
    k_chi.noalias() -= corr * wb.transpose();
}

// (1 - chi) part by the explicit local rule in |u - v| < 2 eps, before symmetrization.
Matrix assemble_local_raw(const VelocityGrid& grid, const CollisionParams& params)
{
    const std::size_t n = grid.size();
    const double a_b = angular_integral(params.b0);
    const AngularRule ang = make_angular_rule(params);
    const LocalRule local = make_local_rule(params.varrho, params.eps_chi);
    const std::size_t n_omega = ang.weight.size();
    const StencilScatter scatter{grid, 1.0 / grid.spacing(), grid.half_width(), grid.points_per_axis()};
    Matrix k = Matrix::Zero(n, n);
#pragma omp parallel
    {
        std::vector<double> acc(n);
#pragma omp for schedule(dynamic, 8)
        for (std::size_t a = 0; a < n; ++a)
        {
            std::fill(acc.begin(), acc.end(), 0.0);
            const Vec3 v = grid.node(a);
            for (std::size_t q = 0; q < local.weight.size(); ++q)
            {
                const double r = local.radius[q];
                const Vec3 e = local.direction[q];
                const Vec3 u = v + r * e;
                const double coef = local.weight[q] * maxwellian(u);
                scatter(u, -coef * a_b, acc.data());
                Vec3 e1, e2;
                frame(e, e1, e2);
                for (std::size_t m = 0; m < n_omega; ++m)
                {
                    const double c = ang.cos_theta[m];
                    const double st = std::sqrt(1.0 - c * c);
                    const Vec3 omega = c * e + st * (std::cos(ang.phi[m]) * e1 + std::sin(ang.phi[m]) * e2);
                    const Vec3 shift = (r * c) * omega;
                    const double wgt = coef * ang.weight[m];
                    scatter(u - shift, wgt, acc.data());
                    scatter(v + shift, wgt, acc.data());
                }
            }
            const double sa = sqrt_maxwellian_sq(v.squaredNorm());
            for (std::size_t j = 0; j < n; ++j)
                if (acc[j] != 0.0)
                    k(a, j) = sa * acc[j] / sqrt_maxwellian_sq(grid.node(j).squaredNorm());
        }
    }
    return k;
}

} // namespace

Matrix assemble_K_one_minus_chi(const VelocityGrid& grid, const CollisionParams& params)
{
    params.validate();
    Matrix k = assemble_local_raw(grid, params);
    symmetrize(k, grid.weights());
    return k;
}

CollisionOperator::CollisionOperator(VelocityGrid grid, CollisionParams params, GridVector nu, Matrix k_chi, Matrix k_rest)
    : grid_(std::move(grid)),
      params_(params),
      nu_(std::move(nu)),
      k_chi_(std::move(k_chi)),
      k_rest_(std::move(k_rest)),
      k_(k_chi_ + k_rest_)
{
}

GridVector CollisionOperator::apply_L(const GridVector& f) const
{
    return nu_.cwiseProduct(f) - k_ * f;
}

CollisionOperator assemble_collision_operator(const VelocityGrid& grid, const CollisionParams& params)
{
    params.validate();
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    const double varrho = params.varrho;
    const double eps = params.eps_chi;
    const double a_b = angular_integral(params.b0);
    const AngularRule ang = make_angular_rule(params);
    const LocalRule local = make_local_rule(varrho, eps);
    const std::size_t n_omega = ang.weight.size();

    std::vector<double> cos_phi(n_omega), sin_phi(n_omega), sin_theta(n_omega);
    for (std::size_t m = 0; m < n_omega; ++m)
    {
        cos_phi[m] = std::cos(ang.phi[m]);
        sin_phi[m] = std::sin(ang.phi[m]);
        sin_theta[m] = std::sqrt(1.0 - ang.cos_theta[m] * ang.cos_theta[m]);
    }

    GridVector mu(n), sqrt_mu(n), inv_sqrt_mu(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        double v2 = grid.node(i).squaredNorm();
        mu[i] = maxwellian_sq(v2);
        sqrt_mu[i] = sqrt_maxwellian_sq(v2);
        inv_sqrt_mu[i] = 1.0 / sqrt_mu[i];
    }

    // Diagonal defect of the punctured lattice sum, split into the chi part
    // (kept on the lattice) and the (1 - chi) ball handled by the local rule.
    double ball_integral = 0.0;
    for (std::size_t m = 0; m < local.weight.size(); ++m)
        ball_integral += local.weight[m];
    double lattice_rest = 0.0;
    double lattice_rest2 = 0.0;
    {
        const int reach = static_cast<int>(std::ceil(2.0 * eps / h));
        for (int i = -reach; i <= reach; ++i)
            for (int j = -reach; j <= reach; ++j)
                for (int k = -reach; k <= reach; ++k)
                {
                    if (i == 0 && j == 0 && k == 0)
                        continue;
                    double r = h * std::sqrt(double(i * i + j * j + k * k));
                    double cell = h * h * h * std::pow(r, varrho) * (1.0 - cutoff_chi(r, eps));
                    lattice_rest += cell;
                    lattice_rest2 += cell * r * r;
                }
    }
    const double c_diag = lattice_defect(varrho) * std::pow(h, 3.0 + varrho);
    const double c_chi = c_diag - ball_integral + lattice_rest;
    // Next order of the same expansion acts through the Laplacian of the
    // integrand at u = v; on the invariants that Laplacian is (|v|^2 - 3) mu(v).
    double ball_second = 0.0;
    for (std::size_t m = 0; m < local.weight.size(); ++m)
        ball_second += local.weight[m] * local.radius[m] * local.radius[m];
    const double c_lap = (lattice_defect(varrho + 2.0) * std::pow(h, 5.0 + varrho) - ball_second + lattice_rest2) / 6.0;

    const GridVector nu = collision_frequency(grid, varrho, params.b0);

    Matrix k_chi = Matrix::Zero(n, n);
    Matrix k_rest = assemble_local_raw(grid, params);
    const StencilScatter scatter{grid, 1.0 / h, grid.half_width(), grid.points_per_axis()};

#pragma omp parallel
    {
        std::vector<double> acc_chi(n);
#pragma omp for schedule(dynamic, 4)
        for (std::size_t a = 0; a < n; ++a)
        {
            std::fill(acc_chi.begin(), acc_chi.end(), 0.0);
            const Vec3 v = grid.node(a);

            for (std::size_t b = 0; b < n; ++b)
            {
                if (b == a)
                    continue;
                const Vec3 u = grid.node(b);
                const Vec3 g = u - v;
                const double r = g.norm();
                const double chi = cutoff_chi(r, eps);
                if (chi == 0.0)
                    continue;
                const double base = grid.weight(b) * std::pow(r, varrho) * chi;
                // K1 acts on f(u) at the node itself.
                k_chi(a, b) -= base * a_b * sqrt_mu[b] * sqrt_mu[a];
                const double coef = base * mu[b];
                const Vec3 e = g / r;
                Vec3 e1, e2;
                frame(e, e1, e2);
                for (std::size_t m = 0; m < n_omega; ++m)
                {
                    const double c = ang.cos_theta[m];
                    const Vec3 omega = c * e + sin_theta[m] * (cos_phi[m] * e1 + sin_phi[m] * e2);
                    const Vec3 shift = (r * c) * omega;
                    const double wgt = coef * ang.weight[m];
                    scatter(u - shift, wgt, acc_chi.data());
                    scatter(v + shift, wgt, acc_chi.data());
                }
            }

            for (std::size_t j = 0; j < n; ++j)
            {
                k_chi(a, j) += sqrt_mu[a] * acc_chi[j] * inv_sqrt_mu[j];
            }
            // Singular node u = v: gain 2 mu(v) f(v) minus loss mu(v) f(v).
            k_chi(a, a) += a_b * (c_chi + c_lap * (v.squaredNorm() - 3.0)) * mu[a];
        }
    }

    // Raw action on the collision invariants, kept through the symmetrization below.
    const MacroProjection mp(grid);
    const Eigen::Matrix<double, Eigen::Dynamic, 5> raw_action = (k_chi + k_rest) * mp.basis();
    symmetrize(k_chi, grid.weights());
    symmetrize(k_rest, grid.weights());
    restore_invariant_action(k_chi, k_rest, mp, grid.weights(), raw_action);
    return CollisionOperator(grid, params, nu, std::move(k_chi), std::move(k_rest));
}

MacroProjection::MacroProjection(const VelocityGrid& grid) : grid_(&grid)
{
    const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
    basis_.resize(n, 5);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const Vec3& v = grid.node(i);
        double s = sqrt_maxwellian_sq(v.squaredNorm());
        basis_(i, 0) = s;
        basis_(i, 1) = v[0] * s;
        basis_(i, 2) = v[1] * s;
        basis_(i, 3) = v[2] * s;
        basis_(i, 4) = 0.5 * (v.squaredNorm() - 3.0) * s;
    }
    weighted_basis_ = grid.weights().asDiagonal() * basis_;
    Eigen::Matrix<double, 5, 5> gram = basis_.transpose() * weighted_basis_;
    gram_inv_ = gram.inverse();
}

Eigen::Matrix<double, 5, 1> MacroProjection::coefficients(const GridVector& f) const
{
    return gram_inv_ * (weighted_basis_.transpose() * f);
}

GridVector MacroProjection::project(const GridVector& f) const { return basis_ * coefficients(f); }

GridVector gamma(const CollisionOperator& op, const GridVector& f, const GridVector& g)
{
    const VelocityGrid& grid = op.grid();
    const std::size_t n = grid.size();
    const double varrho = op.params().varrho;
    const double a_b = angular_integral(op.params().b0);
    const AngularRule ang = make_angular_rule(op.params());
    const std::size_t n_omega = ang.weight.size();
    const StencilScatter interp{grid, 1.0 / grid.spacing(), grid.half_width(), grid.points_per_axis()};

    std::vector<double> hf(n), hg(n), mu(n), sqrt_mu(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        double v2 = grid.node(i).squaredNorm();
        mu[i] = maxwellian_sq(v2);
        sqrt_mu[i] = sqrt_maxwellian_sq(v2);
        hf[i] = f[i] / sqrt_mu[i];
        hg[i] = g[i] / sqrt_mu[i];
    }

    GridVector out(n);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t a = 0; a < n; ++a)
    {
        const Vec3 v = grid.node(a);
        double gain = 0.0;
        double loss = 0.0;
        // The singular node u = v contributes equal gain and loss and is omitted.
        for (std::size_t b = 0; b < n; ++b)
        {
            if (b == a)
                continue;
            const Vec3 u = grid.node(b);
            const Vec3 dv = u - v;
            const double r = dv.norm();
            const double base = grid.weight(b) * std::pow(r, varrho);
            loss += base * a_b * sqrt_mu[b] * f[b];
            const Vec3 e = dv / r;
            Vec3 e1, e2;
            frame(e, e1, e2);
            double acc = 0.0;
            for (std::size_t m = 0; m < n_omega; ++m)
            {
                const double c = ang.cos_theta[m];
                const double st = std::sqrt(1.0 - c * c);
                const Vec3 omega = c * e + st * (std::cos(ang.phi[m]) * e1 + std::sin(ang.phi[m]) * e2);
                const Vec3 shift = (r * c) * omega;
                acc += ang.weight[m] * interp.gather(u - shift, hf.data()) * interp.gather(v + shift, hg.data());
            }
            gain += base * mu[b] * acc;
        }
        out[a] = sqrt_mu[a] * gain - g[a] * loss;
    }
    return out;
}

double quadratic_form(const CollisionOperator& op, const GridVector& f)
{
    return op.grid().dot(op.apply_L(f), f);
}

double nu_norm(const CollisionOperator& op, const GridVector& f)
{
    return std::sqrt(op.grid().weights().dot(op.nu().cwiseProduct(f.cwiseAbs2())));
}

} // namespace kinlab
