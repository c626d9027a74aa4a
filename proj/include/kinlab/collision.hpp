#pragma once

#include "kinlab/velocity_grid.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace kinlab {

using Matrix = Eigen::MatrixXd;

//! Angular part b0 of the cutoff kernel |u - v|^varrho b0(theta).
enum class AngularKernel
{
    abs_cos //!< b0(theta) = |cos theta|
};

std::string to_string(AngularKernel kind);
AngularKernel angular_kernel_from_string(const std::string& name);

//! Integral of b0 over the unit sphere.
double angular_integral(AngularKernel kind);

//! Smooth cutoff: 0 for s <= eps, 1 for s >= 2 eps, cubic smoothstep between.
double cutoff_chi(double s, double eps);

//! Post-collision pair (u', v') for impact direction omega.
std::pair<Vec3, Vec3> post_collision(const Vec3& u, const Vec3& v, const Vec3& omega);

struct CollisionParams
{
    double varrho = -1.0;
    double eps_chi = 0.2;
    AngularKernel b0 = AngularKernel::abs_cos;
    //! Gauss-Legendre nodes in cos(theta) on the hemisphere about u - v.
    int n_theta = 6;
    //! Uniform azimuthal nodes.
    int n_phi = 12;

    int n_omega() const { return n_theta * n_phi; }
    void validate() const;
};

/*!
 * Collision frequency nu(|v|) = (int b0 domega) * int |w|^varrho mu(v + w) dw,
 * reduced to a one-dimensional integral in |w| after the angular integral of
 * the Gaussian is done in closed form.
 */
double collision_frequency_at(double speed, double varrho, AngularKernel b0);

//! nu at every node of the grid.
GridVector collision_frequency(const VelocityGrid& grid, double varrho, AngularKernel b0);

/*!
 * Cubic-spline table of nu(|v|) on [0, r_max] for cheap pointwise evaluation
 * off the grid (Monte Carlo weights). Beyond r_max the table continues with
 * the exact asymptote nu_inf * r^varrho matched at r_max.
 */
class FrequencyTable
{
  public:
    FrequencyTable(double varrho, AngularKernel b0, double r_max = 16.0, int n_points = 321);
    double operator()(double speed) const;

  private:
    double varrho_;
    double r_max_;
    double dr_;
    std::vector<double> value_;
    std::vector<double> second_;
};

/*!
 * Lattice defect D(p) = lim [int |w|^p G - sum over Z^3 \ {0} of |n|^p G] for
 * wide Gaussians G. On a lattice of spacing h the punctured trapezoid sum of
 * |w|^p g(w) plus D(p) h^(3+p) g(0) + D(p+2) h^(5+p) lap g(0) / 6 integrates
 * smooth g to fourth order beyond the singular term.
 */
double lattice_defect(double p);

struct AngularRule
{
    std::vector<double> cos_theta;
    std::vector<double> phi;
    //! Quadrature weight including b0 and the factor 2 for omega -> -omega.
    std::vector<double> weight;
};

AngularRule make_angular_rule(const CollisionParams& p);

/*!
 * Discrete linearized collision operator L = nu - K on a velocity grid.
 *
 * K is assembled row by row by quadrature over grid nodes u and impact
 * directions omega. Off-grid post-collision values are taken from the
 * Maxwellian-weighted triquadratic interpolant f(w) ~ sqrt(mu(w)) sum_j
 * L_j(w) f_j / sqrt(mu_j), which is exact on the collision invariants. The
 * integrable singularity at u = v is handled by the lattice correction weight
 * on the diagonal node and by an explicit local quadrature of the (1 - chi)
 * part inside the ball |u - v| < 2 eps. Both parts are symmetrized in the
 * quadrature inner product.
 */
class CollisionOperator
{
  public:
    CollisionOperator(VelocityGrid grid, CollisionParams params, GridVector nu, Matrix k_chi, Matrix k_rest);

    const VelocityGrid& grid() const { return grid_; }
    const CollisionParams& params() const { return params_; }
    const GridVector& nu() const { return nu_; }
    const Matrix& K() const { return k_; }
    const Matrix& K_chi() const { return k_chi_; }
    const Matrix& K_one_minus_chi() const { return k_rest_; }

    GridVector apply_K(const GridVector& f) const { return k_ * f; }
    //! nu f - K f.
    GridVector apply_L(const GridVector& f) const;

  private:
    VelocityGrid grid_;
    CollisionParams params_;
    GridVector nu_;
    Matrix k_chi_;
    Matrix k_rest_;
    Matrix k_;
};

CollisionOperator assemble_collision_operator(const VelocityGrid& grid, const CollisionParams& params);

//! The (1 - chi) part alone; cheap, since it only couples nodes through the local rule.
Matrix assemble_K_one_minus_chi(const VelocityGrid& grid, const CollisionParams& params);

/*!
 * Assembled operator from the binary cache if a matching entry exists,
 * otherwise assembled and written. The cache key covers every parameter that
 * changes the matrices.
 */
CollisionOperator load_or_assemble(const VelocityGrid& grid,
                                   const CollisionParams& params,
                                   const std::filesystem::path& cache_dir);

std::string cache_key(const VelocityGrid& grid, const CollisionParams& params);
void save_operator(const CollisionOperator& op, const std::filesystem::path& file);
CollisionOperator load_operator(const std::filesystem::path& file);

//! CSV dump of the nu vector followed by the selected rows of K, K^chi and K^(1-chi).
void write_operator_csv(const CollisionOperator& op, std::ostream& os, const std::vector<std::size_t>& rows);

/// Orthogonal projection onto the span of the collision invariants times sqrt(mu).
class MacroProjection
{
  public:
    explicit MacroProjection(const VelocityGrid& grid);

    //! Columns: sqrt(mu), v1 sqrt(mu), v2 sqrt(mu), v3 sqrt(mu), (|v|^2 - 3)/2 sqrt(mu).
    const Eigen::Matrix<double, Eigen::Dynamic, 5>& basis() const { return basis_; }
    const Eigen::Matrix<double, 5, 5>& gram_inverse() const { return gram_inv_; }

    //! Coefficients (a, b1, b2, b3, c) of P f in the basis.
    Eigen::Matrix<double, 5, 1> coefficients(const GridVector& f) const;
    GridVector project(const GridVector& f) const;

  private:
    const VelocityGrid* grid_;
    Eigen::Matrix<double, Eigen::Dynamic, 5> basis_;
    Eigen::Matrix<double, Eigen::Dynamic, 5> weighted_basis_;
    Eigen::Matrix<double, 5, 5> gram_inv_;
};

/*!
 * Nonlinear term Gamma(f, g) = Gamma_gain - Gamma_loss by the same (u, omega)
 * quadrature as K. Cost is O(N_v^6 n_omega); intended for coarse grids.
 */
GridVector gamma(const CollisionOperator& op, const GridVector& f, const GridVector& g);

//! Quadratic-form audit (L f, f) over the grid inner product.
double quadratic_form(const CollisionOperator& op, const GridVector& f);

//! Weighted nu-norm: sqrt(sum W nu f^2).
double nu_norm(const CollisionOperator& op, const GridVector& f);

} // namespace kinlab
