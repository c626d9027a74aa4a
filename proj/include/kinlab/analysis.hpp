#pragma once

#include "kinlab/collision.hpp"
#include "kinlab/geometry.hpp"
#include "kinlab/solver.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace kinlab {

struct DecayFit
{
    double rho_hat = 0.0;
    double lambda_hat = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
    std::size_t samples = 0;
};

struct FitOptions
{
    //! Leading fraction of the samples dropped as transient.
    double skip_fraction = 0.2;
    //! Optional explicit window; ignored when t_hi <= t_lo.
    double t_lo = 0.0;
    double t_hi = 0.0;
    //! Coarse grid of rho values; refined once with step 0.01 around the best.
    std::vector<double> rho_grid;
    bool refine = true;
};

//! 0.05, 0.10, ..., 1.00.
std::vector<double> default_rho_grid();

/*!
 * Fit log(norm) = c - lambda t^rho by linear regression in t^rho for each rho
 * on the grid and keep the rho with the largest R^2.
 */
DecayFit fit_stretched_exponential(const std::vector<std::pair<double, double>>& series, const FitOptions& opt = {});

//! Same regression at a single fixed rho (rho = 1 gives the pure-exponential model).
DecayFit fit_fixed_rho(const std::vector<std::pair<double, double>>& series, double rho, const FitOptions& opt = {});

struct CoercivityReport
{
    double delta = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    //! The trajectory lies in the null space of L (no microscopic part).
    bool null_trajectory = false;
};

/*!
 * Ratio sum (L f, f) / sum ||f||_nu^2 over the snapshots of a slab trajectory,
 * each snapshot being velocity x cells.
 */
CoercivityReport coercivity_audit(const CollisionOperator& op,
                                  const MacroProjection& mp,
                                  const std::vector<Eigen::MatrixXd>& trajectory,
                                  double dx = 1.0);

/*!
 * Smallest (L f, f) / ||(I - P) f||_nu^2 over random microscopic vectors
 * f = (I - P)(xi exp(-|v|^2/8)), xi standard normal per node.
 */
double random_coercivity(const CollisionOperator& op, const MacroProjection& mp, int count, std::uint64_t seed);

struct ConservationSummary
{
    double mass_drift = 0.0;
    double energy_drift = 0.0;
    double momentum_drift = 0.0;
    bool mass_ok = true;
    bool energy_ok = true;
    bool momentum_ok = true;
    //! Largest per-step |outflow - inflow| at a wall.
    double max_wall_imbalance = 0.0;
};

/*!
 * Maximum drift of mass, energy and transverse momentum over a diagnostics
 * series, relative to the initial value when that exceeds 1e-12 times the
 * initial L2 norm and absolute otherwise. Energy is checked only when
 * check_energy is set.
 */
ConservationSummary conservation_report(const std::vector<Diagnostics>& series,
                                        double threshold = 1e-6,
                                        bool check_energy = true);

//! {(x, v) : 1/N <= |v| <= N, alpha(x, v) >= 1/N}.
struct AalphaSet
{
    double N = 10.0;
    bool contains(const Domain& d, const Vec3& x, const Vec3& v) const;
};

struct FrequencyBand
{
    double lo = 0.0;
    double hi = 0.0;
    double ratio() const { return hi / lo; }
};

//! Range of nu(v) / (1 + |v|^2)^(varrho/2) over the grid.
FrequencyBand frequency_band(const VelocityGrid& grid, const GridVector& nu, double varrho);

//! max_a sum_b |w_a K_ab / w_b| with w = w_{q,theta}.
double weighted_row_norm(const Matrix& k, const VelocityGrid& grid, double q, double theta);

/*!
 * The `count` smallest eigenvalues of L = nu - K, symmetrized in the grid
 * inner product, in ascending order. Five of them sit near zero on a good
 * grid; clearly negative values mean the discrete operator is not coercive.
 */
std::vector<double> lowest_eigenvalues(const CollisionOperator& op, int count);

//! Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace kinlab
