#pragma once

#include "kinlab/collision.hpp"
#include "kinlab/weights.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <string>

namespace kinlab {

enum class BoundaryKind
{
    diffuse,
    specular
};

std::string to_string(BoundaryKind kind);
BoundaryKind boundary_kind_from_string(const std::string& name);

/*!
 * Perturbation f on the slab [-L, L] x velocity grid. Column i holds the
 * velocity values at the cell centre x_i = -L + (i + 1/2) dx.
 */
class DistributionField
{
  public:
    DistributionField(double half_width, int n_cells, const VelocityGrid& grid);

    double half_width() const { return half_width_; }
    int cells() const { return static_cast<int>(values_.cols()); }
    double dx() const { return 2.0 * half_width_ / cells(); }
    double x(int i) const { return -half_width_ + (i + 0.5) * dx(); }
    const VelocityGrid& grid() const { return *grid_; }

    Eigen::MatrixXd& values() { return values_; }
    const Eigen::MatrixXd& values() const { return values_; }
    double time = 0.0;

    //! Fill with g(x, v).
    void fill(const std::function<double(double, const Vec3&)>& g);

    void write_binary(std::ostream& os) const;
    static DistributionField read_binary(std::istream& is, const VelocityGrid& grid);

  private:
    double half_width_;
    const VelocityGrid* grid_;
    Eigen::MatrixXd values_;
};

/*!
 * Wall condition of the slab. For the diffuse kind, the flux normalizer
 * rescales the half-space quadrature so that the discrete flux of mu through
 * the wall is exactly 1.
 */
struct BoundaryCondition
{
    BoundaryKind kind = BoundaryKind::diffuse;
    double normalizer = 1.0;

    static BoundaryCondition make(BoundaryKind kind, const VelocityGrid& grid);
};

/*!
 * Diffuse reflection of a velocity slice at a wall with outward normal n:
 * incoming nodes (n.v < 0) get sqrt(mu(v)) times the normalized outgoing flux
 * of f sqrt(mu); outgoing nodes are copied.
 */
GridVector apply_P_gamma(const BoundaryCondition& bc, const VelocityGrid& grid, const GridVector& f, const Vec3& n);

enum class CollisionMode
{
    none,     //!< free transport only
    damping,  //!< exp(-nu dt) only (K = Gamma = 0)
    linear,   //!< nu - K
    nonlinear //!< nu - K plus Gamma(f, f)
};

std::string to_string(CollisionMode mode);
CollisionMode collision_mode_from_string(const std::string& name);

struct StepStats
{
    //! Discrete mass leaving / entering through the walls during the step, divided by dt.
    double flux_out = 0.0;
    double flux_in = 0.0;
    //! Largest |outflow - inflow| / dt over the two walls.
    double wall_imbalance = 0.0;
};

/*!
 * One time step f -> T[C(f)]. C is the collision update at every cell,
 *   C(f) = P f + (I - P) exp(-nu dt) (g + dt K g + dt Gamma(f, f)),  g = (I - P) f,
 * which keeps the local collision invariants exactly. T is semi-Lagrangian
 * transport with linear interpolation in x: specular walls through the
 * unfolded (mirror-extended) periodic line, diffuse walls through ghost cells
 * holding sqrt(mu(v)) c with c set so that the inflow of the step equals the
 * outflow of the step at the same wall.
 */
class SlabSolver
{
  public:
    SlabSolver(const CollisionOperator& op, BoundaryCondition bc, CollisionMode mode);

    StepStats step(DistributionField& f, double dt) const;

    /*!
     * After every step, subtract the x-uniform combination of the globally
     * conserved modes (mass for diffuse walls; mass, transverse momentum and
     * energy for specular walls) that carries the field's current value of
     * those invariants. Off by default.
     */
    void set_pin_conserved(bool on) { pin_ = on; }
    bool pin_conserved() const { return pin_; }

    const CollisionOperator& op() const { return *op_; }
    const BoundaryCondition& bc() const { return bc_; }
    CollisionMode mode() const { return mode_; }

  private:
    void collide(Eigen::MatrixXd& f, double dt) const;
    StepStats transport(Eigen::MatrixXd& f, double dx, double dt) const;
    void remove_conserved(Eigen::MatrixXd& f) const;

    const CollisionOperator* op_;
    BoundaryCondition bc_;
    CollisionMode mode_;
    MacroProjection mp_;
    GridVector sqrt_mu_;
    bool pin_ = false;
};

struct Diagnostics
{
    double t = 0.0;
    double l2 = 0.0;
    double lnu = 0.0;
    double winf = 0.0;
    double linf = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    double momentum2 = 0.0;
    double momentum3 = 0.0;
    double flux_in = 0.0;
    double flux_out = 0.0;
    double wall_imbalance = 0.0;
    double boundary_plus = 0.0;
    double boundary_minus = 0.0;
    double grazing_share = 0.0;
    double a_rms = 0.0;
    double b_rms = 0.0;
    double c_rms = 0.0;
};

/*!
 * Norms and moments of a field. The weighted sup-norm uses w_{q,theta,vartheta}
 * at the field time; grazing_share is the fraction of the outgoing boundary
 * norm carried by the near-grazing set with parameter grazing_eps.
 */
Diagnostics measure(const DistributionField& f,
                    const CollisionOperator& op,
                    const MacroProjection& mp,
                    const WeightParams& wp,
                    double grazing_eps);

void write_ndjson(std::ostream& os, const Diagnostics& d);

} // namespace kinlab
