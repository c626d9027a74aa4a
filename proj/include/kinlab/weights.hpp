#pragma once

#include "kinlab/geometry.hpp"

#include <string>
#include <vector>

namespace kinlab {

class VelocityGrid;

//! Global Maxwellian (1/2pi) exp(-|v|^2/2); its outgoing flux through any plane is 1.
double maxwellian(const Vec3& v);
double maxwellian_sq(double speed2);
//! sqrt(mu) as a function of |v|^2.
double sqrt_maxwellian_sq(double speed2);

/// Parameters of the time-velocity weight exp{q|v|^theta/8 + q|v|^theta/(8(1+t)^vartheta)}.
struct WeightParams
{
    double q = 0.5;
    double theta = 2.0;
    double vartheta = 0.5;
    //! Soft-potential exponent of the collision kernel, in (-3, 0).
    double varrho = -1.0;

    //! Human-readable list of violated admissibility constraints; empty if valid.
    std::vector<std::string> violations() const;
    void validate() const;
};

struct DecayExponents
{
    double rho0;
    double rho1;
};

DecayExponents decay_exponents(const WeightParams& p);

//! w_{q,theta,vartheta}(t, v); at vartheta = 0 this is exp(q|v|^theta/4).
double weight(const WeightParams& p, double t, const Vec3& v);
//! Stationary weight w_{q,theta} = exp(q |v|^theta / 4).
double weight_stationary(double q, double theta, double speed);

//! nu + vartheta q |v|^theta / (8 (1+t)^(vartheta+1)).
double nu_tilde(const WeightParams& p, double nu_v, double t, const Vec3& v);

//! Closed form of int_s^t nu_tilde(v, tau) dtau.
double nu_tilde_integral(const WeightParams& p, double nu_v, double s, double t, const Vec3& v);

//! Upper end of the admissible range for lambda_0 given the fitted frequency constant.
double lambda0_admissible_bound(const WeightParams& p, double c_varrho);

struct EnvelopeSample
{
    double t;
    std::size_t node;
    double margin;
};

struct EnvelopeReport
{
    double lambda0;
    double rho0;
    double worst_margin;
    std::size_t violations;
    std::vector<EnvelopeSample> samples;
};

/*!
 * Check exp(-nu(v) t) / w_{q/2,theta}(v) <= exp(-lambda0 t^rho0) on every grid
 * node and sample time. The margin is log(rhs) - log(lhs); a margin below
 * -1e-12 is a violation. Throws EnvelopeViolated when any sample violates
 * unless `throw_on_violation` is false.
 */
EnvelopeReport young_envelope_check(const WeightParams& p,
                                    const VelocityGrid& grid,
                                    const Eigen::VectorXd& nu,
                                    double lambda0,
                                    const std::vector<double>& t_samples,
                                    bool throw_on_violation = true);

} // namespace kinlab
