#include "kinlab/weights.hpp"

#include "kinlab/errors.hpp"
#include "kinlab/velocity_grid.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace kinlab {

double maxwellian_sq(double speed2) { return std::exp(-0.5 * speed2) / (2.0 * M_PI); }

double maxwellian(const Vec3& v) { return maxwellian_sq(v.squaredNorm()); }

double sqrt_maxwellian_sq(double speed2) { return std::exp(-0.25 * speed2) / std::sqrt(2.0 * M_PI); }

std::vector<std::string> WeightParams::violations() const
{
    std::vector<std::string> out;
    if (!(varrho > -3.0 && varrho < 0.0))
        out.push_back("varrho = " + std::to_string(varrho) + " violates -3 < varrho < 0");
    if (!(theta > 0.0 && theta <= 2.0))
        out.push_back("theta = " + std::to_string(theta) + " violates 0 < theta <= 2");
    else if (theta < 2.0 && !(q > 0.0))
        out.push_back("(q,theta) not in A_{q,theta}: q > 0 required for 0 < theta < 2");
    else if (theta == 2.0 && !(q > 0.0 && q < 1.0))
        out.push_back("(q,theta) not in A_{q,theta}: 0 < q < 1 required for theta = 2");
    if (!(vartheta >= 0.0))
        out.push_back("vartheta = " + std::to_string(vartheta) + " violates vartheta >= 0");
    else if (varrho < 0.0 && theta > 0.0 && !(vartheta < -theta / varrho))
        out.push_back("vartheta = " + std::to_string(vartheta) + " violates vartheta < -theta/varrho = "
                      + std::to_string(-theta / varrho));
    return out;
}

void WeightParams::validate() const
{
    auto v = violations();
    if (v.empty())
        return;
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i)
        os << (i ? "; " : "") << v[i];
    throw InvalidParameter(os.str());
}

DecayExponents decay_exponents(const WeightParams& p)
{
    double denom = p.theta - p.varrho;
    return {p.theta / denom, (p.theta + p.vartheta * p.varrho) / denom};
}

double weight_stationary(double q, double theta, double speed)
{
    return std::exp(0.25 * q * std::pow(speed, theta));
}

double weight(const WeightParams& p, double t, const Vec3& v)
{
    double a = p.q * std::pow(v.norm(), p.theta) / 8.0;
    if (p.vartheta == 0.0)
        return std::exp(2.0 * a);
    return std::exp(a + a / std::pow(1.0 + t, p.vartheta));
}

double nu_tilde(const WeightParams& p, double nu_v, double t, const Vec3& v)
{
    return nu_v + p.vartheta * p.q * std::pow(v.norm(), p.theta) / (8.0 * std::pow(1.0 + t, p.vartheta + 1.0));
}

double nu_tilde_integral(const WeightParams& p, double nu_v, double s, double t, const Vec3& v)
{
    double a = p.q * std::pow(v.norm(), p.theta) / 8.0;
    double extra = (p.vartheta == 0.0) ? 0.0 : a * (std::pow(1.0 + s, -p.vartheta) - std::pow(1.0 + t, -p.vartheta));
    return nu_v * (t - s) + extra;
}

double lambda0_admissible_bound(const WeightParams& p, double c_varrho)
{
    double rho0 = decay_exponents(p).rho0;
    return std::pow(c_varrho * rho0, -rho0) * std::pow(p.q / (8.0 * (1.0 - rho0)), 1.0 - rho0);
}

EnvelopeReport young_envelope_check(const WeightParams& p,
                                    const VelocityGrid& grid,
                                    const Eigen::VectorXd& nu,
                                    double lambda0,
                                    const std::vector<double>& t_samples,
                                    bool throw_on_violation)
{
    EnvelopeReport rep{lambda0, decay_exponents(p).rho0, std::numeric_limits<double>::infinity(), 0, {}};
    const double half_q = 0.5 * p.q;
    for (double t : t_samples)
    {
        for (std::size_t i = 0; i < grid.size(); ++i)
        {
            double speed = grid.node(i).norm();
            // log rhs - log lhs
            double margin = -lambda0 * std::pow(t, rep.rho0) + nu[i] * t + 0.25 * half_q * std::pow(speed, p.theta);
            rep.samples.push_back({t, i, margin});
            if (margin < rep.worst_margin)
                rep.worst_margin = margin;
            if (margin < -1e-12)
            {
                ++rep.violations;
                if (throw_on_violation)
                {
                    std::ostringstream os;
                    os << "t = " << t << ", node " << i << ", margin " << margin;
                    throw EnvelopeViolated(os.str());
                }
            }
        }
    }
    return rep;
}

} // namespace kinlab
