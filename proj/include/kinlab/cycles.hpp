#pragma once

#include "kinlab/collision.hpp"
#include "kinlab/geometry.hpp"
#include "kinlab/rng.hpp"
#include "kinlab/weights.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace kinlab {

inline constexpr double kTolGrazing = 1e-8;
inline constexpr int kBounceBudget = 10000;

enum class CycleKind
{
    diffuse,
    specular
};

enum class Termination
{
    reached_time_zero,
    bounce_budget,
    grazing_abort
};

std::string to_string(CycleKind kind);
std::string to_string(Termination reason);

struct CycleEntry
{
    double t;
    Vec3 x;
    Vec3 v;
};

/*!
 * Back-time cycle. entries[0] is the start (t, x, v); entries[k] for k >= 1
 * is the k-th boundary hit (t_k, x_k, v_k) with v_k the velocity leaving it
 * backwards in time. The last entry may have t_k <= 0.
 */
struct CycleTrace
{
    CycleKind kind = CycleKind::specular;
    std::vector<CycleEntry> entries;
    Termination terminated_by = Termination::reached_time_zero;

    const CycleEntry& start() const { return entries.front(); }
    std::size_t bounces() const { return entries.size() - 1; }

    //! Index k of the leg containing s, i.e. t_{k+1} <= s <= t_k.
    std::size_t leg_at(double s) const;
    //! X_cl(s) = x_k - (t_k - s) v_k on the bracketing leg.
    Vec3 position_at(double s) const;
    Vec3 velocity_at(double s) const;

    void write_csv(std::ostream& os) const;
};

/*!
 * Specular back-time cycle from (t, x, v). Stops once t_k <= 0, after
 * max_bounces reflections, or when alpha(x_k, v_k) drops below tol_grazing.
 * With throw_on_grazing the last case raises GrazingAbort instead.
 */
CycleTrace trace_specular_cycle(const Domain& d,
                                double t,
                                const Vec3& x,
                                const Vec3& v,
                                int max_bounces = kBounceBudget,
                                bool throw_on_grazing = true);

//! Draw from mu(v) (n.v) dv on {n.v > 0}: Rayleigh normal part, Gaussian tangential part.
Vec3 sample_outgoing_velocity(const Vec3& n, CounterRng& rng);

struct CycleMeasureSample
{
    //! Importance weight of each draw against d sigma_j (1 for the exact sampler).
    std::vector<double> weights;
    double cumulative_weight = 1.0;
};

/*!
 * Diffuse back-time cycle with at most k_max - 1 velocity draws, so that
 * entries run up to (t_{k_max}, x_{k_max}) unless time zero is reached first.
 * Velocity draws come from the stream owned by rng.
 */
std::pair<CycleTrace, CycleMeasureSample> sample_diffuse_cycle(const Domain& d,
                                                               CounterRng& rng,
                                                               double t,
                                                               const Vec3& x,
                                                               const Vec3& v,
                                                               int k_max);

struct Estimate
{
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
    //! Samples dropped because a trace hit the grazing set.
    std::size_t grazing = 0;
};

//! Fraction of diffuse cycles with t_k > 0, with its binomial standard error.
Estimate estimate_escape_probability(const Domain& d,
                                     double t,
                                     const Vec3& x,
                                     const Vec3& v,
                                     int k,
                                     std::size_t n_samples,
                                     std::uint64_t seed);

enum class CycleVariant
{
    between_bounces, //!< sum over l of 1{t_{l+1} > 0} int_{t_{l+1}}^{t_l}
    tail_to_zero     //!< sum over l of 1{t_{l+1} <= 0 < t_l} int_0^{t_l}
};

std::string to_string(CycleVariant v);
CycleVariant cycle_variant_from_string(const std::string& name);

//! int_a^b exp(nu (s - t_l)) ds in closed form.
double leg_integral(double nu, double a, double b, double t_l);

//! 1 / (w_{q,theta} sqrt(mu)).
double w_tilde(const WeightParams& p, const Vec3& v);

/*!
 * Monte Carlo estimate of the weighted iterated cycle integral over
 * d sigma_1 ... d sigma_{k-1} with the leg measure
 * exp(nu(v_l)(s - t_l)) wt(v_l) on the active leg and exp(nu(v_j)(t_{j+1} - t_j))
 * on the earlier legs. Time integrals are done in closed form.
 */
Estimate estimate_weighted_cycle_integral(const Domain& d,
                                          const FrequencyTable& nu,
                                          const std::function<double(const Vec3&)>& wt,
                                          double t,
                                          const Vec3& x,
                                          const Vec3& v,
                                          int k,
                                          std::size_t n_samples,
                                          CycleVariant variant,
                                          std::uint64_t seed);

/*!
 * |det dX'/dv'| for X' the specular position at time s1 of the cycle started
 * from (s, X_cl(s), v'), where X_cl is the cycle of (t, x, v). Central
 * differences with step h (default 1e-5 |v'|) over the active components,
 * Richardson-combined with step h/2; DegenerateStep if the two disagree or
 * the differences are lost in round-off.
 */
double specular_jacobian_probe(const Domain& d,
                               double t,
                               const Vec3& x,
                               const Vec3& v,
                               double s,
                               double s1,
                               const Vec3& v_prime,
                               double h = 0.0);

} // namespace kinlab
