#include "kinlab/cycles.hpp"

#include "kinlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace kinlab {

std::string to_string(CycleKind kind) { return kind == CycleKind::diffuse ? "diffuse" : "specular"; }

std::string to_string(Termination reason)
{
    switch (reason)
    {
        case Termination::reached_time_zero: return "reached_time_zero";
        case Termination::bounce_budget: return "bounce_budget";
        case Termination::grazing_abort: return "grazing_abort";
    }
    return "unknown";
}

std::string to_string(CycleVariant v) { return v == CycleVariant::between_bounces ? "between_bounces" : "tail_to_zero"; }

CycleVariant cycle_variant_from_string(const std::string& name)
{
    if (name == "between_bounces")
        return CycleVariant::between_bounces;
    if (name == "tail_to_zero")
        return CycleVariant::tail_to_zero;
    throw InvalidParameter("unknown cycle variant '" + name + "'");
}

std::size_t CycleTrace::leg_at(double s) const
{
    for (std::size_t k = 0; k + 1 < entries.size(); ++k)
        if (s >= entries[k + 1].t)
            return k;
    return entries.size() - 1;
}

Vec3 CycleTrace::position_at(double s) const
{
    const CycleEntry& e = entries[leg_at(s)];
    return e.x - (e.t - s) * e.v;
}

Vec3 CycleTrace::velocity_at(double s) const { return entries[leg_at(s)].v; }

void CycleTrace::write_csv(std::ostream& os) const
{
    os << "# kind=" << to_string(kind) << " terminated_by=" << to_string(terminated_by) << '\n';
    os << "k,t,x1,x2,x3,v1,v2,v3\n";
    os << std::setprecision(17);
    for (std::size_t k = 0; k < entries.size(); ++k)
    {
        const auto& e = entries[k];
        os << k << ',' << e.t << ',' << e.x[0] << ',' << e.x[1] << ',' << e.x[2] << ',' << e.v[0] << ',' << e.v[1]
           << ',' << e.v[2] << '\n';
    }
}

namespace {

bool grazing(const Domain& d, const Vec3& x, const Vec3& v)
{
    return kinetic_distance(d, x, v) < kTolGrazing;
}

std::string phase_point(const Vec3& x, const Vec3& v)
{
    std::ostringstream os;
    os << "x = (" << x[0] << ", " << x[1] << ", " << x[2] << "), v = (" << v[0] << ", " << v[1] << ", " << v[2]
       << ")";
    return os.str();
}

} // namespace

CycleTrace trace_specular_cycle(const Domain& d,
                                double t,
                                const Vec3& x,
                                const Vec3& v,
                                int max_bounces,
                                bool throw_on_grazing)
{
    CycleTrace trace;
    trace.kind = CycleKind::specular;
    trace.entries.push_back({t, x, v});
    while (true)
    {
        const CycleEntry cur = trace.entries.back();
        if (grazing(d, cur.x, cur.v))
        {
            if (throw_on_grazing)
                throw GrazingAbort("alpha below tolerance at " + phase_point(cur.x, cur.v));
            trace.terminated_by = Termination::grazing_abort;
            return trace;
        }
        ExitPoint exit = backward_exit_time(d, cur.x, cur.v);
        if (!exit.finite)
        {
            trace.terminated_by = Termination::reached_time_zero;
            return trace;
        }
        double t_next = cur.t - exit.t_b;
        trace.entries.push_back({t_next, exit.x_b, specular_reflect(d, exit.x_b, cur.v)});
        if (t_next <= 0.0)
        {
            trace.terminated_by = Termination::reached_time_zero;
            return trace;
        }
        if (static_cast<int>(trace.bounces()) >= max_bounces)
        {
            trace.terminated_by = Termination::bounce_budget;
            return trace;
        }
    }
}

Vec3 sample_outgoing_velocity(const Vec3& n, CounterRng& rng)
{
    Vec3 helper = (std::abs(n[0]) < 0.9) ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    Vec3 t1 = n.cross(helper).normalized();
    Vec3 t2 = n.cross(t1);
    double vn = rng.rayleigh();
    double a = rng.normal();
    double b = rng.normal();
    return vn * n + a * t1 + b * t2;
}

std::pair<CycleTrace, CycleMeasureSample> sample_diffuse_cycle(const Domain& d,
                                                               CounterRng& rng,
                                                               double t,
                                                               const Vec3& x,
                                                               const Vec3& v,
                                                               int k_max)
{
    if (k_max < 1)
        throw InvalidParameter("k_max must be at least 1");
    CycleTrace trace;
    CycleMeasureSample measure;
    trace.kind = CycleKind::diffuse;
    trace.entries.push_back({t, x, v});
    while (true)
    {
        const CycleEntry cur = trace.entries.back();
        if (grazing(d, cur.x, cur.v))
        {
            trace.terminated_by = Termination::grazing_abort;
            break;
        }
        ExitPoint exit = backward_exit_time(d, cur.x, cur.v);
        if (!exit.finite)
        {
            trace.terminated_by = Termination::reached_time_zero;
            break;
        }
        double t_next = cur.t - exit.t_b;
        const bool last = t_next <= 0.0 || static_cast<int>(trace.bounces()) + 1 >= k_max;
        Vec3 v_next = Vec3::Zero();
        if (!last)
        {
            v_next = sample_outgoing_velocity(outward_normal(d, exit.x_b), rng);
            measure.weights.push_back(1.0);
        }
        trace.entries.push_back({t_next, exit.x_b, v_next});
        if (last)
        {
            trace.terminated_by = t_next <= 0.0 ? Termination::reached_time_zero : Termination::bounce_budget;
            break;
        }
    }
    return {std::move(trace), std::move(measure)};
}

namespace {

// Per-sample values reduced in index order, so the result does not depend on
// the thread schedule.
Estimate reduce(const std::vector<double>& value, const std::vector<char>& valid)
{
    Estimate est;
    double sum = 0.0;
    for (std::size_t i = 0; i < value.size(); ++i)
        if (valid[i])
        {
            sum += value[i];
            ++est.n;
        }
        else
            ++est.grazing;
    if (est.n == 0)
        return est;
    est.value = sum / est.n;
    double ss = 0.0;
    for (std::size_t i = 0; i < value.size(); ++i)
        if (valid[i])
            ss += (value[i] - est.value) * (value[i] - est.value);
    est.stderr_ = est.n > 1 ? std::sqrt(ss / (est.n - 1) / est.n) : 0.0;
    return est;
}

} // namespace

Estimate estimate_escape_probability(const Domain& d,
                                     double t,
                                     const Vec3& x,
                                     const Vec3& v,
                                     int k,
                                     std::size_t n_samples,
                                     std::uint64_t seed)
{
    if (n_samples < 1000)
        throw InvalidParameter("escape probability needs at least 1000 samples");
    std::vector<double> value(n_samples, 0.0);
    std::vector<char> valid(n_samples, 1);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n_samples; ++i)
    {
        CounterRng rng(seed, i);
        auto [trace, measure] = sample_diffuse_cycle(d, rng, t, x, v, k);
        if (trace.terminated_by == Termination::grazing_abort)
        {
            valid[i] = 0;
            continue;
        }
        value[i] = (static_cast<int>(trace.bounces()) >= k && trace.entries[k].t > 0.0) ? 1.0 : 0.0;
    }
    Estimate est = reduce(value, valid);
    // Binomial form of the standard error.
    if (est.n > 0)
        est.stderr_ = std::sqrt(est.value * (1.0 - est.value) / est.n);
    return est;
}

double leg_integral(double nu, double a, double b, double t_l)
{
    return std::exp(nu * (a - t_l)) * std::expm1(nu * (b - a)) / nu;
}

double w_tilde(const WeightParams& p, const Vec3& v)
{
    double v2 = v.squaredNorm();
    return std::exp(-0.25 * p.q * std::pow(v2, 0.5 * p.theta) + 0.25 * v2) * std::sqrt(2.0 * M_PI);
}

Estimate estimate_weighted_cycle_integral(const Domain& d,
                                          const FrequencyTable& nu,
                                          const std::function<double(const Vec3&)>& wt,
                                          double t,
                                          const Vec3& x,
                                          const Vec3& v,
                                          int k,
                                          std::size_t n_samples,
                                          CycleVariant variant,
                                          std::uint64_t seed)
{
    if (n_samples < 1)
        throw InvalidParameter("need at least one sample");
    std::vector<double> value(n_samples, 0.0);
    std::vector<char> valid(n_samples, 1);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n_samples; ++i)
    {
        CounterRng rng(seed, i);
        auto [trace, measure] = sample_diffuse_cycle(d, rng, t, x, v, k);
        if (trace.terminated_by == Termination::grazing_abort)
        {
            valid[i] = 0;
            continue;
        }
        const auto& e = trace.entries;
        double prior = 1.0; // prod over j < l of exp(nu(v_j)(t_{j+1} - t_j))
        double acc = 0.0;
        for (std::size_t l = 1; l + 1 < e.size() && static_cast<int>(l) <= k - 1; ++l)
        {
            const double t_l = e[l].t;
            const double t_next = e[l + 1].t;
            if (t_l <= 0.0)
                break;
            const double nu_l = nu(e[l].v.norm());
            if (variant == CycleVariant::between_bounces && t_next > 0.0)
                acc += prior * wt(e[l].v) * leg_integral(nu_l, t_next, t_l, t_l);
            else if (variant == CycleVariant::tail_to_zero && t_next <= 0.0)
                acc += prior * wt(e[l].v) * leg_integral(nu_l, 0.0, t_l, t_l);
            prior *= std::exp(nu_l * (t_next - t_l));
        }
        value[i] = acc;
    }
    return reduce(value, valid);
}

double specular_jacobian_probe(const Domain& d,
                               double t,
                               const Vec3& x,
                               const Vec3& v,
                               double s,
                               double s1,
                               const Vec3& v_prime,
                               double h)
{
    if (!(s1 < s && s <= t))
        throw InvalidParameter("jacobian probe needs s1 < s <= t");
    const Vec3 xs = trace_specular_cycle(d, t, x, v).position_at(s);
    const double span = s - s1;
    auto endpoint = [&](const Vec3& w) { return trace_specular_cycle(d, span, xs, w).position_at(0.0); };

    const int dim = d.dim();
    if (h <= 0.0)
        h = 1e-5 * v_prime.norm();
    if (!(h > 0.0))
        throw DegenerateStep("zero finite-difference step");

    auto derivative = [&](double step) {
        Eigen::MatrixXd jac(dim, dim);
        for (int j = 0; j < dim; ++j)
        {
            Vec3 dv = Vec3::Zero();
            dv[j] = step;
            Vec3 diff = endpoint(v_prime + dv) - endpoint(v_prime - dv);
            for (int i = 0; i < dim; ++i)
                jac(i, j) = diff[i] / (2.0 * step);
        }
        return jac;
    };
    Eigen::MatrixXd coarse = derivative(h);
    Eigen::MatrixXd fine = derivative(0.5 * h);

    const double scale = xs.norm() + span * v_prime.norm() + 1.0;
    const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * scale / h;
    if (fine.cwiseAbs().maxCoeff() < roundoff)
        throw DegenerateStep("finite differences below round-off");
    const double ref = std::max(fine.cwiseAbs().maxCoeff(), span);
    if ((fine - coarse).cwiseAbs().maxCoeff() > 1e-6 * ref + roundoff)
        throw DegenerateStep("Richardson check failed; the step crosses a change of bounce sequence");
    Eigen::MatrixXd jac = (4.0 * fine - coarse) / 3.0;
    return std::abs(jac.determinant());
}

} // namespace kinlab
