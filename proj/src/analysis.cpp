#include "kinlab/analysis.hpp"

#include "kinlab/errors.hpp"
#include "kinlab/rng.hpp"
#include "kinlab/weights.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace kinlab {

std::vector<double> default_rho_grid()
{
    std::vector<double> g;
    for (int i = 1; i <= 20; ++i)
        g.push_back(0.05 * i);
    return g;
}

namespace {

std::vector<std::pair<double, double>> window(const std::vector<std::pair<double, double>>& series, const FitOptions& opt)
{
    if (series.size() < 10)
        throw InsufficientData("need at least 10 samples, got " + std::to_string(series.size()));
    for (const auto& [t, y] : series)
        if (!(y > 0.0))
            throw NonPositiveNorms("norm " + std::to_string(y) + " at t = " + std::to_string(t));
    std::vector<std::pair<double, double>> out;
    if (opt.t_hi > opt.t_lo)
    {
        for (const auto& s : series)
            if (s.first >= opt.t_lo && s.first <= opt.t_hi)
                out.push_back(s);
    }
    else
    {
        auto skip = static_cast<std::size_t>(std::floor(opt.skip_fraction * series.size()));
        out.assign(series.begin() + static_cast<std::ptrdiff_t>(skip), series.end());
    }
    if (out.size() < 3)
        throw InsufficientData("fewer than 3 samples inside the fit window");
    return out;
}

DecayFit regress(const std::vector<std::pair<double, double>>& pts, double rho)
{
    const double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0;
    for (const auto& [t, y] : pts)
    {
        sx += std::pow(t, rho);
        sy += std::log(y);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& [t, y] : pts)
    {
        double dx = std::pow(t, rho) - mx, dy = std::log(y) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    DecayFit fit;
    fit.rho_hat = rho;
    fit.samples = pts.size();
    fit.t_min = pts.front().first;
    fit.t_max = pts.back().first;
    if (sxx <= 0.0)
        return fit;
    const double slope = sxy / sxx;
    fit.lambda_hat = -slope;
    fit.intercept = my - slope * mx;
    fit.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return fit;
}

} // namespace

DecayFit fit_fixed_rho(const std::vector<std::pair<double, double>>& series, double rho, const FitOptions& opt)
{
    return regress(window(series, opt), rho);
}

DecayFit fit_stretched_exponential(const std::vector<std::pair<double, double>>& series, const FitOptions& opt)
{
    const auto pts = window(series, opt);
    const std::vector<double> grid = opt.rho_grid.empty() ? default_rho_grid() : opt.rho_grid;
    DecayFit best;
    best.r2 = -1.0;
    for (double rho : grid)
    {
        DecayFit f = regress(pts, rho);
        if (f.r2 > best.r2)
            best = f;
    }
    if (opt.refine)
    {
        const double centre = best.rho_hat;
        for (int k = -4; k <= 4; ++k)
        {
            double rho = std::round((centre + 0.01 * k) * 100.0) / 100.0;
            if (rho <= 0.0 || rho > 1.0)
                continue;
            DecayFit f = regress(pts, rho);
            if (f.r2 > best.r2)
                best = f;
        }
    }
    return best;
}

CoercivityReport coercivity_audit(const CollisionOperator& op,
                                  const MacroProjection& mp,
                                  const std::vector<Eigen::MatrixXd>& trajectory,
                                  double dx)
{
    CoercivityReport rep;
    const GridVector& w = op.grid().weights();
    double micro = 0.0, total = 0.0;
    for (const auto& snap : trajectory)
        for (Eigen::Index i = 0; i < snap.cols(); ++i)
        {
            GridVector f = snap.col(i);
            GridVector lf = op.apply_L(f);
            rep.numerator += dx * w.dot(lf.cwiseProduct(f));
            rep.denominator += dx * w.dot(op.nu().cwiseProduct(f.cwiseAbs2()));
            GridVector m = f - mp.project(f);
            micro += w.dot(m.cwiseAbs2());
            total += w.dot(f.cwiseAbs2());
        }
    if (!(rep.denominator > 0.0))
        throw ZeroDenominator("trajectory is identically zero");
    if (micro <= 1e-24 * total)
    {
        rep.null_trajectory = true;
        rep.delta = 0.0;
        return rep;
    }
    rep.delta = rep.numerator / rep.denominator;
    return rep;
}

double random_coercivity(const CollisionOperator& op, const MacroProjection& mp, int count, std::uint64_t seed)
{
    const auto& grid = op.grid();
    const GridVector& w = grid.weights();
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 0; s < count; ++s)
    {
        CounterRng rng(seed, static_cast<std::uint64_t>(s));
        GridVector f(grid.size());
        for (std::size_t a = 0; a < grid.size(); ++a)
            f[a] = rng.normal() * std::exp(-grid.node(a).squaredNorm() / 8.0);
        f -= mp.project(f);
        double num = w.dot(op.apply_L(f).cwiseProduct(f));
        double den = w.dot(op.nu().cwiseProduct(f.cwiseAbs2()));
        worst = std::min(worst, num / den);
    }
    return worst;
}

ConservationSummary conservation_report(const std::vector<Diagnostics>& series, double threshold, bool check_energy)
{
    ConservationSummary s;
    if (series.empty())
        return s;
    const Diagnostics& d0 = series.front();
    // References at roundoff level relative to the field are treated as zero.
    const double floor = 1e-12 * d0.l2;
    auto drift = [&](auto get) {
        double ref = std::abs(get(d0));
        double worst = 0.0;
        for (const auto& d : series)
            worst = std::max(worst, std::abs(get(d) - get(d0)));
        return ref > floor && ref > 0.0 ? worst / ref : worst;
    };
    s.mass_drift = drift([](const Diagnostics& d) { return d.mass; });
    s.energy_drift = drift([](const Diagnostics& d) { return d.energy; });
    // Transverse momentum drifts measured against the mass scale.
    double scale = std::max({std::abs(d0.mass), std::abs(d0.energy), 1e-300});
    double worst = 0.0;
    for (const auto& d : series)
    {
        worst = std::max(worst, std::abs(d.momentum2 - d0.momentum2));
        worst = std::max(worst, std::abs(d.momentum3 - d0.momentum3));
        s.max_wall_imbalance = std::max(s.max_wall_imbalance, d.wall_imbalance);
    }
    s.momentum_drift = (scale > floor && scale > 1e-300) ? worst / scale : worst;
    s.mass_ok = s.mass_drift <= threshold;
    s.energy_ok = !check_energy || s.energy_drift <= threshold;
    s.momentum_ok = s.momentum_drift <= threshold;
    return s;
}

bool AalphaSet::contains(const Domain& d, const Vec3& x, const Vec3& v) const
{
    double speed = v.norm();
    return speed >= 1.0 / N && speed <= N && kinetic_distance(d, x, v) >= 1.0 / N;
}

FrequencyBand frequency_band(const VelocityGrid& grid, const GridVector& nu, double varrho)
{
    FrequencyBand band{std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t a = 0; a < grid.size(); ++a)
    {
        double r = nu[a] / std::pow(1.0 + grid.node(a).squaredNorm(), 0.5 * varrho);
        band.lo = std::min(band.lo, r);
        band.hi = std::max(band.hi, r);
    }
    return band;
}

double weighted_row_norm(const Matrix& k, const VelocityGrid& grid, double q, double theta)
{
    const GridVector w = grid.sample([&](const Vec3& v) { return weight_stationary(q, theta, v.norm()); });
    double worst = 0.0;
    for (Eigen::Index a = 0; a < k.rows(); ++a)
    {
        double row = 0.0;
        for (Eigen::Index b = 0; b < k.cols(); ++b)
            row += std::abs(k(a, b)) * w[a] / w[b];
        worst = std::max(worst, row);
    }
    return worst;
}

std::vector<double> lowest_eigenvalues(const CollisionOperator& op, int count)
{
    const Eigen::VectorXd s = op.grid().weights().cwiseSqrt();
    Matrix l = -op.K();
    l.diagonal() += op.nu();
    Matrix sym = s.asDiagonal() * l * s.cwiseInverse().asDiagonal();
    sym = 0.5 * (sym + sym.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    const auto n = std::min<Eigen::Index>(std::max(count, 0), es.eigenvalues().size());
    return {es.eigenvalues().data(), es.eigenvalues().data() + n};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace kinlab
