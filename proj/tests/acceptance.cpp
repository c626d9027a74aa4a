// Acceptance checks. Prints one PASS/FAIL line per criterion; the exit code is
// the number of failed criteria.

#include "kinlab/analysis.hpp"
#include "kinlab/collision.hpp"
#include "kinlab/config.hpp"
#include "kinlab/cycles.hpp"
#include "kinlab/errors.hpp"
#include "kinlab/solver.hpp"
#include "kinlab/weights.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

using namespace kinlab;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string cache_dir = ".kinlab_cache";
std::string tool_path;

std::string fmt(double x, int prec = 4)
{
    std::ostringstream os;
    os << std::setprecision(prec) << x;
    return os.str();
}

const CollisionOperator& default_operator()
{
    static const CollisionOperator op = load_or_assemble(VelocityGrid(6.0, 16), CollisionParams{}, cache_dir);
    return op;
}

GridVector sqrt_mu(const VelocityGrid& g)
{
    return g.sample([](const Vec3& v) { return sqrt_maxwellian_sq(v.squaredNorm()); });
}

// micro_gaussian profile plus a macroscopic part carrying mass and energy.
DistributionField loaded_field(const ScenarioConfig& cfg, const VelocityGrid& g)
{
    DistributionField f = make_initial_field(cfg, g);
    const GridVector s = sqrt_mu(g);
    const GridVector e = g.sample([](const Vec3& v) { return v.squaredNorm() * sqrt_maxwellian_sq(v.squaredNorm()); });
    for (int i = 0; i < f.cells(); ++i)
        f.values().col(i) += 0.2 * s + 0.05 * (1.0 + 0.5 * std::cos(M_PI * f.x(i) / f.half_width())) * e;
    return f;
}

Outcome flux_normalization()
{
    const Vec3 n(1, 0, 0);
    auto mu = [](const Vec3& v) { return maxwellian(v); };
    const double f16 = VelocityGrid(6.0, 16).half_space_flux(n, mu);
    const double f32 = VelocityGrid(6.0, 32).half_space_flux(n, mu);
    Outcome o;
    o.pass = std::abs(f16 - 1.0) <= 1e-4 && std::abs(f32 - 1.0) <= 1e-6;
    o.detail = "|flux-1| = " + fmt(std::abs(f16 - 1.0)) + " (N=16, tol 1e-4), " + fmt(std::abs(f32 - 1.0)) +
               " (N=32, tol 1e-6)";
    return o;
}

Outcome frequency_sandwich()
{
    const VelocityGrid g(6.0, 16);
    const GridVector nu = collision_frequency(g, -1.0, AngularKernel::abs_cos);
    const FrequencyBand band = frequency_band(g, nu, -1.0);
    const double nu0 = collision_frequency_at(0.0, -1.0, AngularKernel::abs_cos);
    const double rel = std::abs(nu0 / (4.0 * M_PI) - 1.0);
    Outcome o;
    o.pass = band.ratio() <= 10.0 && rel <= 5e-3;
    o.detail = "band [" + fmt(band.lo) + ", " + fmt(band.hi) + "] ratio " + fmt(band.ratio()) +
               " (tol 10); nu(0)/4pi - 1 = " + fmt(rel) + " (tol 5e-3)";
    return o;
}

Outcome null_space_coercivity()
{
    const CollisionOperator& op = default_operator();
    const auto& g = op.grid();
    MacroProjection mp(g);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k)
    {
        GridVector b = mp.basis().col(k);
        worst = std::max(worst, g.norm(op.apply_L(b)) / g.norm(b));
    }
    const double delta = random_coercivity(op, mp, 100, 2024);
    Outcome o;
    o.pass = worst <= 1e-2 && delta > 0.0;
    o.detail = "max |Lb|/|b| = " + fmt(worst) + " (tol 1e-2); min delta over 100 vectors = " + fmt(delta);
    return o;
}

Outcome k_rest_scaling()
{
    const VelocityGrid g(6.0, 16);
    const WeightParams wp;
    std::vector<double> eps{0.1, 0.2, 0.4}, norms;
    for (double e : eps)
    {
        CollisionParams p;
        p.eps_chi = e;
        norms.push_back(weighted_row_norm(assemble_K_one_minus_chi(g, p), g, wp.q, wp.theta));
    }
    const double slope = loglog_slope(eps, norms);
    Outcome o;
    o.pass = std::abs(slope - 2.0) <= 0.3;
    o.detail = "norms " + fmt(norms[0]) + ", " + fmt(norms[1]) + ", " + fmt(norms[2]) + "; slope " + fmt(slope) +
               " (target 2 +- 0.3)";
    return o;
}

struct RunResult
{
    std::vector<Diagnostics> series;
    double max_imbalance = 0.0;
};

RunResult run(const ScenarioConfig& cfg, const CollisionOperator& op, const DistributionField& init)
{
    SlabSolver solver(op, BoundaryCondition::make(cfg.bc, op.grid()), cfg.collision.mode);
    solver.set_pin_conserved(cfg.time.pin_conserved);
    MacroProjection mp(op.grid());
    DistributionField f = init;
    RunResult r;
    r.series.push_back(measure(f, op, mp, cfg.weights.params, cfg.output.grazing_eps));
    for (int s = 1; s <= cfg.time.n_steps; ++s)
    {
        StepStats st = solver.step(f, cfg.time.dt);
        r.max_imbalance = std::max(r.max_imbalance, st.wall_imbalance);
        if (s % cfg.time.sample_every == 0)
            r.series.push_back(measure(f, op, mp, cfg.weights.params, cfg.output.grazing_eps));
    }
    return r;
}

Outcome conservation()
{
    const CollisionOperator& op = default_operator();
    ScenarioConfig cfg;
    cfg.grid.n_x = 32;
    cfg.time.dt = 1e-2;
    cfg.time.n_steps = 1000;
    cfg.time.sample_every = 10;

    cfg.bc = BoundaryKind::specular;
    RunResult specular = run(cfg, op, loaded_field(cfg, op.grid()));
    ConservationSummary s = conservation_report(specular.series, 1e-6, true);

    cfg.bc = BoundaryKind::diffuse;
    RunResult diff = run(cfg, op, loaded_field(cfg, op.grid()));
    ConservationSummary d = conservation_report(diff.series, 1e-6, false);

    Outcome o;
    o.pass = s.mass_ok && s.energy_ok && d.mass_ok && diff.max_imbalance <= 1e-8;
    o.detail = "specular mass " + fmt(s.mass_drift) + " energy " + fmt(s.energy_drift) + "; diffuse mass " +
               fmt(d.mass_drift) + " wall imbalance " + fmt(diff.max_imbalance) + " (tols 1e-6, 1e-8)";
    return o;
}

std::vector<std::pair<double, double>> norm_series(const std::vector<Diagnostics>& s, bool weighted)
{
    std::vector<std::pair<double, double>> out;
    for (const auto& d : s)
        out.emplace_back(d.t, weighted ? d.winf : d.l2);
    return out;
}

Outcome decay_exponents()
{
    const CollisionOperator& op = default_operator();
    ScenarioConfig cfg;
    cfg.grid.n_x = 32;
    cfg.time.dt = 0.05;
    cfg.time.n_steps = 1000;
    cfg.time.pin_conserved = true;
    FitOptions window;
    window.t_lo = 5.0;
    window.t_hi = 50.0;

    cfg.bc = BoundaryKind::diffuse;
    cfg.weights.params.vartheta = 0.0;
    RunResult diff = run(cfg, op, make_initial_field(cfg, op.grid()));
    const auto ds = norm_series(diff.series, false);
    const DecayFit dfit = fit_stretched_exponential(ds, window);
    const DecayFit dexp = fit_fixed_rho(ds, 1.0, window);

    cfg.bc = BoundaryKind::specular;
    cfg.weights.params.vartheta = 0.5;
    RunResult specular = run(cfg, op, make_initial_field(cfg, op.grid()));
    const DecayFit sfit = fit_stretched_exponential(norm_series(specular.series, true), window);

    const bool diffuse_ok = dfit.rho_hat >= 0.45 && dfit.rho_hat <= 0.9 && dfit.r2 - dexp.r2 >= 0.01;
    const bool specular_ok = sfit.rho_hat >= 0.35 && sfit.rho_hat <= 0.7;
    Outcome o;
    o.pass = diffuse_ok && specular_ok;
    o.detail = "diffuse rho_hat " + fmt(dfit.rho_hat) + " R2 " + fmt(dfit.r2, 7) + " vs exponential " +
               fmt(dexp.r2, 7) + " (band [0.45, 0.9], gain >= 0.01); specular weighted rho_hat " + fmt(sfit.rho_hat) +
               " R2 " + fmt(sfit.r2, 7) + " (band [0.35, 0.7])";
    return o;
}

Outcome young_envelope()
{
    const VelocityGrid g(6.0, 16);
    const WeightParams wp;
    const GridVector nu = collision_frequency(g, wp.varrho, AngularKernel::abs_cos);
    const FrequencyBand band = frequency_band(g, nu, wp.varrho);
    const double l0 = 0.5 * lambda0_admissible_bound(wp, 1.0 / band.lo);
    const EnvelopeReport rep = young_envelope_check(wp, g, nu, l0, {0.1, 1.0, 10.0, 100.0}, false);
    Outcome o;
    o.pass = rep.violations == 0;
    o.detail = "lambda0 " + fmt(l0) + ", violations " + std::to_string(rep.violations) + ", worst margin " +
               fmt(rep.worst_margin);
    return o;
}

Outcome cycle_decay()
{
    const Domain ball = Domain::ball(1.0);
    const FrequencyTable nu(-1.0, AngularKernel::abs_cos);
    const WeightParams wp;
    auto wt = [&](const Vec3& v) { return w_tilde(wp, v); };
    const std::vector<int> ks{4, 8, 16, 32};
    std::vector<Estimate> esc, wgt;
    for (int k : ks)
    {
        esc.push_back(estimate_escape_probability(ball, 10.0, Vec3::Zero(), Vec3(1, 0, 0), k, 100000, 8));
        wgt.push_back(estimate_weighted_cycle_integral(ball, nu, wt, 10.0, Vec3::Zero(), Vec3(1, 0, 0), k, 100000,
                                                       CycleVariant::between_bounces, 8));
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < ks.size(); ++i)
        decreasing = decreasing &&
                     esc[i - 1].value - esc[i].value > 2.0 * std::hypot(esc[i - 1].stderr_, esc[i].stderr_);
    const bool halved = esc[3].value <= 0.5 * esc[1].value;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& e : wgt)
    {
        lo = std::min(lo, e.value);
        hi = std::max(hi, e.value);
    }
    const bool bounded = lo > 0.0 && hi / lo <= 3.0;
    Outcome o;
    o.pass = decreasing && halved && bounded;
    std::string p, w;
    for (std::size_t i = 0; i < ks.size(); ++i)
    {
        p += (i ? ", " : "") + fmt(esc[i].value);
        w += (i ? ", " : "") + fmt(wgt[i].value);
    }
    o.detail = "escape (k=4,8,16,32) " + p + "; weighted " + w + " (max/min " + fmt(hi / lo) + ", tol 3)";
    return o;
}

Outcome specular_oracle()
{
    const Domain slab = Domain::slab(0.5);
    const double v1 = 1.7, x0 = 0.13, t = 1e3;
    double err = 0.0;
    CycleTrace tr = trace_specular_cycle(slab, t, Vec3(x0, 0, 0), Vec3(v1, 0.4, -0.3), 50);
    for (std::size_t k = 1; k <= 50 && k < tr.entries.size(); ++k)
        err = std::max(err, std::abs(tr.entries[k].t - (t - (x0 + 0.5) / v1 - (k - 1) / v1)));
    const bool slab_ok = tr.bounces() == 50 && err <= 1e-10;

    const Domain ball = Domain::ball(1.0);
    CycleTrace bt = trace_specular_cycle(ball, 200.0, Vec3(0.3, 0, 0), Vec3(2, 0, 0), 50);
    double berr = 0.0;
    for (std::size_t k = 1; k <= 50 && k < bt.entries.size(); ++k)
    {
        const double sign = (k % 2) ? -1.0 : 1.0;
        berr = std::max(berr, (bt.entries[k].x - Vec3(sign, 0, 0)).norm());
        berr = std::max(berr, std::abs(bt.entries[k].t - (200.0 - 0.65 - (k - 1.0))));
    }
    const bool ball_ok = bt.bounces() == 50 && berr <= 1e-10;

    // Free transport of a pulse, no collisions, specular walls.
    const VelocityGrid g(6.0, 12);
    const auto n = static_cast<Eigen::Index>(g.size());
    const CollisionOperator free_op(g, CollisionParams{}, GridVector::Zero(g.size()),
                                    Matrix::Zero(n, n), Matrix::Zero(n, n));
    SlabSolver solver(free_op, BoundaryCondition::make(BoundaryKind::specular, g), CollisionMode::none);
    auto pulse = [](double x) { return std::exp(-std::pow((x - 0.1) / 0.08, 2)); };
    auto exact = [&](double x, const Vec3& v) {
        double y = std::fmod(x - v[0] * 0.2 + 0.5, 2.0);
        if (y < 0.0)
            y += 2.0;
        y -= 0.5;
        if (y > 0.5)
            y = 1.0 - y;
        return pulse(y) * std::exp(-0.25 * v.squaredNorm());
    };
    std::vector<double> errors;
    for (int nx : {64, 128, 256})
    {
        DistributionField f(0.5, nx, g);
        f.fill([&](double x, const Vec3& v) { return pulse(x) * std::exp(-0.25 * v.squaredNorm()); });
        const int steps = nx / 16;
        for (int s = 0; s < steps; ++s)
            solver.step(f, 0.2 / steps);
        double e1 = 0.0;
        for (int i = 0; i < nx; ++i)
            for (std::size_t a = 0; a < g.size(); ++a)
                e1 += f.dx() * g.weight(a) *
                      std::abs(f.values()(static_cast<Eigen::Index>(a), i) - exact(f.x(i), g.node(a)));
        errors.push_back(e1);
    }
    const double r1 = errors[0] / errors[1], r2 = errors[1] / errors[2];
    Outcome o;
    o.pass = slab_ok && ball_ok && r1 >= 1.8 && r2 >= 1.8;
    o.detail = "slab bounce error " + fmt(err) + ", ball orbit error " + fmt(berr) + " (tol 1e-10); L1 ratios " +
               fmt(r1) + ", " + fmt(r2) + " (tol 1.8)";
    return o;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome determinism()
{
    if (tool_path.empty())
        return {false, "no command-line tool given (--tool)"};
    const fs::path dir = fs::temp_directory_path() / "kinlab_acceptance_det";
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "run.toml");
        cfg << "seed = 11\nbc = \"diffuse\"\n[grid]\nn_x = 16\nn_v = 12\n[collision]\ncache_dir = \"" << cache_dir
            << "\"\n[time]\ndt = 0.05\nn_steps = 20\n[output]\ndiagnostics = \"" << (dir / "diag.ndjson").string()
            << "\"\nfield = \"" << (dir / "field.bin").string() << "\"\n";
    }
    auto invoke = [&](const std::string& args) {
        const std::string cmd = tool_path + " " + args + " --timestamp 2000-01-01T00:00:00Z >/dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    std::map<std::string, std::string> first;
    bool ok = true;
    for (int rep = 0; rep < 2; ++rep)
    {
        ok = ok && invoke("cycles -c " + (dir / "run.toml").string() + " --k 4 8 --samples 20000 --t 5 -o " +
                          (dir / "cycles.ndjson").string());
        ok = ok && invoke("cycles -c " + (dir / "run.toml").string() +
                          " --estimator weighted --k 4 --samples 5000 --t 5 -o " + (dir / "weighted.ndjson").string());
        ok = ok && invoke("run -c " + (dir / "run.toml").string());
        for (const char* name : {"cycles.ndjson", "weighted.ndjson", "diag.ndjson", "field.bin"})
        {
            const std::string bytes = slurp(dir / name);
            if (rep == 0)
                first[name] = bytes;
            else
                ok = ok && !bytes.empty() && bytes == first[name];
        }
    }
    return {ok, ok ? "four output files bit-identical across two runs" : "outputs differ or a run failed"};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance checks"};
    std::vector<int> which;
    app.add_option("criteria", which, "criteria to run (default all)");
    app.add_option("--cache", cache_dir, "operator cache directory");
    app.add_option("--tool", tool_path, "path of the kinlab executable");
    CLI11_PARSE(app, argc, argv);
    if (which.empty())
        which = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    const std::map<int, std::pair<std::string, Outcome (*)()>> table{
        {1, {"flux normalization", flux_normalization}},
        {2, {"frequency sandwich", frequency_sandwich}},
        {3, {"null space and coercivity", null_space_coercivity}},
        {4, {"K^(1-chi) smallness scaling", k_rest_scaling}},
        {5, {"conservation", conservation}},
        {6, {"decay exponents", decay_exponents}},
        {7, {"Young envelope", young_envelope}},
        {8, {"cycle probability decay", cycle_decay}},
        {9, {"specular geometry oracle", specular_oracle}},
        {10, {"determinism", determinism}},
    };

    int failed = 0;
    for (int c : which)
    {
        auto it = table.find(c);
        if (it == table.end())
        {
            std::cerr << "unknown criterion " << c << "\n";
            return 2;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = it->second.second();
        }
        catch (const std::exception& e)
        {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c << " (" << it->second.first << "): "
                  << o.detail << "  [" << fmt(secs, 3) << " s]" << std::endl;
        failed += o.pass ? 0 : 1;
    }
    return failed;
}
