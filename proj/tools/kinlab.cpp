#include "kinlab/analysis.hpp"
#include "kinlab/config.hpp"
#include "kinlab/cycles.hpp"
#include "kinlab/errors.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace kinlab;
using ojson = nlohmann::ordered_json;

namespace {

struct Common
{
    std::string config;
    std::string out;
    std::string timestamp;
};

ScenarioConfig load(const Common& c)
{
    if (c.config.empty())
        return config_from_json(nlohmann::json::object());
    return parse_config(c.config);
}

// Output goes to the named file, or stdout when no file is given.
class Sink
{
  public:
    explicit Sink(const std::string& path)
    {
        if (path.empty() || path == "-")
            return;
        file_ = std::make_unique<std::ofstream>(path);
        if (!*file_)
            throw Error("cannot open " + path + " for writing");
    }
    std::ostream& os() { return file_ ? *file_ : std::cout; }

  private:
    std::unique_ptr<std::ofstream> file_;
};

Vec3 vec(const std::vector<double>& v, const char* what)
{
    if (v.size() != 3)
        throw InvalidParameter(std::string(what) + " needs three components");
    return Vec3(v[0], v[1], v[2]);
}

CollisionOperator operator_for(const ScenarioConfig& cfg)
{
    VelocityGrid grid(cfg.grid.v_max, cfg.grid.n_v);
    if (cfg.collision.cache_dir.empty())
        return assemble_collision_operator(grid, cfg.collision.params);
    return load_or_assemble(grid, cfg.collision.params, cfg.collision.cache_dir);
}

double lambda0_for(const ScenarioConfig& cfg, const VelocityGrid& grid, const GridVector& nu)
{
    if (cfg.weights.lambda0)
        return *cfg.weights.lambda0;
    const FrequencyBand band = frequency_band(grid, nu, cfg.collision.params.varrho);
    return 0.5 * lambda0_admissible_bound(cfg.weights.params, 1.0 / band.lo);
}

int cmd_geom(const Common& c, const std::vector<double>& x, const std::vector<double>& v, double eps)
{
    const ScenarioConfig cfg = load(c);
    const Domain d = cfg.domain.build();
    const Vec3 xx = vec(x, "--x"), vv = vec(v, "--v");
    Sink sink(c.out);
    ojson rec;
    rec["domain"] = to_string(d.kind());
    rec["x"] = {xx[0], xx[1], xx[2]};
    rec["v"] = {vv[0], vv[1], vv[2]};
    rec["level"] = d.level(xx);
    rec["alpha"] = kinetic_distance(d, xx, vv);
    const ExitPoint e = backward_exit_time(d, xx, vv);
    rec["finite"] = e.finite;
    if (e.finite)
    {
        rec["t_b"] = e.t_b;
        rec["x_b"] = {e.x_b[0], e.x_b[1], e.x_b[2]};
        const Vec3 n = outward_normal(d, e.x_b);
        rec["normal"] = {n[0], n[1], n[2]};
        rec["near_grazing"] = near_grazing(d, e.x_b, vv, eps);
    }
    sink.os() << metadata_record(cfg.hash(), cfg.seed, c.timestamp).dump() << '\n' << rec.dump() << '\n';
    return 0;
}

int cmd_kernel(const Common& c, const std::vector<std::size_t>& rows, const std::string& csv, int spectrum)
{
    const ScenarioConfig cfg = load(c);
    const CollisionOperator op = operator_for(cfg);
    const auto& grid = op.grid();
    const MacroProjection mp(grid);
    ojson rec;
    rec["n_v"] = grid.points_per_axis();
    rec["v_max"] = grid.half_width();
    rec["nu0"] = collision_frequency_at(0.0, cfg.collision.params.varrho, cfg.collision.params.b0);
    const FrequencyBand band = frequency_band(grid, op.nu(), cfg.collision.params.varrho);
    rec["band"] = {band.lo, band.hi};
    std::vector<double> res;
    for (int k = 0; k < 5; ++k)
    {
        const GridVector b = mp.basis().col(k);
        res.push_back(grid.norm(op.apply_L(b)) / grid.norm(b));
    }
    rec["null_residuals"] = res;
    rec["flux_mu"] = grid.half_space_flux(Vec3(1, 0, 0), [](const Vec3& v) { return maxwellian(v); });
    if (spectrum > 0)
        rec["lowest_eigenvalues"] = lowest_eigenvalues(op, spectrum);
    Sink sink(c.out);
    sink.os() << metadata_record(cfg.hash(), cfg.seed, c.timestamp).dump() << '\n' << rec.dump() << '\n';
    if (!csv.empty())
    {
        std::ofstream os(csv);
        if (!os)
            throw Error("cannot open " + csv);
        os << "# " << metadata_record(cfg.hash(), cfg.seed, c.timestamp).dump() << '\n';
        write_operator_csv(op, os, rows);
    }
    return 0;
}

struct CycleArgs
{
    std::vector<int> k{4, 8, 16, 32};
    std::size_t samples = 100000;
    double t = 10.0;
    std::vector<double> x{0, 0, 0};
    std::vector<double> v{1, 0, 0};
    std::string estimator = "escape";
    std::string variant = "between_bounces";
};

int cmd_cycles(const Common& c, const CycleArgs& a, std::optional<std::uint64_t> seed)
{
    ScenarioConfig cfg = load(c);
    if (seed)
        cfg.seed = *seed;
    const Domain d = cfg.domain.build();
    const Vec3 x = vec(a.x, "--x"), v = vec(a.v, "--v");
    Sink sink(c.out);
    sink.os() << metadata_record(cfg.hash(), cfg.seed, c.timestamp).dump() << '\n';
    const FrequencyTable table(cfg.collision.params.varrho, cfg.collision.params.b0);
    const WeightParams wp = cfg.weights.params;
    for (int k : a.k)
    {
        Estimate e;
        std::string variant = a.estimator;
        if (a.estimator == "escape")
            e = estimate_escape_probability(d, a.t, x, v, k, a.samples, cfg.seed);
        else if (a.estimator == "weighted")
        {
            const CycleVariant cv = cycle_variant_from_string(a.variant);
            variant = to_string(cv);
            e = estimate_weighted_cycle_integral(d, table, [&](const Vec3& u) { return w_tilde(wp, u); }, a.t, x,
                                                 v, k, a.samples, cv, cfg.seed);
        }
        else
            throw InvalidParameter("estimator must be escape or weighted");
        ojson rec;
        rec["k"] = k;
        rec["t"] = a.t;
        rec["estimate"] = e.value;
        rec["stderr"] = e.stderr_;
        rec["n"] = e.n;
        rec["seed"] = cfg.seed;
        rec["variant"] = variant;
        rec["grazing"] = e.grazing;
        sink.os() << rec.dump() << '\n';
    }
    return 0;
}

int cmd_trace(const Common& c, const CycleArgs& a, const std::string& kind, int bounces, std::uint64_t stream)
{
    const ScenarioConfig cfg = load(c);
    const Domain d = cfg.domain.build();
    const Vec3 x = vec(a.x, "--x"), v = vec(a.v, "--v");
    Sink sink(c.out);
    sink.os() << "# " << metadata_record(cfg.hash(), cfg.seed, c.timestamp).dump() << '\n';
    if (kind == "specular")
        trace_specular_cycle(d, a.t, x, v, bounces).write_csv(sink.os());
    else if (kind == "diffuse")
    {
        CounterRng rng(cfg.seed, stream);
        sample_diffuse_cycle(d, rng, a.t, x, v, bounces).first.write_csv(sink.os());
    }
    else
        throw InvalidParameter("trace kind must be specular or diffuse");
    return 0;
}

int cmd_run(const Common& c)
{
    const ScenarioConfig cfg = load(c);
    if (cfg.domain.kind != DomainKind::slab)
        throw InvalidParameter("the solver runs on the slab only");
    const CollisionOperator op = operator_for(cfg);
    const auto& grid = op.grid();
    const MacroProjection mp(grid);
    const BoundaryCondition bc = BoundaryCondition::make(cfg.bc, grid);
    SlabSolver solver(op, bc, cfg.collision.mode);
    solver.set_pin_conserved(cfg.time.pin_conserved);
    DistributionField f = make_initial_field(cfg, grid);

    std::string path = c.out.empty() ? cfg.output.diagnostics : c.out;
    Sink sink(path);
    auto& os = sink.os();
    os << std::setprecision(17);
    os << metadata_record(cfg.hash(), cfg.seed, c.timestamp).dump() << '\n';
    Diagnostics d = measure(f, op, mp, cfg.weights.params, cfg.output.grazing_eps);
    write_ndjson(os, d);
    const double limit = 1e6 * std::max(d.linf, 1e-300);
    for (int k = 1; k <= cfg.time.n_steps; ++k)
    {
        const StepStats st = solver.step(f, cfg.time.dt);
        if (!(f.values().cwiseAbs().maxCoeff() <= limit))
            throw Diverged("sup norm exceeded 1e6 times its initial value at t = " + std::to_string(f.time));
        if (k % cfg.time.sample_every == 0 || k == cfg.time.n_steps)
        {
            d = measure(f, op, mp, cfg.weights.params, cfg.output.grazing_eps);
            d.flux_in = st.flux_in;
            d.flux_out = st.flux_out;
            d.wall_imbalance = st.wall_imbalance;
            write_ndjson(os, d);
        }
    }
    if (!cfg.output.field.empty())
    {
        std::ofstream fs(cfg.output.field, std::ios::binary);
        if (!fs)
            throw Error("cannot open " + cfg.output.field);
        f.write_binary(fs);
    }
    return 0;
}

std::vector<Diagnostics> read_series(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw Error("cannot open " + path);
    std::vector<Diagnostics> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line))
    {
        ++lineno;
        if (line.empty())
            continue;
        nlohmann::json j;
        try
        {
            j = nlohmann::json::parse(line);
        }
        catch (const nlohmann::json::parse_error& e)
        {
            throw ParseError(path + " line " + std::to_string(lineno) + ": " + e.what());
        }
        if (j.contains("record"))
            continue;
        Diagnostics d;
        auto get = [&](const char* key, double& v) {
            if (j.contains(key))
                v = j.at(key).get<double>();
        };
        get("t", d.t);
        get("l2", d.l2);
        get("lnu", d.lnu);
        get("winf", d.winf);
        get("linf", d.linf);
        get("mass", d.mass);
        get("energy", d.energy);
        get("momentum2", d.momentum2);
        get("momentum3", d.momentum3);
        get("flux_in", d.flux_in);
        get("flux_out", d.flux_out);
        get("wall_imbalance", d.wall_imbalance);
        out.push_back(d);
    }
    return out;
}

int cmd_fit(const Common& c, const std::string& in, const std::string& norm, FitOptions opt)
{
    const auto series = read_series(in);
    std::vector<std::pair<double, double>> pts;
    for (const auto& d : series)
    {
        double y = norm == "l2" ? d.l2 : norm == "winf" ? d.winf : norm == "lnu" ? d.lnu : -1.0;
        if (y < 0.0)
            throw InvalidParameter("norm must be l2, winf or lnu");
        pts.emplace_back(d.t, y);
    }
    const DecayFit fit = fit_stretched_exponential(pts, opt);
    const DecayFit pure = fit_fixed_rho(pts, 1.0, opt);
    ojson rec;
    rec["rho_hat"] = fit.rho_hat;
    rec["lambda_hat"] = fit.lambda_hat;
    rec["r2"] = fit.r2;
    rec["window"] = {fit.t_min, fit.t_max};
    rec["norm_kind"] = norm;
    rec["samples"] = fit.samples;
    rec["skip_fraction"] = opt.skip_fraction;
    rec["r2_pure_exponential"] = pure.r2;
    Sink sink(c.out);
    sink.os() << std::setprecision(17) << metadata_record("", 0, c.timestamp).dump() << '\n'
              << rec.dump(2) << '\n';
    return 0;
}

int cmd_audit(const Common& c, const std::string& in, bool diffuse, int random_count)
{
    Sink sink(c.out);
    auto& os = sink.os();
    if (!in.empty())
    {
        const ConservationSummary s = conservation_report(read_series(in), 1e-6, !diffuse);
        os << metadata_record("", 0, c.timestamp).dump() << '\n';
        ojson rec;
        rec["mass_drift"] = s.mass_drift;
        rec["energy_drift"] = s.energy_drift;
        rec["momentum_drift"] = s.momentum_drift;
        rec["max_wall_imbalance"] = s.max_wall_imbalance;
        rec["mass_ok"] = s.mass_ok;
        rec["energy_ok"] = s.energy_ok;
        rec["energy_checked"] = !diffuse;
        rec["momentum_ok"] = s.momentum_ok;
        os << rec.dump() << '\n';
        return (s.mass_ok && s.energy_ok && s.momentum_ok) ? 0 : 1;
    }
    const ScenarioConfig cfg = load(c);
    const CollisionOperator op = operator_for(cfg);
    const auto& grid = op.grid();
    os << metadata_record(cfg.hash(), cfg.seed, c.timestamp).dump() << '\n';
    const double l0 = lambda0_for(cfg, grid, op.nu());
    const EnvelopeReport env =
        young_envelope_check(cfg.weights.params, grid, op.nu(), l0, {0.1, 1.0, 10.0, 100.0}, false);
    ojson rec;
    rec["lambda0"] = env.lambda0;
    rec["envelope_violations"] = env.violations;
    rec["envelope_worst_margin"] = env.worst_margin;
    if (random_count > 0)
        rec["coercivity_min"] = random_coercivity(op, MacroProjection(grid), random_count, cfg.seed);
    os << rec.dump() << '\n';
    return env.violations == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
#ifdef _OPENMP
    if (const char* t = std::getenv("KINLAB_THREADS"))
    {
        const int n = std::atoi(t);
        if (n > 0)
            omp_set_num_threads(n);
    }
#endif
    CLI::App app{"kinlab: slab kinetic solver, collision kernels and back-time cycles"};
    app.require_subcommand(1);
    app.set_version_flag("--version", library_version());

    Common common;
    auto add_common = [&](CLI::App* s) {
        s->add_option("-c,--config", common.config, "scenario file (.toml or .json)");
        s->add_option("-o,--out", common.out, "output file (default stdout)");
        s->add_option("--timestamp", common.timestamp, "fixed timestamp for the metadata record");
    };

    std::vector<double> gx{0, 0, 0}, gv{1, 0, 0};
    double geps = 0.1;
    auto* geom = app.add_subcommand("geom", "exit time, exit point and kinetic distance of one phase point");
    add_common(geom);
    geom->add_option("--x", gx)->expected(3);
    geom->add_option("--v", gv)->expected(3);
    geom->add_option("--eps", geps, "near-grazing threshold");

    std::vector<std::size_t> rows{0};
    std::string csv;
    auto* kernel = app.add_subcommand("kernel", "assemble or load the collision operator and summarize it");
    add_common(kernel);
    kernel->add_option("--rows", rows, "rows exported to the CSV");
    kernel->add_option("--csv", csv, "CSV export of nu and the selected rows");
    int spectrum = 0;
    kernel->add_option("--spectrum", spectrum, "report this many of the smallest eigenvalues of L");

    CycleArgs ca;
    auto* cycles = app.add_subcommand("cycles", "Monte Carlo estimates over diffuse back-time cycles");
    add_common(cycles);
    cycles->add_option("--k", ca.k, "cycle lengths");
    cycles->add_option("--samples", ca.samples);
    cycles->add_option("--t", ca.t);
    cycles->add_option("--x", ca.x)->expected(3);
    cycles->add_option("--v", ca.v)->expected(3);
    cycles->add_option("--estimator", ca.estimator, "escape or weighted");
    cycles->add_option("--variant", ca.variant, "between_bounces or tail_to_zero");
    std::uint64_t seed_override = 0;
    auto* seed_opt = cycles->add_option("--seed", seed_override, "overrides the config seed");

    CycleArgs ta;
    std::string tkind = "specular";
    int bounces = 50;
    std::uint64_t stream = 0;
    auto* trace = app.add_subcommand("trace", "dump one back-time cycle as CSV");
    add_common(trace);
    trace->add_option("--kind", tkind, "specular or diffuse");
    trace->add_option("--t", ta.t);
    trace->add_option("--x", ta.x)->expected(3);
    trace->add_option("--v", ta.v)->expected(3);
    trace->add_option("--bounces", bounces, "bounce budget (diffuse: k)");
    trace->add_option("--stream", stream, "RNG stream of a diffuse trace");

    auto* run = app.add_subcommand("run", "advance a slab scenario and stream diagnostics as NDJSON");
    add_common(run);

    std::string fit_in, norm = "l2";
    FitOptions fopt;
    auto* fit = app.add_subcommand("fit", "stretched-exponential fit of a diagnostics stream");
    add_common(fit);
    fit->add_option("--in", fit_in)->required();
    fit->add_option("--norm", norm, "l2, winf or lnu");
    fit->add_option("--skip", fopt.skip_fraction, "leading fraction dropped");
    fit->add_option("--t-lo", fopt.t_lo);
    fit->add_option("--t-hi", fopt.t_hi);

    std::string audit_in;
    bool audit_diffuse = false;
    int random_count = 0;
    auto* audit = app.add_subcommand("audit", "conservation report of a run, or envelope and coercivity checks");
    add_common(audit);
    audit->add_option("--in", audit_in, "diagnostics stream to audit");
    audit->add_flag("--diffuse", audit_diffuse, "skip the energy check");
    audit->add_option("--random", random_count, "random microscopic vectors for the coercivity ratio");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (*geom)
            return cmd_geom(common, gx, gv, geps);
        if (*kernel)
            return cmd_kernel(common, rows, csv, spectrum);
        if (*cycles)
            return cmd_cycles(common, ca, *seed_opt ? std::optional<std::uint64_t>(seed_override) : std::nullopt);
        if (*trace)
            return cmd_trace(common, ta, tkind, bounces, stream);
        if (*run)
            return cmd_run(common);
        if (*fit)
            return cmd_fit(common, fit_in, norm, fopt);
        if (*audit)
            return cmd_audit(common, audit_in, audit_diffuse, random_count);
    }
    catch (const Error& e)
    {
        std::cerr << e.what() << '\n';
        return 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
