#include "kinlab/solver.hpp"

#include "kinlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace kinlab {

std::string to_string(BoundaryKind kind) { return kind == BoundaryKind::diffuse ? "diffuse" : "specular"; }

BoundaryKind boundary_kind_from_string(const std::string& name)
{
    if (name == "diffuse")
        return BoundaryKind::diffuse;
    if (name == "specular")
        return BoundaryKind::specular;
    throw InvalidParameter("unknown boundary kind '" + name + "'");
}

std::string to_string(CollisionMode mode)
{
    switch (mode)
    {
        case CollisionMode::none: return "none";
        case CollisionMode::damping: return "damping";
        case CollisionMode::linear: return "linear";
        case CollisionMode::nonlinear: return "nonlinear";
    }
    return "unknown";
}

CollisionMode collision_mode_from_string(const std::string& name)
{
    if (name == "none")
        return CollisionMode::none;
    if (name == "damping")
        return CollisionMode::damping;
    if (name == "linear")
        return CollisionMode::linear;
    if (name == "nonlinear")
        return CollisionMode::nonlinear;
    throw InvalidParameter("unknown collision mode '" + name + "'");
}

DistributionField::DistributionField(double half_width, int n_cells, const VelocityGrid& grid)
    : half_width_(half_width), grid_(&grid)
{
    if (!(half_width > 0.0) || n_cells < 2)
        throw InvalidParameter("slab field needs L > 0 and at least two cells");
    values_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.size()), n_cells);
}

void DistributionField::fill(const std::function<double(double, const Vec3&)>& g)
{
    for (int i = 0; i < cells(); ++i)
        for (std::size_t a = 0; a < grid_->size(); ++a)
            values_(a, i) = g(x(i), grid_->node(a));
}

namespace {
constexpr char kFieldMagic[8] = {'K', 'L', 'F', 'I', 'E', 'L', 'D', '1'};
}

void DistributionField::write_binary(std::ostream& os) const
{
    os.write(kFieldMagic, sizeof kFieldMagic);
    const std::int32_t header[3] = {cells(), grid_->points_per_axis(), 8};
    os.write(reinterpret_cast<const char*>(header), sizeof header);
    const double meta[3] = {half_width_, grid_->half_width(), time};
    os.write(reinterpret_cast<const char*>(meta), sizeof meta);
    os.write(reinterpret_cast<const char*>(values_.data()),
             static_cast<std::streamsize>(values_.size() * sizeof(double)));
}

DistributionField DistributionField::read_binary(std::istream& is, const VelocityGrid& grid)
{
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kFieldMagic, sizeof magic) != 0)
        throw ParseError("not a field dump");
    std::int32_t header[3];
    double meta[3];
    is.read(reinterpret_cast<char*>(header), sizeof header);
    is.read(reinterpret_cast<char*>(meta), sizeof meta);
    if (!is || header[1] != grid.points_per_axis() || header[2] != 8)
        throw ParseError("field dump does not match the velocity grid");
    DistributionField f(meta[0], header[0], grid);
    f.time = meta[2];
    is.read(reinterpret_cast<char*>(f.values_.data()), static_cast<std::streamsize>(f.values_.size() * sizeof(double)));
    if (!is)
        throw ParseError("truncated field dump");
    return f;
}

BoundaryCondition BoundaryCondition::make(BoundaryKind kind, const VelocityGrid& grid)
{
    BoundaryCondition bc;
    bc.kind = kind;
    const Vec3 n(1, 0, 0);
    bc.normalizer = 1.0 / grid.half_space_flux(n, [](const Vec3& v) { return maxwellian(v); });
    return bc;
}

GridVector apply_P_gamma(const BoundaryCondition& bc, const VelocityGrid& grid, const GridVector& f, const Vec3& n)
{
    if (bc.kind != BoundaryKind::diffuse)
        throw WrongKind("P_gamma needs a diffuse boundary condition");
    double flux = 0.0;
    for (std::size_t a = 0; a < grid.size(); ++a)
    {
        const Vec3& v = grid.node(a);
        double nv = n.dot(v);
        if (nv > 0.0)
            flux += f[a] * sqrt_maxwellian_sq(v.squaredNorm()) * nv * grid.weight(a);
    }
    flux *= bc.normalizer;
    GridVector out = f;
    for (std::size_t a = 0; a < grid.size(); ++a)
    {
        const Vec3& v = grid.node(a);
        if (n.dot(v) < 0.0)
            out[a] = sqrt_maxwellian_sq(v.squaredNorm()) * flux;
    }
    return out;
}

SlabSolver::SlabSolver(const CollisionOperator& op, BoundaryCondition bc, CollisionMode mode)
    : op_(&op), bc_(bc), mode_(mode), mp_(op.grid())
{
    const auto& g = op.grid();
    sqrt_mu_ = g.sample([](const Vec3& v) { return sqrt_maxwellian_sq(v.squaredNorm()); });
}

void SlabSolver::collide(Eigen::MatrixXd& f, double dt) const
{
    if (mode_ == CollisionMode::none)
        return;
    const GridVector damp = (-dt * op_->nu()).array().exp();
    if (mode_ == CollisionMode::damping)
    {
        f = damp.asDiagonal() * f;
        return;
    }
    const auto& basis = mp_.basis();
    const GridVector& w = op_->grid().weights();
    // Macroscopic coefficients of every cell at once.
    const Eigen::MatrixXd coef = mp_.gram_inverse() * (basis.transpose() * (w.asDiagonal() * f));
    const Eigen::MatrixXd macro = basis * coef;
    Eigen::MatrixXd micro = f - macro;
    Eigen::MatrixXd src = micro;
    src.noalias() += dt * (op_->K() * micro);
    if (mode_ == CollisionMode::nonlinear)
    {
        Eigen::MatrixXd gam(f.rows(), f.cols());
#pragma omp parallel for schedule(dynamic)
        for (Eigen::Index i = 0; i < f.cols(); ++i)
            gam.col(i) = f.col(i).isZero(0.0) ? GridVector::Zero(f.rows()).eval() : gamma(*op_, f.col(i), f.col(i));
        src += dt * gam;
    }
    src = damp.asDiagonal() * src;
    const Eigen::MatrixXd src_coef = mp_.gram_inverse() * (basis.transpose() * (w.asDiagonal() * src));
    f = macro + src - basis * src_coef;
}

StepStats SlabSolver::transport(Eigen::MatrixXd& f, double dx, double dt) const
{
    const auto& grid = op_->grid();
    const int n = static_cast<int>(f.cols());
    const std::size_t nv = grid.size();
    Eigen::MatrixXd out(f.rows(), f.cols());
    StepStats stats;

    auto split = [&](double v1, int& p, double& theta) {
        double s = dt * std::abs(v1) / dx;
        p = static_cast<int>(std::floor(s));
        theta = s - p;
    };

    if (bc_.kind == BoundaryKind::specular)
    {
        const int m = 2 * n;
#pragma omp parallel for schedule(static)
        for (std::size_t a = 0; a < nv; ++a)
        {
            const double v1 = grid.node(a)[0];
            if (v1 < 0.0)
                continue;
            const std::size_t r = grid.reflect_first(a);
            std::vector<double> line(m), moved(m);
            for (int i = 0; i < n; ++i)
            {
                line[i] = f(a, i);
                line[m - 1 - i] = f(r, i);
            }
            int p;
            double theta;
            split(v1, p, theta);
            for (int k = 0; k < m; ++k)
            {
                int j0 = ((k - p) % m + m) % m;
                int j1 = ((k - p - 1) % m + m) % m;
                moved[k] = (1.0 - theta) * line[j0] + theta * line[j1];
            }
            for (int i = 0; i < n; ++i)
            {
                out(a, i) = moved[i];
                out(r, i) = moved[m - 1 - i];
            }
        }
        f.swap(out);
        return stats;
    }

    // Diffuse walls. Pass 1: outflow of every velocity and ghost capacity.
    // Velocities with v1 > 0 leave through x = L and enter at x = -L.
    std::vector<double> out_mass(nv, 0.0), capacity(nv, 0.0);
    for (std::size_t a = 0; a < nv; ++a)
    {
        const double v1 = grid.node(a)[0];
        int p;
        double theta;
        split(v1, p, theta);
        // Work in the frame where the velocity moves towards increasing index.
        auto value = [&](int j) { return v1 > 0.0 ? f(a, j) : f(a, n - 1 - j); };
        double mo = 0.0;
        for (int j = std::max(0, n - p - 1); j < n; ++j)
        {
            double wgt = (j + p >= n ? 1.0 - theta : 0.0) + (j + p + 1 >= n ? theta : 0.0);
            mo += wgt * value(j);
        }
        double cap = 0.0;
        for (int j = -p - 1; j < 0; ++j)
        {
            double wgt = ((j + p >= 0 && j + p < n) ? 1.0 - theta : 0.0)
                         + ((j + p + 1 >= 0 && j + p + 1 < n) ? theta : 0.0);
            cap += wgt;
        }
        out_mass[a] = mo;
        capacity[a] = cap;
    }
    // Wall 0 is x = -L (outflow from v1 < 0), wall 1 is x = +L (outflow from v1 > 0).
    double outflow[2] = {0.0, 0.0}, room[2] = {0.0, 0.0};
    for (std::size_t a = 0; a < nv; ++a)
    {
        const double v1 = grid.node(a)[0];
        const double wm = grid.weight(a) * sqrt_mu_[a] * dx;
        const int leave = v1 > 0.0 ? 1 : 0;
        const int enter = v1 > 0.0 ? 0 : 1;
        outflow[leave] += wm * out_mass[a];
        room[enter] += wm * sqrt_mu_[a] * capacity[a];
    }
    double level[2];
    for (int w = 0; w < 2; ++w)
        level[w] = room[w] > 0.0 ? outflow[w] / room[w] : 0.0;

#pragma omp parallel for schedule(static)
    for (std::size_t a = 0; a < nv; ++a)
    {
        const double v1 = grid.node(a)[0];
        int p;
        double theta;
        split(v1, p, theta);
        const double ghost = sqrt_mu_[a] * level[v1 > 0.0 ? 0 : 1];
        auto value = [&](int j) {
            if (j < 0)
                return ghost;
            return v1 > 0.0 ? f(a, j) : f(a, n - 1 - j);
        };
        for (int k = 0; k < n; ++k)
        {
            double moved = (1.0 - theta) * value(k - p) + theta * value(k - p - 1);
            out(a, v1 > 0.0 ? k : n - 1 - k) = moved;
        }
    }
    f.swap(out);

    double inflow[2];
    for (int w = 0; w < 2; ++w)
        inflow[w] = level[w] * room[w];
    stats.flux_out = (outflow[0] + outflow[1]) / dt;
    stats.flux_in = (inflow[0] + inflow[1]) / dt;
    stats.wall_imbalance = std::max(std::abs(outflow[0] - inflow[0]), std::abs(outflow[1] - inflow[1])) / dt;
    return stats;
}

void SlabSolver::remove_conserved(Eigen::MatrixXd& f) const
{
    const GridVector& w = op_->grid().weights();
    const GridVector mean = f.rowwise().mean();
    const auto& basis = mp_.basis();
    // Columns of the basis: 1, v1, v2, v3, (|v|^2 - 3)/2, all times sqrt(mu).
    std::vector<int> cols{0};
    if (bc_.kind == BoundaryKind::specular)
        cols = {0, 2, 3, 4};
    const auto m = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd b(basis.rows(), m);
    for (Eigen::Index k = 0; k < m; ++k)
        b.col(k) = basis.col(cols[static_cast<std::size_t>(k)]);
    const Eigen::MatrixXd gram = b.transpose() * w.asDiagonal() * b;
    const Eigen::VectorXd c = gram.ldlt().solve(b.transpose() * w.cwiseProduct(mean));
    f.colwise() -= b * c;
}

StepStats SlabSolver::step(DistributionField& f, double dt) const
{
    if (!(dt > 0.0))
        throw InvalidParameter("time step must be positive");
    collide(f.values(), dt);
    StepStats stats = transport(f.values(), f.dx(), dt);
    if (pin_)
        remove_conserved(f.values());
    f.time += dt;
    return stats;
}

Diagnostics measure(const DistributionField& f,
                    const CollisionOperator& op,
                    const MacroProjection& mp,
                    const WeightParams& wp,
                    double grazing_eps)
{
    const auto& grid = f.grid();
    const auto& vals = f.values();
    const double dx = f.dx();
    const int n = f.cells();
    Diagnostics d;
    d.t = f.time;

    const GridVector& w = grid.weights();
    const GridVector sq = grid.sample([](const Vec3& v) { return sqrt_maxwellian_sq(v.squaredNorm()); });
    const GridVector weight_t = grid.sample([&](const Vec3& v) { return weight(wp, f.time, v); });

    const Eigen::VectorXd sum_sq = vals.array().square().rowwise().sum();
    d.l2 = std::sqrt(dx * w.dot(sum_sq));
    d.lnu = std::sqrt(dx * w.dot(op.nu().cwiseProduct(sum_sq)));
    d.linf = vals.cwiseAbs().maxCoeff();
    d.winf = (weight_t.asDiagonal() * vals).cwiseAbs().maxCoeff();

    const Eigen::VectorXd col_sum = vals.rowwise().sum();
    for (std::size_t a = 0; a < grid.size(); ++a)
    {
        const Vec3& v = grid.node(a);
        const double base = dx * w[a] * sq[a] * col_sum[a];
        d.mass += base;
        d.energy += base * v.squaredNorm();
        d.momentum2 += base * v[1];
        d.momentum3 += base * v[2];
    }

    double plus = 0.0, minus = 0.0, graze = 0.0;
    for (std::size_t a = 0; a < grid.size(); ++a)
    {
        const Vec3& v = grid.node(a);
        const double v1 = v[0];
        // Wall x = L uses the last cell, wall x = -L the first; outgoing means n.v > 0.
        const double at_right = vals(a, n - 1);
        const double at_left = vals(a, 0);
        const double out_val = v1 > 0.0 ? at_right : at_left;
        const double in_val = v1 > 0.0 ? at_left : at_right;
        const double m = w[a] * std::abs(v1);
        plus += m * out_val * out_val;
        minus += m * in_val * in_val;
        const double speed = v.norm();
        if (std::abs(v1) <= grazing_eps || speed >= 1.0 / grazing_eps || speed <= grazing_eps)
            graze += m * out_val * out_val;
    }
    d.boundary_plus = std::sqrt(plus);
    d.boundary_minus = std::sqrt(minus);
    d.grazing_share = plus > 0.0 ? graze / plus : 0.0;

    const Eigen::MatrixXd coef = mp.gram_inverse() * (mp.basis().transpose() * (w.asDiagonal() * vals));
    d.a_rms = std::sqrt(coef.row(0).array().square().mean());
    d.b_rms = std::sqrt(coef.middleRows(1, 3).array().square().colwise().sum().mean());
    d.c_rms = std::sqrt(coef.row(4).array().square().mean());
    return d;
}

void write_ndjson(std::ostream& os, const Diagnostics& d)
{
    nlohmann::ordered_json j;
    j["t"] = d.t;
    j["l2"] = d.l2;
    j["lnu"] = d.lnu;
    j["winf"] = d.winf;
    j["linf"] = d.linf;
    j["mass"] = d.mass;
    j["energy"] = d.energy;
    j["momentum2"] = d.momentum2;
    j["momentum3"] = d.momentum3;
    j["flux_in"] = d.flux_in;
    j["flux_out"] = d.flux_out;
    j["wall_imbalance"] = d.wall_imbalance;
    j["boundary_plus"] = d.boundary_plus;
    j["boundary_minus"] = d.boundary_minus;
    j["grazing_share"] = d.grazing_share;
    j["a_rms"] = d.a_rms;
    j["b_rms"] = d.b_rms;
    j["c_rms"] = d.c_rms;
    os << j.dump() << '\n';
}

} // namespace kinlab
