#include "kinlab/collision.hpp"

#include "kinlab/errors.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace kinlab {

namespace {

constexpr char kMagic[8] = {'K', 'L', 'C', 'O', 'P', '0', '0', '2'};

template <typename T>
void put(std::ostream& os, const T& value)
{
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& is)
{
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is)
        throw CacheError("truncated operator file");
    return value;
}

void put_block(std::ostream& os, const double* data, std::size_t count)
{
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

void take_block(std::istream& is, double* data, std::size_t count)
{
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (!is)
        throw CacheError("truncated operator file");
}

} // namespace

std::string cache_key(const VelocityGrid& grid, const CollisionParams& params)
{
    std::ostringstream os;
    os << std::setprecision(12) << "op_n" << grid.points_per_axis() << "_v" << grid.half_width() << "_r"
       << params.varrho << "_e" << params.eps_chi << "_t" << params.n_theta << "_p" << params.n_phi << "_"
       << to_string(params.b0);
    std::string key = os.str();
    for (char& c : key)
        if (c == '.' || c == '-' || c == '+')
            c = (c == '.') ? 'p' : (c == '-' ? 'm' : 'P');
    return key + ".bin";
}

void save_operator(const CollisionOperator& op, const std::filesystem::path& file)
{
    std::ofstream os(file, std::ios::binary);
    if (!os)
        throw CacheError("cannot write " + file.string());
    const auto& g = op.grid();
    const auto& p = op.params();
    os.write(kMagic, sizeof kMagic);
    put<std::int32_t>(os, g.points_per_axis());
    put<double>(os, g.half_width());
    put<double>(os, p.varrho);
    put<double>(os, p.eps_chi);
    put<std::int32_t>(os, static_cast<std::int32_t>(p.b0));
    put<std::int32_t>(os, p.n_theta);
    put<std::int32_t>(os, p.n_phi);
    const std::size_t n = g.size();
    put_block(os, op.nu().data(), n);
    put_block(os, op.K_chi().data(), n * n);
    put_block(os, op.K_one_minus_chi().data(), n * n);
    if (!os)
        throw CacheError("short write to " + file.string());
}

CollisionOperator load_operator(const std::filesystem::path& file)
{
    std::ifstream is(file, std::ios::binary);
    if (!is)
        throw CacheError("cannot open " + file.string());
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw CacheError(file.string() + " is not an operator file of this version");
    int n_axis = take<std::int32_t>(is);
    double vmax = take<double>(is);
    CollisionParams p;
    p.varrho = take<double>(is);
    p.eps_chi = take<double>(is);
    p.b0 = static_cast<AngularKernel>(take<std::int32_t>(is));
    p.n_theta = take<std::int32_t>(is);
    p.n_phi = take<std::int32_t>(is);
    VelocityGrid grid(vmax, n_axis);
    const std::size_t n = grid.size();
    GridVector nu(n);
    Matrix k_chi(n, n), k_rest(n, n);
    take_block(is, nu.data(), n);
    take_block(is, k_chi.data(), n * n);
    take_block(is, k_rest.data(), n * n);
    return CollisionOperator(std::move(grid), p, std::move(nu), std::move(k_chi), std::move(k_rest));
}

CollisionOperator load_or_assemble(const VelocityGrid& grid,
                                   const CollisionParams& params,
                                   const std::filesystem::path& cache_dir)
{
    if (cache_dir.empty())
        return assemble_collision_operator(grid, params);
    const auto file = cache_dir / cache_key(grid, params);
    if (std::filesystem::exists(file))
    {
        auto op = load_operator(file);
        const auto& p = op.params();
        if (op.grid().points_per_axis() == grid.points_per_axis() && op.grid().half_width() == grid.half_width()
            && p.varrho == params.varrho && p.eps_chi == params.eps_chi && p.b0 == params.b0
            && p.n_theta == params.n_theta && p.n_phi == params.n_phi)
            return op;
    }
    auto op = assemble_collision_operator(grid, params);
    std::filesystem::create_directories(cache_dir);
    // Write to a temporary name first so a concurrent reader never sees a partial file.
    auto tmp = file;
    tmp += ".tmp";
    save_operator(op, tmp);
    std::filesystem::rename(tmp, file);
    return op;
}

void write_operator_csv(const CollisionOperator& op, std::ostream& os, const std::vector<std::size_t>& rows)
{
    const auto& g = op.grid();
    os << std::setprecision(17);
    os << "index,v1,v2,v3,nu\n";
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        const Vec3& v = g.node(i);
        os << i << ',' << v[0] << ',' << v[1] << ',' << v[2] << ',' << op.nu()[i] << '\n';
    }
    for (std::size_t r : rows)
    {
        os << "# row " << r << "\ncol,k,k_chi,k_one_minus_chi\n";
        for (std::size_t j = 0; j < g.size(); ++j)
            os << j << ',' << op.K()(r, j) << ',' << op.K_chi()(r, j) << ',' << op.K_one_minus_chi()(r, j) << '\n';
    }
}

} // namespace kinlab
