#include "kinlab/velocity_grid.hpp"

#include "kinlab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace kinlab {

VelocityGrid::VelocityGrid(double half_width, int points_per_axis)
    : vmax_(half_width), n_(points_per_axis)
{
    if (!(half_width > 0))
        throw InvalidParameter("velocity grid half-width must be positive");
    if (points_per_axis < 4 || points_per_axis % 2 != 0)
        throw InvalidParameter("velocity grid needs an even number (>= 4) of points per axis");
    h_ = 2.0 * vmax_ / (n_ - 1);
    nodes_.reserve(static_cast<std::size_t>(n_) * n_ * n_);
    weights_.resize(static_cast<Eigen::Index>(nodes_.capacity()));
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
            for (int k = 0; k < n_; ++k)
            {
                weights_[static_cast<Eigen::Index>(nodes_.size())] = axis_weight(i) * axis_weight(j) * axis_weight(k);
                nodes_.emplace_back(axis(i), axis(j), axis(k));
            }
}

std::array<int, 3> VelocityGrid::multi_index(std::size_t idx) const
{
    int k = static_cast<int>(idx % n_);
    idx /= n_;
    int j = static_cast<int>(idx % n_);
    int i = static_cast<int>(idx / n_);
    return {i, j, k};
}

std::size_t VelocityGrid::mirror(std::size_t idx) const
{
    auto [i, j, k] = multi_index(idx);
    return index(n_ - 1 - i, n_ - 1 - j, n_ - 1 - k);
}

std::size_t VelocityGrid::reflect_first(std::size_t idx) const
{
    auto [i, j, k] = multi_index(idx);
    return index(n_ - 1 - i, j, k);
}

VelocityGrid::Stencil VelocityGrid::quadratic_stencil(const Vec3& v) const
{
    Stencil st;
    std::array<int, 3> base{};
    std::array<std::array<double, 3>, 3> lw{};
    for (int a = 0; a < 3; ++a)
    {
        double x = (v[a] + vmax_) / h_;
        int c = static_cast<int>(std::lround(x));
        c = std::clamp(c, 1, n_ - 2);
        double s = x - c; // offset from the centre node, in cells
        lw[a][0] = 0.5 * s * (s - 1.0);
        lw[a][1] = (1.0 - s) * (1.0 + s);
        lw[a][2] = 0.5 * s * (s + 1.0);
        base[a] = c - 1;
    }
    int m = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
        {
            double wij = lw[0][i] * lw[1][j];
            std::size_t row = index(base[0] + i, base[1] + j, base[2]);
            for (int k = 0; k < 3; ++k, ++m)
            {
                st.idx[m] = row + k;
                st.w[m] = wij * lw[2][k];
            }
        }
    return st;
}

} // namespace kinlab
