#pragma once

#include "kinlab/geometry.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace kinlab {

//! Values of a function at the nodes of a VelocityGrid.
using GridVector = Eigen::VectorXd;

/*!
 * Uniform Cartesian velocity grid on [-V_max, V_max]^3 with N_v points per
 * axis (endpoints included) and tensor-product trapezoid weights.
 *
 * Nodes are stored with the first component varying slowest:
 * index = (i * N + j) * N + k for node (s_i, s_j, s_k).
 */
class VelocityGrid
{
  public:
    VelocityGrid(double half_width, int points_per_axis);

    double half_width() const { return vmax_; }
    int points_per_axis() const { return n_; }
    double spacing() const { return h_; }
    std::size_t size() const { return nodes_.size(); }

    const Vec3& node(std::size_t idx) const { return nodes_[idx]; }
    double weight(std::size_t idx) const { return weights_[idx]; }
    const GridVector& weights() const { return weights_; }
    double axis(int i) const { return -vmax_ + i * h_; }
    double axis_weight(int i) const { return (i == 0 || i == n_ - 1) ? 0.5 * h_ : h_; }

    std::size_t index(int i, int j, int k) const
    {
        return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
    }
    std::array<int, 3> multi_index(std::size_t idx) const;

    //! Index of the node -v.
    std::size_t mirror(std::size_t idx) const;
    //! Index of the node with the first component negated (slab specular reflection).
    std::size_t reflect_first(std::size_t idx) const;

    //! Grid vector of g(v) at the nodes.
    template <class F>
    GridVector sample(F&& g) const
    {
        GridVector out(size());
        for (std::size_t i = 0; i < size(); ++i)
            out[i] = g(nodes_[i]);
        return out;
    }

    //! Quadrature of a grid vector.
    double integrate(const GridVector& f) const { return weights_.dot(f); }
    //! Quadrature inner product.
    double dot(const GridVector& f, const GridVector& g) const { return weights_.dot(f.cwiseProduct(g)); }
    double norm(const GridVector& f) const { return std::sqrt(dot(f, f)); }

    /*!
     * Outgoing half-space flux sum over {n.v > 0} of g(v) (n.v) weight.
     * For g = mu this is the discrete counterpart of the unit flux identity.
     */
    template <class F>
    double half_space_flux(const Vec3& n, F&& g) const
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
        {
            double nv = n.dot(nodes_[i]);
            if (nv > 0.0)
                acc += g(nodes_[i]) * nv * weights_[i];
        }
        return acc;
    }

    /*!
     * Stencil of the triquadratic Lagrange interpolant at an arbitrary velocity:
     * the 27 nodes nearest to v and their weights. Points outside the grid
     * use the outermost stencil (extrapolation).
     */
    struct Stencil
    {
        std::array<std::size_t, 27> idx;
        std::array<double, 27> w;
    };
    Stencil quadratic_stencil(const Vec3& v) const;

  private:
    double vmax_;
    int n_;
    double h_;
    std::vector<Vec3> nodes_;
    GridVector weights_;
};

} // namespace kinlab
