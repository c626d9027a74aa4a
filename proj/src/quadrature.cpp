#include "kinlab/quadrature.hpp"

#include "kinlab/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kinlab {

QuadratureRule gauss_legendre(int n, double a, double b)
{
    if (n < 1)
        throw InvalidParameter("Gauss-Legendre rule needs at least one node");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k)
    {
        double beta = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k, k - 1) = beta;
        jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return es.eigenvalues()[i] < es.eigenvalues()[j]; });

    QuadratureRule rule;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int i : order)
    {
        double x = es.eigenvalues()[i];
        double v0 = es.eigenvectors()(0, i);
        rule.nodes.push_back(mid + half * x);
        rule.weights.push_back(2.0 * v0 * v0 * half);
    }
    return rule;
}

} // namespace kinlab
