#include "rscdma/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <iterator>
#include <mutex>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "rscdma/random.hpp"

namespace rscdma::quad
{

namespace
{

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights the
// squared first eigenvector components.
Rule golub_welsch(const Eigen::VectorXd &diag, const Eigen::VectorXd &offdiag)
{
    const auto n = diag.size();
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        j(i, i) = diag(i);
        if (i + 1 < n)
        {
            j(i, i + 1) = offdiag(i);
            j(i + 1, i) = offdiag(i);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        r.nodes[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        r.weights[i] = v * v;
        sum += r.weights[i];
    }
    for (auto &w : r.weights)
        w /= sum;
    return r;
}

std::mutex cache_mutex;

} // namespace

const Rule &gauss_hermite(int order)
{
    if (order < 1)
        throw std::invalid_argument("gauss_hermite: order must be >= 1");
    static std::map<int, std::unique_ptr<Rule>> cache;
    std::lock_guard lock(cache_mutex);
    auto &slot = cache[order];
    if (!slot)
    {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(order);
        Eigen::VectorXd off(std::max(order - 1, 0));
        for (int k = 1; k < order; ++k)
            off(k - 1) = std::sqrt(static_cast<double>(k));
        slot = std::make_unique<Rule>(golub_welsch(d, off));
        // Symmetrize: the exact rule is symmetric about zero.
        auto &r = *slot;
        for (int i = 0; i < order / 2; ++i)
        {
            const int k = order - 1 - i;
            const double x = 0.5 * (r.nodes[k] - r.nodes[i]);
            const double w = 0.5 * (r.weights[k] + r.weights[i]);
            r.nodes[i] = -x;
            r.nodes[k] = x;
            r.weights[i] = w;
            r.weights[k] = w;
        }
        if (order % 2 == 1)
            r.nodes[order / 2] = 0.0;
    }
    return *slot;
}

const Rule &gauss_laguerre(int order, double alpha)
{
    if (order < 1)
        throw std::invalid_argument("gauss_laguerre: order must be >= 1");
    if (!(alpha > -1.0))
        throw std::invalid_argument("gauss_laguerre: alpha must be > -1");
    static std::map<std::pair<int, double>, std::unique_ptr<Rule>> cache;
    std::lock_guard lock(cache_mutex);
    auto &slot = cache[{order, alpha}];
    if (!slot)
    {
        Eigen::VectorXd d(order);
        Eigen::VectorXd off(std::max(order - 1, 0));
        for (int k = 0; k < order; ++k)
            d(k) = 2.0 * k + alpha + 1.0;
        for (int k = 1; k < order; ++k)
            off(k - 1) = std::sqrt(k * (k + alpha));
        slot = std::make_unique<Rule>(golub_welsch(d, off));
    }
    return *slot;
}

std::vector<double> halton_point(std::uint64_t index, int dim, std::uint64_t seed)
{
    static constexpr int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                                     59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
    if (dim > static_cast<int>(std::size(primes)))
        throw std::invalid_argument("halton_point: dimension too large");
    std::vector<double> out(dim);
    // Skip the first few points; index 0 is the origin in every base.
    const std::uint64_t n0 = index + 1;
    for (int d = 0; d < dim; ++d)
    {
        const int b = primes[d];
        double f = 1.0;
        double r = 0.0;
        for (std::uint64_t n = n0; n > 0; n /= b)
        {
            f /= b;
            r += f * static_cast<double>(n % b);
        }
        if (seed != 0)
        {
            const double shift = static_cast<double>(sub_seed(seed, d) >> 11) * 0x1.0p-53;
            r += shift;
            r -= std::floor(r);
        }
        out[d] = r;
    }
    return out;
}

double normal_quantile(double u)
{
    static const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
    constexpr double lo = 1e-300;
    u = std::min(std::max(u, lo), 1.0 - 1e-16);
    return boost::math::quantile(std_normal, u);
}

} // namespace rscdma::quad
