#include "rscdma/rmt_gaussian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rscdma/kernels.hpp"
#include "rscdma/quadrature.hpp"
#include "rscdma/random.hpp"

namespace rscdma
{

namespace
{

// Gain samples g = ||h||^2 with weights summing to 1.
struct GainRule
{
    std::vector<double> g;
    std::vector<double> w;
};

GainRule gain_rule(const GaussianScenario &gs)
{
    GainRule r;
    if (gs.gain_law == GaussianScenario::GainLaw::FixedRealizations)
    {
        std::size_t cols = 0;
        for (const CMat &h : gs.realizations)
            cols += static_cast<std::size_t>(h.cols());
        for (const CMat &h : gs.realizations)
            for (Eigen::Index m = 0; m < h.cols(); ++m)
            {
                r.g.push_back(h.col(m).squaredNorm());
                r.w.push_back(1.0 / static_cast<double>(cols));
            }
        return r;
    }
    // ||h||^2 ~ Gamma(N, 1/N)
    const auto &q = quad::gauss_laguerre(gs.quad_order, gs.N - 1.0);
    for (std::size_t i = 0; i < q.nodes.size(); ++i)
    {
        r.g.push_back(q.nodes[i] / gs.N);
        r.w.push_back(q.weights[i]);
    }
    return r;
}

// Root of f(x) = x - n0 - mean(x) on [n0, hi], where mean is decreasing.
template <class F>
double bisect(double n0, double hi, F &&interference)
{
    double lo = n0;
    if (hi <= lo)
        return lo;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        if (mid - n0 - interference(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

void GaussianScenario::validate() const
{
    if (!(beta >= 0.0) || M < 1 || N < 1 || !(P >= 0.0) || !(n0 > 0.0))
        throw std::invalid_argument("GaussianScenario: beta, P >= 0; M, N >= 1; n0 > 0 required");
    if (gain_law == GainLaw::FixedRealizations)
    {
        if (realizations.empty())
            throw std::invalid_argument("GaussianScenario: FixedRealizations needs at least one matrix");
        for (const CMat &h : realizations)
            if (h.rows() != N || h.cols() != M)
                throw DimMismatch("GaussianScenario: realizations must be N x M");
    }
    else if (eig_samples < 2)
        throw std::invalid_argument("GaussianScenario: eig_samples must be >= 2");
}

EigPool EigPool::build(const GaussianScenario &gs)
{
    gs.validate();
    EigPool pool;
    auto eigs_of = [](const CMat &h) {
        const HermEigen e = eig(HermMat(h.adjoint() * h));
        std::vector<double> out;
        const auto k = std::min(h.rows(), h.cols());
        // The largest min(N, M) eigenvalues are the nonzero ones.
        for (Eigen::Index i = e.values.size() - k; i < e.values.size(); ++i)
            out.push_back(std::max(e.values(i), 0.0));
        return out;
    };
    if (gs.gain_law == GaussianScenario::GainLaw::FixedRealizations)
    {
        for (const CMat &h : gs.realizations)
            pool.eigs.push_back(eigs_of(h));
        return pool;
    }
    pool.eigs.resize(gs.eig_samples);
    kernels::parallel_for(gs.eig_samples, [&](std::size_t d) {
        Rng rng(sub_seed(gs.seed, d));
        pool.eigs[d] = eigs_of(complex_gaussian_matrix(rng, gs.N, gs.M, 1.0 / gs.N));
    });
    return pool;
}

double nr_fixed_point(const GaussianScenario &gs)
{
    gs.validate();
    const GainRule r = gain_rule(gs);
    const double scale = gs.beta * gs.M / gs.N;
    auto interference = [&](double nr) {
        double s = 0.0;
        for (std::size_t i = 0; i < r.g.size(); ++i)
            s += r.w[i] * gs.P * r.g[i] / (1.0 + gs.P * r.g[i] / nr);
        return scale * s;
    };
    double mean_g = 0.0;
    for (std::size_t i = 0; i < r.g.size(); ++i)
        mean_g += r.w[i] * r.g[i];
    return bisect(gs.n0, gs.n0 + scale * gs.P * mean_g, interference);
}

double c_lmmse_sts(const GaussianScenario &gs)
{
    const double nr = nr_fixed_point(gs);
    const GainRule r = gain_rule(gs);
    double s = 0.0;
    for (std::size_t i = 0; i < r.g.size(); ++i)
        s += r.w[i] * std::log2(1.0 + gs.P * r.g[i] / nr);
    return gs.beta * gs.M * s;
}

double nw_fixed_point(const GaussianScenario &gs, const EigPool &pool)
{
    gs.validate();
    if (pool.eigs.empty())
        throw EigPoolTooSmall("nw_fixed_point: empty eigenvalue pool");
    const double scale = gs.beta / gs.N / static_cast<double>(pool.eigs.size());
    auto interference = [&](double nw) {
        double s = 0.0;
        for (const auto &draw : pool.eigs)
            for (double l : draw)
                s += gs.P * l / (1.0 + gs.P * l / nw);
        return scale * s;
    };
    double sum_l = 0.0;
    for (const auto &draw : pool.eigs)
        for (double l : draw)
            sum_l += l;
    return bisect(gs.n0, gs.n0 + scale * gs.P * sum_l, interference);
}

double nw_fixed_point(const GaussianScenario &gs)
{
    return nw_fixed_point(gs, EigPool::build(gs));
}

double c_lmmse_ts(const GaussianScenario &gs, const EigPool &pool)
{
    const double nw = nw_fixed_point(gs, pool);
    if (gs.beta == 0.0)
        return 0.0;
    const double n = static_cast<double>(pool.eigs.size());
    double s = 0.0, s2 = 0.0;
    for (const auto &draw : pool.eigs)
    {
        double c = 0.0;
        for (double l : draw)
            c += std::log2(1.0 + gs.P * l / nw);
        s += c;
        s2 += c * c;
    }
    const double mean = s / n;
    if (gs.gain_law == GaussianScenario::GainLaw::IidGaussian && mean > 0.0)
    {
        const double se = std::sqrt(std::max(s2 / n - mean * mean, 0.0) / (n - 1.0));
        if (se > gs.target_rel_se * mean)
            throw EigPoolTooSmall("c_lmmse_ts: relative standard error " + std::to_string(se / mean) +
                                  " exceeds target " + std::to_string(gs.target_rel_se));
    }
    return gs.beta * mean;
}

double c_lmmse_ts(const GaussianScenario &gs)
{
    return c_lmmse_ts(gs, EigPool::build(gs));
}

} // namespace rscdma
