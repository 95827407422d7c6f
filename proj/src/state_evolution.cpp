#include "rscdma/state_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "rscdma/kernels.hpp"
#include "rscdma/quadrature.hpp"
#include "rscdma/random.hpp"

namespace rscdma
{

namespace
{

struct PairAcc
{
    CMat a;
    CMat at;

    PairAcc &operator+=(const PairAcc &o)
    {
        a += o.a;
        at += o.at;
        return *this;
    }
};

// Flattened (group, draw) index over the pool.
struct DrawIndex
{
    std::vector<std::size_t> offset; // offset[p] = first flat index of group p

    explicit DrawIndex(const ChannelPool &pool)
    {
        std::size_t n = 0;
        for (const auto &g : pool.per_group)
        {
            offset.push_back(n);
            n += g.size();
        }
        offset.push_back(n);
    }
    std::size_t total() const { return offset.back(); }
    std::pair<std::size_t, std::size_t> at(std::size_t i) const
    {
        const auto it = std::upper_bound(offset.begin(), offset.end(), i);
        const auto p = static_cast<std::size_t>(it - offset.begin()) - 1;
        return {p, i - offset[p]};
    }
};

void check_dims(const Scenario &scn, const HermMat &A, const HermMat &At)
{
    if (A.dim() != scn.n_rx || At.dim() != scn.n_rx)
        throw DimMismatch("state evolution: matrices must be N x N");
}

CMat group_columns(const CMat &h, int m)
{
    return h.leftCols(m);
}

double rel_change(const HermMat &next, const HermMat &cur)
{
    const double scale = cur.trace() / static_cast<double>(cur.dim());
    return spectral_norm(next - cur) / scale;
}

double rel_distance(const HermMat &a, const HermMat &b)
{
    return (a - b).frobenius() / std::max(a.frobenius(), 1e-300);
}

// Per-draw sum over groups/draws of f(p, H) weighted by beta_p / D_p.
template <class F>
double weighted_sum(const Scenario &scn, const ChannelPool &pool, bool parallel, F &&f)
{
    const DrawIndex idx(pool);
    const auto acc = kernels::reduce(parallel, idx.total(), kernels::SumVec(1),
                                     [&](std::size_t i, kernels::SumVec &s) {
                                         const auto [p, d] = idx.at(i);
                                         const double w = scn.groups[p].frac / static_cast<double>(pool.draws(p));
                                         if (w > 0.0)
                                             s[0] += w * f(p, pool.per_group[p][d]);
                                     });
    return acc[0];
}

} // namespace

const char *to_string(Scheme s)
{
    return s == Scheme::STS ? "STS" : "TS";
}

const char *to_string(Branch b)
{
    switch (b)
    {
    case Branch::FromLowNoise:
        return "from_low_noise";
    case Branch::FromHighNoise:
        return "from_high_noise";
    default:
        return "user_init";
    }
}

// --- Scenario -----------------------------------------------------------------------

Scenario Scenario::single_group(Scheme scheme, double beta, int n_rx, int antennas, const Prior &true_prior,
                                const Prior &post_prior, double n0, double nt0)
{
    Scenario s;
    s.scheme = scheme;
    s.beta = beta;
    s.n_rx = n_rx;
    s.n0 = n0;
    s.nt0 = nt0;
    s.groups.push_back(
        {beta, antennas, VectorPrior::replicate(true_prior, antennas), VectorPrior::replicate(post_prior, antennas)});
    return s;
}

void Scenario::validate() const
{
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("Scenario: beta must be >= 0");
    if (n_rx < 1)
        throw DimMismatch("Scenario: N must be >= 1");
    if (!(n0 > 0.0) || !(nt0 > 0.0))
        throw InvalidPower("Scenario: N0 and Nt0 must be > 0");
    if (groups.empty())
        throw std::invalid_argument("Scenario: at least one group is required");
    if (channel_samples < 1)
        throw std::invalid_argument("Scenario: channel_samples must be >= 1");
    double sum = 0.0;
    for (const Group &g : groups)
    {
        if (g.antennas < 1)
            throw DimMismatch("Scenario: group antenna count must be >= 1");
        if (g.true_prior.size() != g.antennas || g.post_prior.size() != g.antennas)
            throw DimMismatch("Scenario: group prior length must equal its antenna count");
        if (!(g.frac >= 0.0))
            throw std::invalid_argument("Scenario: group fractions must be >= 0");
        sum += g.frac;
    }
    if (std::abs(sum - beta) > 1e-9 * std::max(1.0, beta))
        throw std::invalid_argument("Scenario: group fractions must sum to beta");
    if (channel_law.kind == ChannelLaw::Kind::FixedRealizations)
    {
        if (channel_law.realizations.empty())
            throw std::invalid_argument("Scenario: FixedRealizations needs at least one matrix");
        for (const CMat &h : channel_law.realizations)
            for (const Group &g : groups)
                if (h.rows() != n_rx || h.cols() < g.antennas)
                    throw DimMismatch("Scenario: channel realization must be N x M");
    }
}

bool Scenario::matched() const
{
    if (n0 != nt0)
        return false;
    return std::all_of(groups.begin(), groups.end(), [](const Group &g) { return g.true_prior == g.post_prior; });
}

Scenario Scenario::with_beta(double b) const
{
    Scenario s = *this;
    s.beta = b;
    double sum = 0.0;
    for (const Group &g : groups)
        sum += g.frac;
    for (Group &g : s.groups)
        g.frac = sum > 0.0 ? g.frac * b / sum : b / static_cast<double>(groups.size());
    return s;
}

double mean_antennas(const Scenario &scn)
{
    double num = 0.0, den = 0.0, plain = 0.0;
    for (const Group &g : scn.groups)
    {
        num += g.frac * g.antennas;
        den += g.frac;
        plain += g.antennas;
    }
    return den > 0.0 ? num / den : plain / static_cast<double>(scn.groups.size());
}

ChannelPool ChannelPool::draw(const Scenario &scn)
{
    scn.validate();
    ChannelPool pool;
    const int n = scn.n_rx;
    for (std::size_t p = 0; p < scn.groups.size(); ++p)
    {
        const int m = scn.groups[p].antennas;
        std::vector<CMat> draws;
        if (scn.channel_law.kind == ChannelLaw::Kind::FixedRealizations)
        {
            for (const CMat &h : scn.channel_law.realizations)
                draws.push_back(group_columns(h, m));
            pool.per_group.push_back(std::move(draws));
            continue;
        }
        const std::uint64_t seed = sub_seed(scn.channel_seed, p);
        draws.resize(scn.channel_samples);
        if (scn.channel_law.sampler == ChannelLaw::Sampler::QuasiMonteCarlo)
        {
            const int dims = 2 * n * m;
            if (dims > 32)
                throw std::invalid_argument("ChannelPool: quasi-Monte Carlo supports N*M <= 16");
            const double s = std::sqrt(0.5 / n);
            for (std::size_t d = 0; d < draws.size(); ++d)
            {
                const auto u = quad::halton_point(d, dims, seed);
                CMat h(n, m);
                for (int j = 0; j < m; ++j)
                    for (int i = 0; i < n; ++i)
                    {
                        const auto k = static_cast<std::size_t>(2 * (j * n + i));
                        h(i, j) = cd(s * quad::normal_quantile(u[k]), s * quad::normal_quantile(u[k + 1]));
                    }
                draws[d] = std::move(h);
            }
        }
        else
        {
            Rng rng(seed);
            for (auto &h : draws)
                h = complex_gaussian_matrix(rng, n, m, 1.0 / n);
        }
        pool.per_group.push_back(std::move(draws));
    }
    return pool;
}

void SolverConfig::validate() const
{
    if (!(damping > 0.0 && damping <= 1.0))
        throw std::invalid_argument("SolverConfig: damping must lie in (0, 1]");
    if (!(tol > 0.0))
        throw std::invalid_argument("SolverConfig: tol must be > 0");
    if (max_iter < 1)
        throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
    if (anderson_depth < 0)
        throw std::invalid_argument("SolverConfig: anderson_depth must be >= 0");
    if (init == Init::Explicit && (!init_A || !init_At))
        throw std::invalid_argument("SolverConfig: explicit init needs both matrices");
    integrator.validate();
}

// --- right-hand sides -------------------------------------------------------------

RhsPair rhs_sts(const Scenario &scn, const HermMat &A, const HermMat &At, const Integrator &integ,
                const ChannelPool &pool, bool parallel)
{
    check_dims(scn, A, At);
    const int n = scn.n_rx;
    const DrawIndex idx(pool);
    const CMat rt_inv = herm_inverse(At).matrix();
    const CMat &r = A.matrix();
    const PairAcc zero{CMat::Zero(n, n), CMat::Zero(n, n)};
    const PairAcc acc = kernels::reduce(parallel, idx.total(), zero, [&](std::size_t i, PairAcc &s) {
        const auto [p, d] = idx.at(i);
        const Group &g = scn.groups[p];
        const CMat &h = pool.per_group[p][d];
        const double w = g.frac / static_cast<double>(pool.draws(p));
        if (w == 0.0)
            return;
        for (int m = 0; m < g.antennas; ++m)
        {
            const CVec hm = h.col(m);
            const ScalarChannel sc = reduce_simo(hm, rt_inv, r);
            const ScalarMoments mom = scalar_moments(g.true_prior[m], g.post_prior[m], sc, integ);
            const CMat hh = hm * hm.adjoint();
            s.a += (w * mom.mse) * hh;
            s.at += (w * mom.var) * hh;
        }
    });
    return {HermMat::identity(n, scn.n0) + HermMat(acc.a), HermMat::identity(n, scn.nt0) + HermMat(acc.at)};
}

RhsPair rhs_ts(const Scenario &scn, const HermMat &A, const HermMat &At, const Integrator &integ,
               const ChannelPool &pool, bool parallel)
{
    check_dims(scn, A, At);
    const int n = scn.n_rx;
    if (!is_positive_definite(A))
        throw NotPositiveDefinite("state evolution: W is not positive definite");
    const CMat wt_inv = herm_inverse(At).matrix();
    const DrawIndex idx(pool);
    const PairAcc zero{CMat::Zero(n, n), CMat::Zero(n, n)};
    const PairAcc acc = kernels::reduce(parallel, idx.total(), zero, [&](std::size_t i, PairAcc &s) {
        const auto [p, d] = idx.at(i);
        const Group &g = scn.groups[p];
        const CMat &h = pool.per_group[p][d];
        const double w = g.frac / static_cast<double>(pool.draws(p));
        if (w == 0.0)
            return;
        const MatrixMoments mom = g.post_prior.all_gaussian()
                                      ? linear_moments_mimo(h, g.true_prior, g.post_prior, wt_inv, A.matrix())
                                      : moments_mimo({h, g.true_prior, g.post_prior, A, At}, integ);
        s.a += w * (h * mom.mse.matrix() * h.adjoint());
        s.at += w * (h * mom.var.matrix() * h.adjoint());
    });
    return {HermMat::identity(n, scn.n0) + HermMat(acc.a), HermMat::identity(n, scn.nt0) + HermMat(acc.at)};
}

RhsPair rhs(const Scenario &scn, const HermMat &A, const HermMat &At, const Integrator &integ,
            const ChannelPool &pool, bool parallel)
{
    return scn.scheme == Scheme::STS ? rhs_sts(scn, A, At, integ, pool, parallel)
                                     : rhs_ts(scn, A, At, integ, pool, parallel);
}

namespace
{

// (A, At) as one real vector: real and imaginary parts of every entry.
constexpr std::size_t kAndersonStall = 40;

RVec pack(const HermMat &a, const HermMat &at)
{
    const Eigen::Index n2 = a.dim() * a.dim();
    RVec v(4 * n2);
    for (Eigen::Index i = 0; i < n2; ++i)
    {
        v(i) = a.matrix().data()[i].real();
        v(n2 + i) = a.matrix().data()[i].imag();
        v(2 * n2 + i) = at.matrix().data()[i].real();
        v(3 * n2 + i) = at.matrix().data()[i].imag();
    }
    return v;
}

RhsPair unpack(const RVec &v, Eigen::Index n)
{
    const Eigen::Index n2 = n * n;
    CMat a(n, n), at(n, n);
    for (Eigen::Index i = 0; i < n2; ++i)
    {
        a.data()[i] = cd(v(i), v(n2 + i));
        at.data()[i] = cd(v(2 * n2 + i), v(3 * n2 + i));
    }
    return {HermMat(a), HermMat(at)};
}

} // namespace

RhsPair initial_pair(const Scenario &scn, const SolverConfig &cfg, const ChannelPool &pool)
{
    const int n = scn.n_rx;
    switch (cfg.init)
    {
    case SolverConfig::Init::NoiseOnly:
        return {HermMat::identity(n, scn.n0), HermMat::identity(n, scn.nt0)};
    case SolverConfig::Init::Explicit:
        check_dims(scn, *cfg.init_A, *cfg.init_At);
        return {*cfg.init_A, *cfg.init_At};
    case SolverConfig::Init::FullInterference:
        break;
    }
    // Every interferer undetected: E = E[x x^H], V = postulated prior covariance.
    const DrawIndex idx(pool);
    const PairAcc zero{CMat::Zero(n, n), CMat::Zero(n, n)};
    const PairAcc acc = kernels::reduce(cfg.parallel, idx.total(), zero, [&](std::size_t i, PairAcc &s) {
        const auto [p, d] = idx.at(i);
        const Group &g = scn.groups[p];
        const CMat &h = pool.per_group[p][d];
        const double w = g.frac / static_cast<double>(pool.draws(p));
        s.a += w * (h * g.true_prior.second_moment() * h.adjoint());
        s.at += w * (h * g.post_prior.second_moment() * h.adjoint());
    });
    return {HermMat::identity(n, scn.n0) + HermMat(acc.a), HermMat::identity(n, scn.nt0) + HermMat(acc.at)};
}

// --- solver ---------------------------------------------------------------------------

FixedPoint solve(const Scenario &scn, const SolverConfig &cfg)
{
    scn.validate();
    return solve(scn, cfg, ChannelPool::draw(scn));
}

FixedPoint solve(const Scenario &scn, const SolverConfig &cfg, const ChannelPool &pool)
{
    scn.validate();
    cfg.validate();
    RhsPair cur = initial_pair(scn, cfg, pool);
    require_pd(cur.A, "initial A");
    require_pd(cur.At, "initial At");

    FixedPoint fp;
    fp.branch = cfg.init == SolverConfig::Init::NoiseOnly          ? Branch::FromLowNoise
                : cfg.init == SolverConfig::Init::FullInterference ? Branch::FromHighNoise
                                                                   : Branch::UserInit;
    double gamma = cfg.damping;
    double prev = std::numeric_limits<double>::infinity();
    int decreasing = 0;
    const Eigen::Index n = scn.n_rx;
    RVec x_prev, f_prev;
    std::vector<RVec> dx, df; // Anderson history, oldest first
    // Anderson is dropped for the rest of the solve once the best residual
    // stalls; near a vanishing branch it can cycle where damping still converges.
    bool anderson = cfg.anderson_depth > 0;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_it = 0;
    for (std::size_t it = 1; it <= cfg.max_iter; ++it)
    {
        const RhsPair next = rhs(scn, cur.A, cur.At, cfg.integrator, pool, cfg.parallel);
        const double res = std::max(rel_change(next.A, cur.A), rel_change(next.At, cur.At));
        fp.iterations = it;
        fp.residual = res;
        if (res < cfg.tol)
        {
            cur = next;
            fp.converged = true;
            break;
        }
        const RVec x = pack(cur.A, cur.At);
        const RVec f = pack(next.A, next.At) - x;
        if (cfg.adaptive)
        {
            // Halve on oscillation (residual up and the step reversing); a
            // slow monotone passage keeps its damping.
            if (res > prev && f_prev.size() == f.size() && f.dot(f_prev) < 0.0)
            {
                gamma = std::max(0.5 * gamma, cfg.min_damping);
                decreasing = 0;
            }
            else if (res <= prev && ++decreasing >= 10 && gamma < cfg.damping)
            {
                gamma = std::min(2.0 * gamma, cfg.damping);
                decreasing = 0;
            }
        }
        RVec step = gamma * f;
        if (res < 0.5 * best)
            best = res, best_it = it;
        if (anderson && it - best_it > kAndersonStall)
            anderson = false, dx.clear(), df.clear();
        if (anderson)
        {
            if (res > 2.0 * prev)
                dx.clear(), df.clear();
            else if (x_prev.size() == x.size())
            {
                dx.push_back(x - x_prev);
                df.push_back(f - f_prev);
                if (dx.size() > static_cast<std::size_t>(cfg.anderson_depth))
                {
                    dx.erase(dx.begin());
                    df.erase(df.begin());
                }
            }
            if (!dx.empty())
            {
                Eigen::MatrixXd mx(x.size(), static_cast<Eigen::Index>(dx.size()));
                Eigen::MatrixXd mf(x.size(), static_cast<Eigen::Index>(dx.size()));
                for (std::size_t j = 0; j < dx.size(); ++j)
                {
                    mx.col(static_cast<Eigen::Index>(j)) = dx[j];
                    mf.col(static_cast<Eigen::Index>(j)) = df[j];
                }
                const RVec g = mf.colPivHouseholderQr().solve(f);
                const RVec accel = gamma * f - (mx + gamma * mf) * g;
                const RhsPair cand = unpack(x + accel, n);
                // Accept only PD iterates within a trust region of the current point.
                if (g.allFinite() && accel.norm() <= 0.5 * x.norm() && is_positive_definite(cand.A) &&
                    is_positive_definite(cand.At))
                    step = accel;
                else
                    dx.clear(), df.clear();
            }
            x_prev = x;
        }
        f_prev = f;
        prev = res;
        cur = unpack(x + step, n);
    }
    fp.A = cur.A;
    fp.At = cur.At;
    if (scn.matched())
    {
        fp.matched_gap = rel_distance(fp.A, fp.At);
        const double ctol = cfg.consistency_tol > 0.0 ? cfg.consistency_tol : 10.0 * cfg.tol;
        fp.consistent = fp.matched_gap <= ctol;
    }
    fp.free_energy = std::numeric_limits<double>::quiet_NaN();
    if (fp.converged && cfg.compute_free_energy)
        fp.free_energy = free_energy(scn, fp, cfg.integrator, pool);
    return fp;
}

// --- energies and capacities ----------------------------------------------------

double free_energy(const Scenario &scn, const FixedPoint &fp, const Integrator &integ, const ChannelPool &pool)
{
    check_dims(scn, fp.A, fp.At);
    const int n = scn.n_rx;
    double cross = 0.0;
    if (scn.scheme == Scheme::STS)
    {
        const CMat rt_inv = herm_inverse(fp.At).matrix();
        cross = weighted_sum(scn, pool, true, [&](std::size_t p, const CMat &h) {
            const Group &g = scn.groups[p];
            double s = 0.0;
            for (int m = 0; m < g.antennas; ++m)
                s += scalar_cap_tilde(g.true_prior[m], g.post_prior[m], reduce_simo(h.col(m), rt_inv, fp.A.matrix()),
                                      integ)
                         .value;
            return s;
        });
    }
    else
    {
        cross = weighted_sum(scn, pool, true, [&](std::size_t p, const CMat &h) {
            const Group &g = scn.groups[p];
            return cap_tilde_mimo({h, g.true_prior, g.post_prior, fp.A, fp.At}, integ).value;
        });
    }
    const double entropy = n * std::log2(std::numbers::pi * std::numbers::e * scn.n0);
    return cross + entropy + f_penalty(fp.A, fp.At, scn.n0, scn.nt0);
}

double c_joint(const Scenario &scn, const FixedPoint &fp, const Integrator &integ, const ChannelPool &pool)
{
    if (!scn.matched())
        throw MismatchedScenario("c_joint is defined for matched scenarios only");
    check_dims(scn, fp.A, fp.At);
    const int n = scn.n_rx;
    double cap = 0.0;
    if (scn.scheme == Scheme::STS)
    {
        const CMat r_inv = herm_inverse(fp.A).matrix();
        cap = weighted_sum(scn, pool, true, [&](std::size_t p, const CMat &h) {
            const Group &g = scn.groups[p];
            double s = 0.0;
            for (int m = 0; m < g.antennas; ++m)
            {
                const CVec hm = h.col(m);
                s += scalar_cap_matched(g.true_prior[m], hm.dot(r_inv * hm).real(), integ).value;
            }
            return s;
        });
    }
    else
    {
        cap = weighted_sum(scn, pool, true, [&](std::size_t p, const CMat &h) {
            const Group &g = scn.groups[p];
            return cap_mimo({h, g.true_prior, g.true_prior, fp.A, fp.A}, integ).value;
        });
    }
    return cap + kl_gauss(HermMat::identity(n, scn.n0), fp.A);
}

double c_sep(const Scenario &scn, const FixedPoint &fp, const Integrator &integ, const ChannelPool &pool,
             const MiEstimator &est)
{
    check_dims(scn, fp.A, fp.At);
    if (scn.scheme == Scheme::STS)
    {
        const CMat rt_inv = herm_inverse(fp.At).matrix();
        return weighted_sum(scn, pool, true, [&](std::size_t p, const CMat &h) {
            const Group &g = scn.groups[p];
            double s = 0.0;
            for (int m = 0; m < g.antennas; ++m)
                s += scalar_cap_gpme(g.true_prior[m], g.post_prior[m], reduce_simo(h.col(m), rt_inv, fp.A.matrix()),
                                     integ, est)
                         .value;
            return s;
        });
    }
    return weighted_sum(scn, pool, true, [&](std::size_t p, const CMat &h) {
        const Group &g = scn.groups[p];
        return cap_gpme_mimo({h, g.true_prior, g.post_prior, fp.A, fp.At}, integ, est).value;
    });
}

// --- branch selection and sweep ---------------------------------------------------

std::size_t select_branch(const std::vector<FixedPoint> &sols, double tie_tol, bool *tie)
{
    if (sols.empty())
        throw std::invalid_argument("select_branch: no solutions");
    const bool any_converged = std::any_of(sols.begin(), sols.end(), [](const FixedPoint &f) { return f.converged; });
    auto eligible = [&](const FixedPoint &f) { return f.converged || !any_converged; };
    auto energy = [](const FixedPoint &f) {
        return std::isnan(f.free_energy) ? std::numeric_limits<double>::infinity() : f.free_energy;
    };
    double best = std::numeric_limits<double>::infinity();
    for (const FixedPoint &f : sols)
        if (eligible(f))
            best = std::min(best, energy(f));
    std::size_t pick = sols.size();
    int within = 0;
    for (std::size_t i = 0; i < sols.size(); ++i)
    {
        const FixedPoint &f = sols[i];
        if (!eligible(f))
            continue;
        const bool near = std::isinf(best) ? true : std::abs(energy(f) - best) <= tie_tol * std::max(1.0, std::abs(best));
        if (!near)
            continue;
        ++within;
        if (pick == sols.size() || f.A.frobenius() > sols[pick].A.frobenius())
            pick = i;
    }
    if (tie)
        *tie = within > 1;
    return pick;
}

namespace
{

struct Continuation
{
    std::optional<FixedPoint> fp;
    std::string warning;
};

Continuation run_point(const Scenario &base, double beta, const SolverConfig &cfg, const ChannelPool &pool,
                       const std::optional<FixedPoint> &warm, SolverConfig::Init cold, Branch label)
{
    SolverConfig c = cfg;
    if (warm && warm->converged)
    {
        c.init = SolverConfig::Init::Explicit;
        c.init_A = warm->A;
        c.init_At = warm->At;
    }
    else
        c.init = cold;
    Continuation out;
    try
    {
        FixedPoint fp = solve(base.with_beta(beta), c, pool);
        fp.branch = label;
        if (!fp.converged)
        {
            std::ostringstream msg;
            msg << to_string(label) << ": no convergence at beta=" << beta << " (residual " << fp.residual << ")";
            out.warning = msg.str();
        }
        out.fp = std::move(fp);
    }
    catch (const Error &e)
    {
        out.warning = std::string(to_string(label)) + ": " + e.what();
    }
    return out;
}

struct GridEntry
{
    Continuation up;
    Continuation down;
};

using Grid = std::map<double, GridEntry>;

// Continues one branch across `betas` (in the given order).
void continue_branch(const Scenario &base, const std::vector<double> &betas, const SolverConfig &cfg,
                     const ChannelPool &pool, std::optional<FixedPoint> warm, bool upward, Grid &grid)
{
    for (double b : betas)
    {
        Continuation c = upward ? run_point(base, b, cfg, pool, warm, SolverConfig::Init::NoiseOnly, Branch::FromLowNoise)
                                : run_point(base, b, cfg, pool, warm, SolverConfig::Init::FullInterference,
                                            Branch::FromHighNoise);
        warm = c.fp;
        (upward ? grid[b].up : grid[b].down) = std::move(c);
    }
}

void run_both(const Scenario &base, const std::vector<double> &asc, const SolverConfig &cfg, const ChannelPool &pool,
              const std::optional<FixedPoint> &warm_up, const std::optional<FixedPoint> &warm_down, bool concurrent,
              Grid &grid)
{
    std::vector<double> desc(asc.rbegin(), asc.rend());
    Grid up_part, down_part;
    for (double b : asc)
    {
        up_part[b];
        down_part[b];
    }
#pragma omp parallel sections num_threads(2) if (concurrent)
    {
#pragma omp section
        continue_branch(base, asc, cfg, pool, warm_up, true, up_part);
#pragma omp section
        continue_branch(base, desc, cfg, pool, warm_down, false, down_part);
    }
    for (double b : asc)
    {
        grid[b].up = std::move(up_part[b].up);
        grid[b].down = std::move(down_part[b].down);
    }
}

double level(const Continuation &c)
{
    return c.fp ? c.fp->A.trace() / static_cast<double>(c.fp->A.dim()) : std::numeric_limits<double>::quiet_NaN();
}

} // namespace

std::vector<SweepPoint> branch_sweep(const Scenario &scn_template, const std::vector<double> &beta_grid,
                                     const SolverConfig &cfg, const SweepOptions &opt)
{
    scn_template.validate();
    cfg.validate();
    for (std::size_t i = 1; i < beta_grid.size(); ++i)
        if (!(beta_grid[i] > beta_grid[i - 1]))
            throw std::invalid_argument("branch_sweep: beta grid must be strictly increasing");
    if (beta_grid.empty())
        return {};
    const ChannelPool pool = ChannelPool::draw(scn_template);
    Grid grid;
    run_both(scn_template, beta_grid, cfg, pool, std::nullopt, std::nullopt, opt.concurrent_directions, grid);

    for (int lvl = 0; lvl < opt.refine_levels; ++lvl)
    {
        // Largest jump of each branch between adjacent grid points.
        std::vector<double> keys;
        for (const auto &[b, e] : grid)
            keys.push_back(b);
        if (keys.size() < 2)
            break;
        std::vector<std::size_t> targets;
        for (int dir = 0; dir < 2; ++dir)
        {
            double worst = -1.0;
            std::size_t at = 0;
            for (std::size_t i = 0; i + 1 < keys.size(); ++i)
            {
                const auto &lo = dir == 0 ? grid[keys[i]].up : grid[keys[i]].down;
                const auto &hi = dir == 0 ? grid[keys[i + 1]].up : grid[keys[i + 1]].down;
                const double jump = std::abs(level(hi) - level(lo));
                if (std::isfinite(jump) && jump > worst)
                {
                    worst = jump;
                    at = i;
                }
            }
            if (worst >= 0.0 && std::find(targets.begin(), targets.end(), at) == targets.end())
                targets.push_back(at);
        }
        for (std::size_t at : targets)
        {
            const double lo = keys[at], hi = keys[at + 1];
            std::vector<double> sub;
            for (int k = 1; k <= opt.refine_points; ++k)
                sub.push_back(lo + (hi - lo) * k / (opt.refine_points + 1));
            const auto warm_up = grid[lo].up.fp;
            const auto warm_down = grid[hi].down.fp;
            run_both(scn_template, sub, cfg, pool, warm_up, warm_down, opt.concurrent_directions, grid);
        }
    }

    std::vector<SweepPoint> out;
    for (auto &[b, e] : grid)
    {
        SweepPoint pt;
        pt.beta = b;
        pt.upward = e.up.fp;
        pt.downward = e.down.fp;
        for (const Continuation *c : {&e.up, &e.down})
        {
            if (!c->warning.empty())
                pt.warnings.push_back(c->warning);
            if (!c->fp)
                continue;
            const bool dup = std::any_of(pt.solutions.begin(), pt.solutions.end(), [&](const FixedPoint &s) {
                return rel_distance(s.A, c->fp->A) <= opt.dedup_tol && rel_distance(s.At, c->fp->At) <= opt.dedup_tol;
            });
            if (!dup)
                pt.solutions.push_back(*c->fp);
        }
        if (!pt.solutions.empty())
        {
            pt.selected = select_branch(pt.solutions, opt.tie_tol, &pt.tie);
            if (pt.tie)
                pt.warnings.push_back("free energies tie at beta=" + std::to_string(b) +
                                      "; selected the larger-interference branch");
        }
        out.push_back(std::move(pt));
    }
    return out;
}

} // namespace rscdma
