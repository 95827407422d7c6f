#include "rscdma/mc_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rscdma/kernels.hpp"
#include "rscdma/random.hpp"

namespace rscdma
{

namespace
{

double ipow(double x, int n)
{
    double r = 1.0;
    for (int i = 0; i < n; ++i)
        r *= x;
    return r;
}

double factor(cd x, cd xh, const MomentExponents &e)
{
    return ipow(x.real(), e.ir) * ipow(x.imag(), e.ii) * ipow(xh.real(), e.jr) * ipow(xh.imag(), e.ji);
}

MomentEstimate jackknife_mean(const std::vector<double> &f)
{
    const std::size_t n = f.size();
    if (n == 0)
        throw std::invalid_argument("empirical_moments: no records");
    double sum = 0.0;
    for (double v : f)
        sum += v;
    const double mean = sum / static_cast<double>(n);
    if (n == 1)
        return {mean, 0.0};
    // Leave-one-out replicates theta_i = (sum - f_i) / (n - 1).
    const double dn = static_cast<double>(n);
    double ss = 0.0;
    for (double v : f)
    {
        const double d = (sum - v) / (dn - 1.0) - mean;
        ss += d * d;
    }
    return {mean, std::sqrt((dn - 1.0) / dn * ss)};
}

CVec lmmse(const SimEnsemble &ens, const CVec &y)
{
    const SimParams &p = ens.params;
    const auto cols = ens.A.cols();
    RVec pw(cols);
    for (int k = 0; k < p.K; ++k)
        for (int m = 0; m < p.M; ++m)
            pw(k * p.M + m) = p.post_prior[m].power();
    CMat cov = ens.A * pw.asDiagonal() * ens.A.adjoint();
    cov.diagonal().array() += p.nt0;
    const CVec v = cov.ldlt().solve(y);
    return pw.asDiagonal() * (ens.A.adjoint() * v);
}

// Explicit loops in a fixed order so that an independent enumeration using
// the same arithmetic reproduces the result bit for bit.
CVec exact_gpme(const SimEnsemble &ens, const CVec &y)
{
    const SimParams &p = ens.params;
    const int cols = p.K * p.M;
    const auto rows = ens.A.rows();
    std::vector<const Prior *> law(static_cast<std::size_t>(cols));
    double bits = 0.0;
    std::size_t total = 1;
    for (int j = 0; j < cols; ++j)
    {
        law[j] = &p.post_prior[j % p.M];
        bits += std::log2(static_cast<double>(law[j]->size()));
        total *= law[j]->size();
    }
    if (bits > p.enumeration_cap_bits + 1e-9)
        throw EnumerationTooLarge("exact GPME needs " + std::to_string(bits) + " bits of enumeration, cap is " +
                                  std::to_string(p.enumeration_cap_bits));
    std::vector<double> metric(total);
    std::vector<std::size_t> idx(static_cast<std::size_t>(cols), 0);
    CVec x(cols);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < total; ++t)
    {
        double lp = 0.0;
        for (int j = 0; j < cols; ++j)
        {
            x(j) = law[j]->points()[idx[j]];
            lp += std::log(law[j]->probs()[idx[j]]);
        }
        double dist = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i)
        {
            cd r = y(i);
            for (int j = 0; j < cols; ++j)
                r -= ens.A(i, j) * x(j);
            dist += std::norm(r);
        }
        metric[t] = lp - dist / p.nt0;
        best = std::max(best, metric[t]);
        for (int j = 0; j < cols; ++j)
        {
            if (++idx[j] < law[j]->size())
                break;
            idx[j] = 0;
        }
    }
    std::fill(idx.begin(), idx.end(), 0);
    double z = 0.0;
    CVec mean = CVec::Zero(cols);
    for (std::size_t t = 0; t < total; ++t)
    {
        const double w = std::exp(metric[t] - best);
        z += w;
        for (int j = 0; j < cols; ++j)
            mean(j) += w * law[j]->points()[idx[j]];
        for (int j = 0; j < cols; ++j)
        {
            if (++idx[j] < law[j]->size())
                break;
            idx[j] = 0;
        }
    }
    for (int j = 0; j < cols; ++j)
        mean(j) /= z;
    return mean;
}

} // namespace

void SimParams::validate() const
{
    if (K < 1 || L < 1 || N < 1 || M < 1)
        throw std::invalid_argument("SimParams: K, L, N, M must be >= 1");
    if (true_prior.size() != M || post_prior.size() != M)
        throw DimMismatch("SimParams: prior length must equal M");
    if (!(n0 > 0.0) || !(nt0 > 0.0))
        throw InvalidPower("SimParams: n0 and nt0 must be > 0");
}

CMat stack_matrix(const std::vector<CMat> &chips, const std::vector<CMat> &channels, int N)
{
    const auto K = static_cast<int>(chips.size());
    const auto L = chips.front().rows();
    const auto M = chips.front().cols();
    CMat a(L * N, K * M);
    for (int k = 0; k < K; ++k)
        for (Eigen::Index m = 0; m < M; ++m)
            for (Eigen::Index l = 0; l < L; ++l)
                for (int n = 0; n < N; ++n)
                    a(l * N + n, k * M + m) = channels[k](n, m) * chips[k](l, m);
    return a;
}

SimEnsemble gen_ensemble(const SimParams &params, std::uint64_t seed)
{
    params.validate();
    SimEnsemble ens;
    ens.params = params;
    Rng rng(seed);
    const double a = 1.0 / std::sqrt(2.0 * params.L);
    auto chip = [&]() -> cd {
        if (params.chips == ChipLaw::Gaussian)
            return rng.complex_normal(1.0 / params.L);
        const double re = rng.uniform() < 0.5 ? a : -a;
        const double im = rng.uniform() < 0.5 ? a : -a;
        return {re, im};
    };
    for (int k = 0; k < params.K; ++k)
    {
        CMat s(params.L, params.M);
        for (int l = 0; l < params.L; ++l)
        {
            if (params.scheme == Scheme::TS)
                s.row(l).setConstant(chip());
            else
                for (int m = 0; m < params.M; ++m)
                    s(l, m) = chip();
        }
        ens.chips.push_back(std::move(s));
        ens.channels.push_back(complex_gaussian_matrix(rng, params.N, params.M, 1.0 / params.N));
    }
    ens.A = stack_matrix(ens.chips, ens.channels, params.N);
    return ens;
}

CVec detect(const SimEnsemble &ens, const CVec &y, Detector det)
{
    if (y.size() != ens.A.rows())
        throw DimMismatch("detect: received vector must have length N L");
    const bool linear = ens.params.post_prior.all_gaussian();
    if (det == Detector::LMMSE && !linear)
        throw InvalidPrior("LMMSE detection requires Gaussian postulated priors");
    // The GPME under a Gaussian postulated prior is the linear MMSE filter.
    return linear ? lmmse(ens, y) : exact_gpme(ens, y);
}

std::vector<DetectionRecord> run_trials(const SimParams &params, Detector det, std::size_t trials)
{
    params.validate();
    std::optional<SimEnsemble> fixed;
    if (!params.fresh_ensemble)
        fixed = gen_ensemble(params, sub_seed(params.seed, ~std::uint64_t{0}));
    std::vector<DetectionRecord> out(trials);
    kernels::parallel_for(trials, [&](std::size_t t) {
        const std::uint64_t seed = sub_seed(params.seed, t);
        const SimEnsemble ens = fixed ? *fixed : gen_ensemble(params, sub_seed(seed, 0));
        Rng rng(sub_seed(seed, 1));
        const int cols = params.K * params.M;
        CVec x(cols);
        for (int j = 0; j < cols; ++j)
            x(j) = sample_one(params.true_prior[j % params.M], rng);
        CVec y = ens.A * x;
        for (Eigen::Index i = 0; i < y.size(); ++i)
            y(i) += rng.complex_normal(params.n0);
        const CVec xh = detect(ens, y, det);
        DetectionRecord rec;
        rec.seed = seed;
        for (int k = 0; k < params.K; ++k)
        {
            rec.x.push_back(x.segment(k * params.M, params.M));
            rec.xhat.push_back(xh.segment(k * params.M, params.M));
        }
        out[t] = std::move(rec);
    });
    return out;
}

MomentEstimate empirical_moments(const std::vector<DetectionRecord> &records, int k,
                                 const std::vector<MomentExponents> &exps, bool pool_users)
{
    std::vector<double> f;
    f.reserve(records.size());
    for (const DetectionRecord &r : records)
    {
        const int users = static_cast<int>(r.x.size());
        if (k < 0 || k >= users || static_cast<Eigen::Index>(exps.size()) != r.x[k].size())
            throw DimMismatch("empirical_moments: bad user index or exponent count");
        double acc = 0.0;
        const int lo = pool_users ? 0 : k, hi = pool_users ? users : k + 1;
        for (int u = lo; u < hi; ++u)
        {
            double prod = 1.0;
            for (std::size_t m = 0; m < exps.size(); ++m)
                prod *= factor(r.x[u](static_cast<Eigen::Index>(m)), r.xhat[u](static_cast<Eigen::Index>(m)), exps[m]);
            acc += prod;
        }
        f.push_back(acc / (hi - lo));
    }
    return jackknife_mean(f);
}

MomentEstimate empirical_antenna_moment(const std::vector<DetectionRecord> &records, int k, int m,
                                        const MomentExponents &e, bool pool)
{
    std::vector<double> f;
    f.reserve(records.size());
    for (const DetectionRecord &r : records)
    {
        const int users = static_cast<int>(r.x.size());
        const auto ants = static_cast<int>(r.x.front().size());
        if (k < 0 || k >= users || m < 0 || m >= ants)
            throw DimMismatch("empirical_antenna_moment: bad user or antenna index");
        if (!pool)
        {
            f.push_back(factor(r.x[k](m), r.xhat[k](m), e));
            continue;
        }
        double acc = 0.0;
        for (int u = 0; u < users; ++u)
            for (int a = 0; a < ants; ++a)
                acc += factor(r.x[u](a), r.xhat[u](a), e);
        f.push_back(acc / (users * ants));
    }
    return jackknife_mean(f);
}

std::vector<MomentExponents> low_order_moments()
{
    std::vector<MomentExponents> out;
    for (int order = 1; order <= 2; ++order)
        for (int ir = 0; ir <= order; ++ir)
            for (int ii = 0; ii + ir <= order; ++ii)
                for (int jr = 0; jr + ii + ir <= order; ++jr)
                {
                    const int ji = order - ir - ii - jr;
                    out.push_back({ir, ii, jr, ji});
                }
    return out;
}

double predicted_moment(const Scenario &scn, const FixedPoint &fp, const ChannelPool &pool, int m,
                        const MomentExponents &e, const Integrator &integ)
{
    const Group &g = scn.groups.front();
    const auto &draws = pool.per_group.front();
    if (scn.scheme == Scheme::STS)
    {
        const CMat rt_inv = herm_inverse(fp.At).matrix();
        const auto acc = kernels::parallel_reduce(draws.size(), kernels::SumVec(1), [&](std::size_t d, kernels::SumVec &s) {
            const ScalarChannel sc = reduce_simo(draws[d].col(m), rt_inv, fp.A.matrix());
            s[0] += scalar_joint_moment(g.true_prior[m], g.post_prior[m], sc, e, integ).value;
        });
        return acc[0] / static_cast<double>(draws.size());
    }
    std::vector<MomentExponents> exps(static_cast<std::size_t>(g.antennas));
    exps[static_cast<std::size_t>(m)] = e;
    const auto acc = kernels::parallel_reduce(draws.size(), kernels::SumVec(1), [&](std::size_t d, kernels::SumVec &s) {
        s[0] += joint_moment_mimo({draws[d], g.true_prior, g.post_prior, fp.A, fp.At}, exps, integ).value;
    });
    return acc[0] / static_cast<double>(draws.size());
}

DecouplingReport compare_moments(const std::vector<DetectionRecord> &records, const Scenario &scn,
                                 const FixedPoint &fp, const ChannelPool &pool,
                                 const std::vector<MomentExponents> &moments, const Integrator &integ,
                                 bool pool_users)
{
    DecouplingReport rep;
    rep.fixed_point = fp;
    std::vector<double> errs;
    for (const MomentExponents &e : moments)
    {
        MomentComparison row;
        row.exps = e;
        const MomentEstimate est = empirical_antenna_moment(records, 0, 0, e, pool_users);
        row.estimate = est.value;
        row.error = est.error;
        row.prediction = predicted_moment(scn, fp, pool, 0, e, integ);
        const double diff = row.estimate - row.prediction;
        row.z = row.error > 0.0 ? diff / row.error : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(row.z));
        errs.push_back(std::abs(diff));
        rep.rows.push_back(row);
    }
    if (!errs.empty())
    {
        std::sort(errs.begin(), errs.end());
        const std::size_t h = errs.size() / 2;
        rep.median_abs_err = errs.size() % 2 ? errs[h] : 0.5 * (errs[h - 1] + errs[h]);
    }
    return rep;
}

DecouplingReport decoupling_report(const SimParams &params, const Scenario &scn,
                                   const std::vector<MomentExponents> &moments, std::size_t trials, Detector det,
                                   const SolverConfig &cfg, bool pool_users)
{
    params.validate();
    scn.validate();
    if (scn.groups.size() != 1 || scn.groups.front().antennas != params.M || scn.n_rx != params.N ||
        scn.scheme != params.scheme)
        throw DimMismatch("decoupling_report: scenario does not match the simulation parameters");
    const ChannelPool pool = ChannelPool::draw(scn);
    const FixedPoint fp = solve(scn, cfg, pool);
    const auto records = run_trials(params, det, trials);
    return compare_moments(records, scn, fp, pool, moments, cfg.integrator, pool_users);
}

} // namespace rscdma
