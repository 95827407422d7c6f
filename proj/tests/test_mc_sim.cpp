#include <doctest.h>

#include <cmath>
#include <limits>

#include "rscdma/kernels.hpp"
#include "rscdma/mc_sim.hpp"

using namespace rscdma;

namespace
{

SimParams params(int K, int L, int N, int M, const Prior &truth, const Prior &post, double n0, double nt0)
{
    SimParams p;
    p.K = K;
    p.L = L;
    p.N = N;
    p.M = M;
    p.true_prior = VectorPrior::replicate(truth, M);
    p.post_prior = VectorPrior::replicate(post, M);
    p.n0 = n0;
    p.nt0 = nt0;
    return p;
}

// Posterior mean by enumeration over every joint symbol assignment, written
// with the same operation order as the simulator (first column varies fastest).
CVec brute_gpme(const CMat &a, const CVec &y, const Prior &law, double nt0)
{
    const auto cols = static_cast<int>(a.cols());
    std::size_t total = 1;
    for (int j = 0; j < cols; ++j)
        total *= law.size();
    std::vector<double> metric(total);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < total; ++t)
    {
        CVec x(cols);
        double lp = 0.0;
        std::size_t rest = t;
        for (int j = 0; j < cols; ++j)
        {
            x(j) = law.points()[rest % law.size()];
            lp += std::log(law.probs()[rest % law.size()]);
            rest /= law.size();
        }
        double dist = 0.0;
        for (Eigen::Index i = 0; i < a.rows(); ++i)
        {
            cd r = y(i);
            for (int j = 0; j < cols; ++j)
                r -= a(i, j) * x(j);
            dist += std::norm(r);
        }
        metric[t] = lp - dist / nt0;
        best = std::max(best, metric[t]);
    }
    double z = 0.0;
    CVec mean = CVec::Zero(cols);
    for (std::size_t t = 0; t < total; ++t)
    {
        const double w = std::exp(metric[t] - best);
        z += w;
        std::size_t rest = t;
        for (int j = 0; j < cols; ++j)
        {
            mean(j) += w * law.points()[rest % law.size()];
            rest /= law.size();
        }
    }
    for (int j = 0; j < cols; ++j)
        mean(j) /= z;
    return mean;
}

} // namespace

TEST_CASE("single-entry ensemble")
{
    CMat chip(1, 1), h(1, 1);
    chip(0, 0) = cd(1.0, 1.0) / std::sqrt(2.0);
    h(0, 0) = 1.0;
    const CMat a = stack_matrix({chip}, {h}, 1);
    REQUIRE(a.rows() == 1);
    REQUIRE(a.cols() == 1);
    CHECK(a(0, 0) == chip(0, 0));
}

TEST_CASE("stacked matrix layout")
{
    const SimParams p = params(3, 4, 2, 2, qpsk(1.0), qpsk(1.0), 1.0, 1.0);
    const SimEnsemble e = gen_ensemble(p, 5);
    CHECK(e.A.rows() == 8);
    CHECK(e.A.cols() == 6);
    for (int k = 0; k < 3; ++k)
        for (int m = 0; m < 2; ++m)
            for (int l = 0; l < 4; ++l)
                for (int n = 0; n < 2; ++n)
                    CHECK(e.A(l * 2 + n, k * 2 + m) == e.channels[k](n, m) * e.chips[k](l, m));
}

TEST_CASE("chip laws")
{
    SimParams p = params(4, 8, 1, 3, qpsk(1.0), qpsk(1.0), 1.0, 1.0);
    const SimEnsemble sts = gen_ensemble(p, 1);
    for (const CMat &s : sts.chips)
        for (Eigen::Index i = 0; i < s.size(); ++i)
            CHECK(std::norm(s.data()[i]) == doctest::Approx(1.0 / 8).epsilon(1e-15));
    bool differ = false;
    for (const CMat &s : sts.chips)
        differ = differ || s.col(0) != s.col(1);
    CHECK(differ);

    p.scheme = Scheme::TS;
    const SimEnsemble ts = gen_ensemble(p, 1);
    for (const CMat &s : ts.chips)
        for (int m = 1; m < 3; ++m)
            CHECK(s.col(m) == s.col(0));
}

TEST_CASE("chip covariance follows the spreading structure")
{
    for (Scheme sch : {Scheme::STS, Scheme::TS})
    {
        SimParams p = params(1, 4, 1, 2, qpsk(1.0), qpsk(1.0), 1.0, 1.0);
        p.scheme = sch;
        const int draws = 20000;
        CMat acc = CMat::Zero(2, 2);
        for (int d = 0; d < draws; ++d)
        {
            const SimEnsemble e = gen_ensemble(p, static_cast<std::uint64_t>(d) + 100);
            const CVec s = e.chips[0].row(0).transpose();
            acc += s * s.adjoint();
        }
        acc /= draws;
        const double expect_off = sch == Scheme::TS ? 0.25 : 0.0;
        CHECK(acc(0, 0).real() == doctest::Approx(0.25).epsilon(1e-12));
        // Off-diagonal entries are sums of +-1/8 terms; 5 sigma bound.
        CHECK(std::abs(acc(0, 1) - expect_off) < 5 * 0.25 / std::sqrt(draws));
    }
}

TEST_CASE("column energy matches the channel gain on average")
{
    for (ChipLaw law : {ChipLaw::Qpsk, ChipLaw::Gaussian})
    {
        SimParams p = params(2, 8, 2, 2, qpsk(1.0), qpsk(1.0), 1.0, 1.0);
        p.chips = law;
        const int draws = 4000;
        double s = 0.0, s2 = 0.0;
        int n = 0;
        for (int d = 0; d < draws; ++d)
        {
            const SimEnsemble e = gen_ensemble(p, static_cast<std::uint64_t>(d) + 7);
            for (Eigen::Index c = 0; c < e.A.cols(); ++c)
            {
                const double v = e.A.col(c).squaredNorm();
                s += v, s2 += v * v, ++n;
            }
        }
        const double mean = s / n;
        const double se = std::sqrt((s2 / n - mean * mean) / n);
        CHECK(std::abs(mean - 1.0) < 3 * se);
    }
}

TEST_CASE("single-antenna TS and STS ensembles coincide")
{
    SimParams p = params(5, 6, 2, 1, qpsk(1.0), qpsk(1.0), 1.0, 1.0);
    const SimEnsemble a = gen_ensemble(p, 42);
    p.scheme = Scheme::TS;
    const SimEnsemble b = gen_ensemble(p, 42);
    CHECK(a.A == b.A);
}

TEST_CASE("noiseless LMMSE recovers the symbols")
{
    SimParams p = params(2, 2, 1, 1, qpsk(1.0), Prior::gaussian(1.0), 1e-12, 1e-12);
    p.chips = ChipLaw::Gaussian;
    const SimEnsemble e = gen_ensemble(p, 3);
    Eigen::JacobiSVD<CMat> svd(e.A);
    REQUIRE(svd.singularValues().minCoeff() > 0.05);
    CVec x(2);
    x << cd(1, -1) / std::sqrt(2.0), cd(-1, -1) / std::sqrt(2.0);
    const CVec xh = detect(e, e.A * x, Detector::LMMSE);
    CHECK((xh - x).norm() < 1e-6);
}

TEST_CASE("one user with a long code behaves like the single-user channel")
{
    const Prior q = qpsk(1.0), g = Prior::gaussian(1.0);
    struct Case
    {
        Prior post;
        Detector det;
    };
    for (const Case &c : {Case{g, Detector::LMMSE}, Case{q, Detector::ExactGPME}})
    {
        SimParams p = params(1, 64, 1, 1, q, c.post, 4.0, 4.0);
        p.fresh_ensemble = false;
        p.seed = 11;
        const auto recs = run_trials(p, c.det, 20000);
        const SimEnsemble e = gen_ensemble(p, sub_seed(p.seed, ~std::uint64_t{0}));
        const CVec a = e.A.col(0);
        const CMat n0i = 4.0 * CMat::Identity(64, 64);
        const ScalarChannel sc = reduce_simo(a, n0i.inverse(), n0i);
        const Integrator integ = Integrator::gauss_hermite(40);
        const double mse = scalar_moments(q, c.post, sc, integ).mse;
        double s = 0.0, s2 = 0.0;
        for (const DetectionRecord &r : recs)
        {
            const double v = std::norm(r.x[0](0) - r.xhat[0](0));
            s += v, s2 += v * v;
        }
        const double n = static_cast<double>(recs.size());
        const double mean = s / n;
        CHECK(std::abs(mean - mse) < 3 * std::sqrt((s2 / n - mean * mean) / n));
        for (const MomentExponents &ex : {MomentExponents{1, 0, 1, 0}, MomentExponents{0, 0, 2, 0},
                                          MomentExponents{0, 1, 0, 1}})
        {
            const MomentEstimate m = empirical_moments(recs, 0, {ex});
            CHECK(std::abs(m.value - scalar_joint_moment(q, c.post, sc, ex, integ).value) < 3 * m.error);
        }
    }
}

TEST_CASE("exact GPME equals brute-force enumeration bit for bit")
{
    const Prior q = qpsk(1.0);
    for (int K : {1, 2, 5})
    {
        SimParams p = params(K, 3, 1, 1, q, q, 0.5, 0.7);
        Rng rng(K);
        for (int rep = 0; rep < 5; ++rep)
        {
            const SimEnsemble e = gen_ensemble(p, static_cast<std::uint64_t>(rep + 10 * K));
            CVec y(e.A.rows());
            for (Eigen::Index i = 0; i < y.size(); ++i)
                y(i) = rng.complex_normal(2.0);
            const CVec got = detect(e, y, Detector::ExactGPME);
            const CVec want = brute_gpme(e.A, y, q, 0.7);
            CHECK(got == want);
        }
    }
    // 2 users x 1 antenna x QPSK: the 16-term toy.
    SimParams p = params(2, 2, 1, 1, q, q, 1.0, 1.0);
    const SimEnsemble e = gen_ensemble(p, 77);
    CVec y(2);
    y << cd(0.3, -1.1), cd(-0.4, 0.2);
    CHECK(detect(e, y, Detector::ExactGPME) == brute_gpme(e.A, y, q, 1.0));
}

TEST_CASE("enumeration cap and detector preconditions")
{
    const Prior q = qpsk(1.0);
    SimParams big = params(11, 4, 1, 1, q, q, 1.0, 1.0);
    const SimEnsemble e = gen_ensemble(big, 1);
    CHECK_THROWS_AS(detect(e, CVec::Zero(4), Detector::ExactGPME), EnumerationTooLarge);
    CHECK_THROWS_AS(detect(e, CVec::Zero(4), Detector::LMMSE), InvalidPrior);
    CHECK_THROWS_AS(detect(e, CVec::Zero(3), Detector::ExactGPME), DimMismatch);
    SimParams bad = params(0, 4, 1, 1, q, q, 1.0, 1.0);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = params(1, 4, 1, 1, q, q, 0.0, 1.0);
    CHECK_THROWS_AS(bad.validate(), InvalidPower);
}

TEST_CASE("empirical moments")
{
    const SimParams p = params(4, 4, 1, 2, qpsk(1.0), Prior::gaussian(1.0), 0.5, 0.5);
    const auto recs = run_trials(p, Detector::LMMSE, 3000);
    CHECK(empirical_moments(recs, 0, {MomentExponents{}, MomentExponents{}}).value == 1.0);
    CHECK(empirical_moments(recs, 0, {MomentExponents{}, MomentExponents{}}).error == 0.0);
    const MomentEstimate first = empirical_moments(recs, 1, {MomentExponents{1, 0, 0, 0}, MomentExponents{}});
    CHECK(std::abs(first.value) < 3 * first.error);

    // The jackknife error of a mean equals the classical s / sqrt(n).
    const MomentExponents e{1, 0, 1, 0};
    const MomentEstimate m = empirical_antenna_moment(recs, 2, 1, e);
    double s = 0.0, s2 = 0.0;
    for (const DetectionRecord &r : recs)
    {
        const double v = r.x[2](1).real() * r.xhat[2](1).real();
        s += v, s2 += v * v;
    }
    const double n = static_cast<double>(recs.size());
    CHECK(m.value == doctest::Approx(s / n).epsilon(1e-12));
    CHECK(m.error == doctest::Approx(std::sqrt((s2 - s * s / n) / (n - 1) / n)).epsilon(1e-9));

    const MomentEstimate pooled = empirical_antenna_moment(recs, 0, 0, e, true);
    CHECK(pooled.error < m.error);
    CHECK_THROWS_AS(empirical_moments(recs, 4, {e, e}), DimMismatch);
    CHECK_THROWS_AS(empirical_moments(recs, 0, {e}), DimMismatch);
    CHECK_THROWS_AS(empirical_moments({}, 0, {e}), std::invalid_argument);
    CHECK(low_order_moments().size() == 14);
}

TEST_CASE("LMMSE residual is orthogonal to the estimate")
{
    const Prior g = Prior::gaussian(1.0);
    const SimParams p = params(8, 8, 1, 1, g, g, 0.3, 0.3);
    const auto recs = run_trials(p, Detector::LMMSE, 4000);
    for (int part = 0; part < 2; ++part)
    {
        double s = 0.0, s2 = 0.0;
        for (const DetectionRecord &r : recs)
        {
            const cd v = (r.x[3](0) - r.xhat[3](0)) * std::conj(r.xhat[3](0));
            const double c = part == 0 ? v.real() : v.imag();
            s += c, s2 += c * c;
        }
        const double n = static_cast<double>(recs.size());
        const double mean = s / n;
        CHECK(std::abs(mean) < 3 * std::sqrt((s2 / n - mean * mean) / n));
    }
}

TEST_CASE("trials are reproducible and independent of the thread count")
{
    const Prior q = qpsk(1.0);
    const SimParams p = params(3, 4, 2, 1, q, q, 0.5, 0.5);
    kernels::set_threads(1);
    const auto a = run_trials(p, Detector::ExactGPME, 50);
    kernels::set_threads(4);
    const auto b = run_trials(p, Detector::ExactGPME, 50);
    kernels::set_threads(0);
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t)
    {
        CHECK(a[t].seed == b[t].seed);
        for (int k = 0; k < 3; ++k)
        {
            CHECK(a[t].x[k] == b[t].x[k]);
            CHECK(a[t].xhat[k] == b[t].xhat[k]);
        }
    }
}

TEST_CASE("decoupling report at moderate size")
{
    const Prior g = Prior::gaussian(1.0);
    SimParams p = params(48, 32, 1, 1, g, g, 0.5, 0.5);
    p.seed = 2024;
    Scenario scn = Scenario::single_group(Scheme::STS, 1.5, 1, 1, g, g, 0.5, 0.5);
    scn.channel_samples = 4000;
    scn.channel_law.sampler = ChannelLaw::Sampler::QuasiMonteCarlo;
    SolverConfig cfg;
    cfg.tol = 1e-10;
    const DecouplingReport rep = decoupling_report(p, scn, low_order_moments(), 3000, Detector::LMMSE, cfg);
    REQUIRE(rep.fixed_point.converged);
    CHECK(rep.rows.size() == 14);
    CHECK(rep.max_abs_z < 4.0);
    CHECK(rep.median_abs_err < 0.05);

    Scenario wrong = scn;
    wrong.n_rx = 2;
    CHECK_THROWS_AS(decoupling_report(p, wrong, low_order_moments(), 10, Detector::LMMSE, cfg), DimMismatch);
}
