#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rscdma/quadrature.hpp"
#include "rscdma/single_user.hpp"

using namespace rscdma;

namespace
{

const double kLn2 = std::log(2.0);

HermMat scalar(double v)
{
    return HermMat::identity(1, v);
}

CVec vec(std::initializer_list<cd> v)
{
    CVec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (cd x : v)
        out(i++) = x;
    return out;
}

SimoChannel simo(const CVec &h, const Prior &tp, const Prior &pp, const HermMat &r, const HermMat &rt)
{
    return SimoChannel{h, tp, pp, r, rt};
}

// Brute-force posterior mean over the product constellation, plain
// probability domain.
CVec brute_gpme(const VectorPrior &post, const CMat &h, const CMat &wt_inv, const CVec &y)
{
    const Eigen::Index m = h.cols();
    std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
    CVec num = CVec::Zero(m);
    double den = 0.0;
    while (true)
    {
        CVec x(m);
        double p = 1.0;
        for (Eigen::Index a = 0; a < m; ++a)
        {
            x(a) = post[static_cast<int>(a)].points()[idx[static_cast<std::size_t>(a)]];
            p *= post[static_cast<int>(a)].probs()[idx[static_cast<std::size_t>(a)]];
        }
        const CVec e = y - h * x;
        const double w = p * std::exp(-(e.adjoint() * wt_inv * e)(0).real());
        num += w * x;
        den += w;
        Eigen::Index a = 0;
        while (a < m && ++idx[static_cast<std::size_t>(a)] == post[static_cast<int>(a)].size())
            idx[static_cast<std::size_t>(a++)] = 0;
        if (a == m)
            break;
    }
    return num / den;
}

cd draw(const Prior &p, Rng &rng)
{
    return sample_one(p, rng);
}

} // namespace

TEST_CASE("gpme_simo examples")
{
    const auto g = Prior::gaussian(1.0);
    CHECK(std::abs(gpme_simo(simo(vec({1.0}), g, g, scalar(1), scalar(1)), vec({2.0})) - cd(1.0, 0.0)) < 1e-14);

    const auto q2 = qpsk(2.0);
    const auto ch = simo(vec({1.0}), q2, q2, scalar(1), scalar(1));
    CHECK(std::abs(gpme_simo(ch, vec({0.0}))) < 1e-15);
    const VectorPrior vq = VectorPrior::replicate(q2, 1);
    for (cd y : {cd(0.3, -0.2), cd(-1.4, 0.9), cd(2.5, 3.0)})
    {
        const cd est = gpme_simo(ch, vec({y}));
        CHECK(est.real() == doctest::Approx(std::tanh(2 * y.real())).epsilon(1e-13));
        CHECK(est.imag() == doctest::Approx(std::tanh(2 * y.imag())).epsilon(1e-13));
        const CVec bf = brute_gpme(vq, CMat::Ones(1, 1), CMat::Ones(1, 1), vec({y}));
        CHECK(std::abs(est - bf(0)) < 1e-13);
    }
}

TEST_CASE("gpme saturates without underflow at high SNR")
{
    const auto q = qpsk(1.0);
    const auto ch = simo(vec({1.0}), q, q, scalar(1e-6), scalar(1e-6));
    const cd est = gpme_simo(ch, vec({cd(0.7, -0.7)}));
    CHECK(std::isfinite(est.real()));
    CHECK(est.real() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(est.imag() == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("gpme_mimo examples")
{
    const auto g = VectorPrior::replicate(Prior::gaussian(1.0), 2);
    const MimoChannel ch{CMat::Identity(2, 2), g, g, HermMat::identity(2), HermMat::identity(2)};
    const CVec est = gpme_mimo(ch, vec({2.0, 0.0}));
    CHECK(std::abs(est(0) - cd(1.0, 0.0)) < 1e-14);
    CHECK(std::abs(est(1)) < 1e-14);

    const auto q = VectorPrior::replicate(qpsk(1.0), 2);
    const MimoChannel cq{CMat::Identity(2, 2), q, q, HermMat::identity(2), HermMat::identity(2)};
    CHECK(gpme_mimo(cq, vec({0.0, 0.0})).norm() < 1e-15);

    const auto q10 = VectorPrior::replicate(qpsk(1.0), 11);
    Rng rng(1);
    const MimoChannel big{complex_gaussian_matrix(rng, 2, 11, 1.0), q10, q10, HermMat::identity(2),
                          HermMat::identity(2)};
    CHECK_THROWS_AS(gpme_mimo(big, vec({0.0, 0.0})), EnumerationTooLarge);
    CHECK_THROWS_AS(gpme_mimo(cq, vec({0.0})), DimMismatch);
}

TEST_CASE("gpme_mimo with M=1 equals gpme_simo")
{
    Rng rng(4);
    for (const Prior &p : {Prior::gaussian(1.3), qpsk(0.8), bpsk(2.0)})
    {
        const CVec h = complex_gaussian_matrix(rng, 3, 1, 1.0).col(0);
        const CMat a = complex_gaussian_matrix(rng, 3, 3, 1.0);
        const HermMat rt(a * a.adjoint() + CMat::Identity(3, 3));
        const SimoChannel s = simo(h, p, p, rt, rt);
        const MimoChannel m{h, VectorPrior::replicate(p, 1), VectorPrior::replicate(p, 1), rt, rt};
        for (int k = 0; k < 5; ++k)
        {
            const CVec y = complex_gaussian_matrix(rng, 3, 1, 2.0).col(0);
            CHECK(std::abs(gpme_mimo(m, y)(0) - gpme_simo(s, y)) < 1e-12);
        }
    }
}

TEST_CASE("gpme_mimo equals brute-force enumeration")
{
    Rng rng(8);
    for (int m = 1; m <= 3; ++m)
    {
        const auto vp = VectorPrior::replicate(qpsk(1.0), m);
        const CMat h = complex_gaussian_matrix(rng, 3, m, 1.0);
        const CMat a = complex_gaussian_matrix(rng, 3, 3, 0.3);
        const HermMat wt(a * a.adjoint() + 0.5 * CMat::Identity(3, 3));
        const MimoChannel ch{h, vp, vp, wt, wt};
        for (int k = 0; k < 5; ++k)
        {
            const CVec y = complex_gaussian_matrix(rng, 3, 1, 1.0).col(0);
            const CVec bf = brute_gpme(vp, h, wt.matrix().inverse(), y);
            CHECK((gpme_mimo(ch, y) - bf).norm() <= 1e-12 * std::max(1.0, bf.norm()));
        }
    }
}

TEST_CASE("gpme_mimo factorizes on block-diagonal channels")
{
    CMat h = CMat::Zero(2, 2);
    h(0, 0) = cd(0.8, 0.3);
    h(1, 1) = cd(-0.4, 1.1);
    CMat wt = CMat::Zero(2, 2);
    wt(0, 0) = 0.6;
    wt(1, 1) = 1.7;
    const std::vector<Prior> per{qpsk(1.0), bpsk(2.0)};
    const VectorPrior vp(per);
    const MimoChannel ch{h, vp, vp, HermMat(wt), HermMat(wt)};
    const CVec y = vec({cd(0.3, -1.2), cd(0.9, 0.4)});
    const CVec est = gpme_mimo(ch, y);
    for (int a = 0; a < 2; ++a)
    {
        const SimoChannel s = simo(vec({h(a, a)}), per[a], per[a], scalar(wt(a, a).real()), scalar(wt(a, a).real()));
        CHECK(std::abs(est(a) - gpme_simo(s, vec({y(a)}))) < 1e-12);
    }
}

TEST_CASE("moments_simo examples")
{
    const auto g = Prior::gaussian(1.0);
    const ScalarMoments m = moments_simo(simo(vec({1.0}), g, g, scalar(1), scalar(1)), Integrator::gauss_hermite(20));
    CHECK(m.mse == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(m.var == doctest::Approx(0.5).epsilon(1e-13));

    const auto q = qpsk(1.0);
    const ScalarMoments big = moments_simo(simo(vec({1.0}), q, q, scalar(1e8), scalar(1e8)), Integrator::gauss_hermite(20));
    CHECK(big.mse == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("matched qpsk moments against the per-component integral and Monte Carlo")
{
    const double p = 1.0, r = 0.5;
    // Per real component: x = +-sqrt(P/2), snr = P/R per complex symbol.
    const double snr = p / r;
    const double t2 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double z) {
            const double t = std::tanh(snr + z * std::sqrt(snr));
            return t * t * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        },
        -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-15);
    const double oracle = p * (1.0 - t2);

    const auto q = qpsk(p);
    const SimoChannel ch = simo(vec({1.0}), q, q, scalar(r), scalar(r));
    const ScalarMoments m = moments_simo(ch, Integrator::gauss_hermite(40));
    CHECK(m.mse == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(m.var == doctest::Approx(oracle).epsilon(1e-9));

    Rng rng(12);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k)
    {
        const cd x = draw(q, rng);
        const cd y = x + rng.complex_normal(r);
        const double e = std::norm(x - gpme_simo(ch, vec({y})));
        s += e;
        s2 += e * e;
    }
    const double se = std::sqrt((s2 / n - (s / n) * (s / n)) / n);
    CHECK(std::abs(s / n - m.mse) < 3 * se);
}

TEST_CASE("moments integrators agree")
{
    const auto q = qpsk(1.0);
    const SimoChannel ch = simo(vec({cd(0.7, 0.2), cd(-0.3, 0.5)}), q, q, HermMat::identity(2, 0.4),
                                HermMat::identity(2, 0.6));
    const ScalarMoments gh = moments_simo(ch, Integrator::gauss_hermite(40));
    const ScalarMoments mc = moments_simo(ch, Integrator::monte_carlo(200000, 5));
    const ScalarMoments qmc = moments_simo(ch, Integrator::quasi_monte_carlo(65536, 5));
    CHECK(mc.mse_err > 0.0);
    CHECK(std::abs(gh.mse - mc.mse) < 4 * mc.mse_err);
    CHECK(std::abs(gh.mse - qmc.mse) < 1e-3);
    CHECK(std::abs(gh.var - mc.var) < 4 * mc.var_err);
    CHECK(std::abs(gh.var - qmc.var) < 1e-3);
}

TEST_CASE("matched identity E = V")
{
    Rng rng(21);
    for (const Prior &p : {Prior::gaussian(2.0), qpsk(1.0), bpsk(1.0)})
    {
        const CVec h = complex_gaussian_matrix(rng, 2, 1, 1.0).col(0);
        const HermMat r = HermMat::identity(2, 0.3);
        const SimoChannel ch = simo(h, p, p, r, r);
        const ScalarMoments gh = moments_simo(ch, Integrator::gauss_hermite(40));
        CHECK(std::abs(gh.mse - gh.var) < 1e-9);
        const ScalarMoments mc = moments_simo(ch, Integrator::monte_carlo(100000, 3));
        CHECK(std::abs(mc.mse - mc.var) < 3 * std::hypot(mc.mse_err, mc.var_err) + 1e-12);
    }
}

TEST_CASE("moments_mimo examples")
{
    const auto g = VectorPrior::replicate(Prior::gaussian(1.0), 2);
    const MimoChannel ch{CMat::Identity(2, 2), g, g, HermMat::identity(2), HermMat::identity(2)};
    const MatrixMoments m = moments_mimo(ch, Integrator::gauss_hermite(20));
    CHECK((m.mse.matrix() - 0.5 * CMat::Identity(2, 2)).norm() < 1e-13);
    CHECK((m.var.matrix() - 0.5 * CMat::Identity(2, 2)).norm() < 1e-13);

    Rng rng(2);
    const CVec h = complex_gaussian_matrix(rng, 2, 1, 1.0).col(0);
    const auto q = qpsk(1.0);
    const HermMat w = HermMat::identity(2, 0.5);
    const MimoChannel m1{h, VectorPrior::replicate(q, 1), VectorPrior::replicate(q, 1), w, w};
    const MatrixMoments mm = moments_mimo(m1, Integrator::gauss_hermite(30));
    const ScalarMoments sm = moments_simo(simo(h, q, q, w, w), Integrator::gauss_hermite(30));
    CHECK(mm.mse(0, 0).real() == doctest::Approx(sm.mse).epsilon(1e-8));
}

TEST_CASE("matched qpsk MIMO moments: E = V and PSD")
{
    Rng rng(9);
    const auto q = VectorPrior::replicate(qpsk(1.0), 2);
    const CMat h = complex_gaussian_matrix(rng, 2, 2, 1.0);
    const HermMat w = HermMat::identity(2, 0.3);
    const MimoChannel ch{h, q, q, w, w};
    const MatrixMoments m = moments_mimo(ch, Integrator::monte_carlo(100000, 4));
    CHECK((m.mse - m.var).frobenius() < 3 * std::hypot(m.mse_err, m.var_err));
    CHECK(min_eig(m.mse) >= 0.0);
    CHECK(min_eig(m.var) >= 0.0);
}

TEST_CASE("cap_simo examples")
{
    const auto g = Prior::gaussian(1.0);
    CHECK(cap_simo(simo(vec({1.0}), g, g, scalar(1), scalar(1)), Integrator{}).value == doctest::Approx(1.0));
    const auto tiny = Prior::gaussian(1e-12);
    CHECK(cap_simo(simo(vec({1.0}), tiny, tiny, scalar(1), scalar(1)), Integrator{}).value < 1e-11);
    const auto qt = qpsk(1e-12);
    CHECK(cap_simo(simo(vec({1.0}), qt, qt, scalar(1), scalar(1)), Integrator::gauss_hermite(20)).value < 1e-9);

    const auto q = qpsk(1.0);
    const double c = cap_simo(simo(vec({1.0}), q, q, scalar(1e-3), scalar(1e-3)), Integrator::gauss_hermite(40)).value;
    CHECK(std::abs(c - 2.0) < 1e-3);
}

TEST_CASE("qpsk mutual information against a Monte Carlo log-ratio oracle")
{
    const auto q = qpsk(1.0);
    const double r = 0.7;
    Rng rng(14);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k)
    {
        const cd x = draw(q, rng);
        const cd y = x + rng.complex_normal(r);
        double py = 0.0;
        for (cd pt : q.points())
            py += 0.25 * std::exp(-std::norm(y - pt) / r);
        const double v = (-std::norm(y - x) / r - std::log(py)) / kLn2;
        s += v;
        s2 += v * v;
    }
    const double se = std::sqrt((s2 / n - (s / n) * (s / n)) / n);
    const double c = cap_simo(simo(vec({1.0}), q, q, scalar(r), scalar(r)), Integrator::gauss_hermite(40)).value;
    CHECK(std::abs(c - s / n) < 3 * se);
}

TEST_CASE("cap_simo is monotone as noise is scaled down")
{
    const auto q = qpsk(1.0);
    const CVec h = vec({cd(0.5, 0.5), cd(0.2, -0.9)});
    CMat a(2, 2);
    a << 1.0, cd(0.3, 0.1), cd(0.3, -0.1), 0.8;
    double prev = -1.0;
    for (double c : {1.0, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05})
    {
        const HermMat r = HermMat(a) * c;
        const double v = cap_simo(simo(h, q, q, r, r), Integrator::gauss_hermite(40)).value;
        CHECK(v >= prev - 1e-12);
        CHECK(v <= 2.0 + 1e-12);
        prev = v;
    }
}

TEST_CASE("cap_mimo examples")
{
    const auto g = VectorPrior::replicate(Prior::gaussian(1.0), 2);
    const MimoChannel ch{CMat::Identity(2, 2), g, g, HermMat::identity(2), HermMat::identity(2)};
    CHECK(cap_mimo(ch, Integrator{}).value == doctest::Approx(2.0));

    Rng rng(6);
    const CVec h = complex_gaussian_matrix(rng, 2, 1, 1.0).col(0);
    const auto q = qpsk(1.0);
    const HermMat w = HermMat::identity(2, 0.4);
    const MimoChannel m1{h, VectorPrior::replicate(q, 1), VectorPrior::replicate(q, 1), w, w};
    CHECK(cap_mimo(m1, Integrator::gauss_hermite(40)).value ==
          doctest::Approx(cap_simo(simo(h, q, q, w, w), Integrator::gauss_hermite(40)).value).epsilon(1e-9));

    const auto q2 = VectorPrior::replicate(q, 2);
    for (double n0 : {10.0, 1.0, 0.01})
    {
        const MimoChannel c2{complex_gaussian_matrix(rng, 2, 2, 1.0), q2, q2, HermMat::identity(2, n0),
                             HermMat::identity(2, n0)};
        const Estimate e = cap_mimo(c2, Integrator::monte_carlo(20000, 3));
        CHECK(e.value <= 4.0 + 3 * e.error);
        CHECK(e.value >= -3 * e.error);
    }
}

TEST_CASE("cap_tilde_simo")
{
    const auto q = qpsk(1.0);
    const auto g = Prior::gaussian(1.0);
    const SimoChannel matched = simo(vec({cd(0.9, -0.2)}), q, q, scalar(0.5), scalar(0.5));
    CHECK(cap_tilde_simo(matched, Integrator::gauss_hermite(40)).value ==
          doctest::Approx(cap_simo(matched, Integrator::gauss_hermite(40)).value).epsilon(1e-9));

    // Gaussian/Gaussian mismatched, N = 1: Gaussian-integral closed form.
    const double p = 1.0, pt = 2.0, r = 0.5, rt = 0.8, g2 = 1.0;
    const double closed = (-r / rt + std::log((pt * g2 + rt) / rt) + (p * g2 + r) / (pt * g2 + rt) -
                           (p * g2 + r) / rt + r / rt + p * g2 / rt) /
                          kLn2;
    const SimoChannel gg = simo(vec({1.0}), g, Prior::gaussian(pt), scalar(r), scalar(rt));
    CHECK(cap_tilde_simo(gg, Integrator{}).value == doctest::Approx(closed).epsilon(1e-12));

    // MC oracle for the same pair: E[ln CN(y; x, rt) - ln CN(y; 0, pt + rt)].
    Rng rng(15);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k)
    {
        const cd x = rng.complex_normal(p);
        const cd y = x + rng.complex_normal(r);
        const double v = (-std::norm(y - x) / rt - std::log(rt) + std::norm(y) / (pt + rt) + std::log(pt + rt)) / kLn2;
        s += v;
        s2 += v * v;
    }
    const double se = std::sqrt((s2 / n - (s / n) * (s / n)) / n);
    CHECK(std::abs(closed - s / n) < 3 * se);
}

TEST_CASE("cap_tilde_simo with a point-mass postulated prior")
{
    const auto q = qpsk(1.0);
    const auto zero = Prior::discrete({cd(0, 0)}, {1.0});
    const double r = 0.6, rt = 0.9;
    const SimoChannel ch = simo(vec({1.0}), q, zero, scalar(r), scalar(rt));
    Rng rng(16);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k)
    {
        const cd x = draw(q, rng);
        const cd y = x + rng.complex_normal(r);
        const double v = (-std::norm(y - x) / rt + std::norm(y) / rt) / kLn2;
        s += v;
        s2 += v * v;
    }
    const double se = std::sqrt((s2 / n - (s / n) * (s / n)) / n);
    CHECK(std::abs(cap_tilde_simo(ch, Integrator::gauss_hermite(40)).value - s / n) < 3 * se);
}

TEST_CASE("cap_tilde_mimo")
{
    Rng rng(18);
    const auto q = VectorPrior::replicate(qpsk(1.0), 2);
    const CMat h = complex_gaussian_matrix(rng, 2, 2, 1.0);
    const HermMat w = HermMat::identity(2, 0.5);
    const MimoChannel matched{h, q, q, w, w};
    const Estimate ct = cap_tilde_mimo(matched, Integrator::monte_carlo(40000, 2));
    const Estimate c = cap_mimo(matched, Integrator::monte_carlo(40000, 2));
    CHECK(std::abs(ct.value - c.value) < 3 * std::hypot(ct.error, c.error) + 1e-9);

    // Gaussian/Gaussian: log-det closed form E ln CN(y;Hx,Wt) - E ln CN(y;0,H Pt H^H + Wt).
    const auto g = VectorPrior::replicate(Prior::gaussian(1.0), 2);
    const auto gt = VectorPrior::replicate(Prior::gaussian(1.5), 2);
    const HermMat wt = HermMat::identity(2, 0.7);
    const MimoChannel gg{h, g, gt, w, wt};
    const CMat wti = wt.matrix().inverse();
    const CMat sy = h * h.adjoint() + w.matrix();
    const CMat st = 1.5 * h * h.adjoint() + wt.matrix();
    const double closed = (-(wti * w.matrix()).trace().real() - std::log(wt.matrix().determinant().real()) +
                           (st.inverse() * sy).trace().real() + std::log(st.determinant().real())) /
                          kLn2;
    CHECK(cap_tilde_mimo(gg, Integrator{}).value == doctest::Approx(closed).epsilon(1e-10));
}

TEST_CASE("cap_gpme_simo")
{
    const auto g = Prior::gaussian(1.0);
    const SimoChannel mg = simo(vec({cd(0.4, 0.3), cd(1.0, 0.0)}), g, g, HermMat::identity(2, 0.5),
                                HermMat::identity(2, 0.5));
    CHECK(cap_gpme_simo(mg, Integrator{}).value == doctest::Approx(cap_simo(mg, Integrator{}).value).epsilon(1e-12));

    const auto q = qpsk(1.0);
    const SimoChannel mq = simo(vec({1.0}), q, q, scalar(0.5), scalar(0.5));
    const double c = cap_simo(mq, Integrator::gauss_hermite(40)).value;
    CHECK(cap_gpme_simo(mq, Integrator::gauss_hermite(40)).value == doctest::Approx(c).epsilon(1e-12));
    MiEstimator hist;
    hist.method = MiEstimator::Method::Histogram;
    hist.drift_threshold = 1.0;
    const Estimate h = cap_gpme_simo(mq, Integrator::gauss_hermite(40), hist);
    CHECK(std::abs(h.value - c) < 0.05);

    const auto tiny = qpsk(1e-12);
    CHECK(cap_gpme_simo(simo(vec({1.0}), tiny, tiny, scalar(1), scalar(1)), Integrator::gauss_hermite(20)).value <
          1e-9);
}

TEST_CASE("cap_gpme_simo mismatched respects data processing")
{
    const auto q = qpsk(1.0);
    const auto g = Prior::gaussian(1.0);
    for (double r : {0.1, 0.5, 2.0})
    {
        // Gaussian postulated prior: linear estimator, exact path.
        const SimoChannel ch = simo(vec({1.0}), q, g, scalar(r), scalar(1.3 * r));
        const double c = cap_simo(ch, Integrator::gauss_hermite(40)).value;
        const double gp = cap_gpme_simo(ch, Integrator::gauss_hermite(40)).value;
        CHECK(gp <= c + 1e-9);
        CHECK(gp == doctest::Approx(c).epsilon(1e-9));

        // Mismatched noise level on a discrete postulated prior: histogram path.
        const SimoChannel dq = simo(vec({1.0}), q, bpsk(1.0), scalar(r), scalar(0.5 * r));
        MiEstimator est;
        est.drift_threshold = 0.2;
        const double hq = cap_gpme_simo(dq, Integrator::gauss_hermite(40), est).value;
        CHECK(hq <= c + 0.02);
    }
}

TEST_CASE("histogram estimator flags unreliable estimates")
{
    const auto q = qpsk(1.0);
    const SimoChannel dq = simo(vec({1.0}), q, bpsk(1.0), scalar(0.5), scalar(0.2));
    MiEstimator est;
    est.method = MiEstimator::Method::Histogram;
    est.samples = 2000;
    est.bins = 256;
    est.drift_threshold = 1e-4;
    CHECK_THROWS_AS(cap_gpme_simo(dq, Integrator::gauss_hermite(20), est), EstimatorUnreliable);
}

TEST_CASE("cap_gpme_mimo")
{
    Rng rng(19);
    const auto g = VectorPrior::replicate(Prior::gaussian(1.0), 2);
    const CMat h = complex_gaussian_matrix(rng, 2, 2, 1.0);
    const HermMat w = HermMat::identity(2, 0.5);
    const MimoChannel mg{h, g, g, w, w};
    const double ld = std::log2((CMat::Identity(2, 2) + h * h.adjoint() / 0.5).determinant().real());
    CHECK(cap_gpme_mimo(mg, Integrator{}).value == doctest::Approx(ld).epsilon(1e-12));

    const CVec h1 = h.col(0);
    const auto q = qpsk(1.0);
    const MimoChannel m1{h1, VectorPrior::replicate(q, 1), VectorPrior::replicate(q, 1), w, w};
    CHECK(cap_gpme_mimo(m1, Integrator::gauss_hermite(40)).value ==
          doctest::Approx(cap_gpme_simo(simo(h1, q, q, w, w), Integrator::gauss_hermite(40)).value).epsilon(1e-9));

    const auto q2 = VectorPrior::replicate(q, 2);
    const MimoChannel mq{h, q2, q2, w, w};
    const Estimate a = cap_gpme_mimo(mq, Integrator::monte_carlo(20000, 8));
    const Estimate b = cap_mimo(mq, Integrator::monte_carlo(20000, 8));
    CHECK(a.value == doctest::Approx(b.value));

    // Gaussian postulated on a wide channel (N > M): the linear front end loses information.
    const auto gt = VectorPrior::replicate(Prior::gaussian(1.0), 2);
    const CMat hw = complex_gaussian_matrix(rng, 3, 2, 1.0);
    CMat a3 = complex_gaussian_matrix(rng, 3, 3, 0.5);
    const HermMat w3(a3 * a3.adjoint() + 0.2 * CMat::Identity(3, 3));
    const MimoChannel wide{hw, g, gt, w3, HermMat::identity(3, 0.5)};
    const double gp = cap_gpme_mimo(wide, Integrator{}).value;
    CHECK(gp <= cap_mimo(wide, Integrator{}).value + 1e-12);
}

TEST_CASE("joint moments")
{
    const auto g = Prior::gaussian(1.0);
    const SimoChannel mg = simo(vec({1.0}), g, g, scalar(1), scalar(1));
    // x real part variance P/2; <x~> = t/2, so E[Re x Re <x~>] = E[Re x (Re x + Re n)/2] = P/4.
    CHECK(joint_moment_simo(mg, {1, 0, 1, 0}, Integrator{}).value == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(joint_moment_simo(mg, {2, 0, 0, 0}, Integrator{}).value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(joint_moment_simo(mg, {1, 0, 0, 0}, Integrator{}).value) < 1e-14);

    const auto q = qpsk(1.0);
    const SimoChannel mq = simo(vec({cd(0.6, 0.8)}), q, g, scalar(0.4), scalar(0.6));
    const ScalarChannel sc = reduce_simo(mq);
    for (const MomentExponents &e : std::vector<MomentExponents>{{1, 0, 1, 0}, {0, 0, 2, 0}, {0, 1, 0, 1}, {1, 1, 0, 0}})
    {
        const double gh = joint_moment_simo(mq, e, Integrator::gauss_hermite(40)).value;
        const Estimate mc = scalar_joint_moment(q, g, sc, e, Integrator::monte_carlo(200000, 4));
        CHECK(std::abs(gh - mc.value) < 4 * mc.error + 1e-12);
    }

    const MimoChannel m1{vec({cd(0.6, 0.8)}), VectorPrior::replicate(q, 1), VectorPrior::replicate(g, 1), scalar(0.4),
                         scalar(0.6)};
    CHECK(joint_moment_mimo(m1, {{1, 0, 1, 0}}, Integrator::gauss_hermite(40)).value ==
          doctest::Approx(joint_moment_simo(mq, {1, 0, 1, 0}, Integrator::gauss_hermite(40)).value).epsilon(1e-9));
}

TEST_CASE("validation of channel shapes")
{
    const auto g = Prior::gaussian(1.0);
    CHECK_THROWS_AS(gpme_simo(simo(vec({1.0, 2.0}), g, g, scalar(1), scalar(1)), vec({1.0, 1.0})), DimMismatch);
    CHECK_THROWS_AS(moments_simo(simo(vec({1.0}), g, g, scalar(-1), scalar(1)), Integrator{}), NotPositiveDefinite);
    Integrator bad;
    bad.order = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
