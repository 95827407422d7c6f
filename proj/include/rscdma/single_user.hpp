#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rscdma/hermlin.hpp"
#include "rscdma/priors.hpp"

namespace rscdma
{

/// How expectations over (symbol, noise) are evaluated.
struct Integrator
{
    enum class Method
    {
        GaussHermite,
        MonteCarlo,
        QuasiMonteCarlo
    };

    Method method = Method::GaussHermite;
    int order = 20;             // Gauss-Hermite nodes per real dimension (2-D integrals; wider ones use QMC)
    std::size_t samples = 4096; // (quasi-)Monte Carlo sample count
    std::uint64_t seed = 1;
    /// Relative error target; 0 disables the check (and the extra work of
    /// estimating the quadrature error).
    double target_rel_err = 0.0;

    static Integrator gauss_hermite(int order, double target_rel_err = 0.0);
    static Integrator monte_carlo(std::size_t samples, std::uint64_t seed, double target_rel_err = 0.0);
    static Integrator quasi_monte_carlo(std::size_t samples, std::uint64_t seed, double target_rel_err = 0.0);

    void validate() const;
};

struct Estimate
{
    double value = 0.0;
    double error = 0.0; // standard error (MC) or quadrature error estimate
};

/// y = h x + n, n ~ CN(0, R); the receiver postulates prior `post_prior` and
/// noise covariance Rt.
struct SimoChannel
{
    CVec h;
    Prior true_prior;
    Prior post_prior;
    HermMat R;
    HermMat Rt;

    void validate() const;
};

/// y = H x + n, n ~ CN(0, W); postulated W̃ = Wt.
struct MimoChannel
{
    CMat H;
    VectorPrior true_prior;
    VectorPrior post_prior;
    HermMat W;
    HermMat Wt;

    void validate() const;
};

/// The SIMO estimator depends on y only through t = h^H Rt^{-1} y, which
/// obeys t = gain * x + CN(0, noise_var) with gain = h^H Rt^{-1} h.
struct ScalarChannel
{
    double gain = 0.0;
    double noise_var = 0.0;
};

ScalarChannel reduce_simo(const CVec &h, const CMat &rt_inv, const CMat &r);
ScalarChannel reduce_simo(const SimoChannel &ch);

struct ScalarMoments
{
    double mse = 0.0; // E |x - <x~>|^2
    double var = 0.0; // E |x~ - <x~>|^2 under the postulated posterior
    double mse_err = 0.0;
    double var_err = 0.0;
};

struct MatrixMoments
{
    HermMat mse;
    HermMat var;
    double mse_err = 0.0; // Frobenius-norm error estimate
    double var_err = 0.0;
};

/// Exponents of one antenna's factor in a joint moment:
/// Re(x)^ir Im(x)^ii Re(<x~>)^jr Im(<x~>)^ji.
struct MomentExponents
{
    int ir = 0;
    int ii = 0;
    int jr = 0;
    int ji = 0;

    bool operator==(const MomentExponents &) const = default;
};

struct MiEstimator
{
    enum class Method
    {
        Auto,     // exact reductions where available, histogram otherwise
        Histogram // force the plug-in histogram estimator
    };

    Method method = Method::Auto;
    int bins = 64;                  // per real coordinate
    std::size_t samples = 200000;
    std::uint64_t seed = 7;
    double drift_threshold = 0.05; // bits; bias diagnostic limit (bins vs bins/2)
};

/// Default enumeration cap for product constellations.
inline constexpr std::size_t kEnumerationCap = std::size_t{1} << 20; // 4^10

// --- estimators --------------------------------------------------------------

cd gpme_simo(const SimoChannel &ch, const CVec &y);
CVec gpme_mimo(const MimoChannel &ch, const CVec &y, std::size_t cap = kEnumerationCap);

/// Posterior mean of the postulated scalar model at statistic t.
cd scalar_gpme(const Prior &post, double gain, cd t);

// --- second-order statistics ---------------------------------------------------

ScalarMoments moments_simo(const SimoChannel &ch, const Integrator &integ);
ScalarMoments scalar_moments(const Prior &true_prior, const Prior &post_prior, const ScalarChannel &sc,
                             const Integrator &integ);
MatrixMoments moments_mimo(const MimoChannel &ch, const Integrator &integ);

// --- information quantities (bits) -------------------------------------------

Estimate cap_simo(const SimoChannel &ch, const Integrator &integ);
Estimate cap_mimo(const MimoChannel &ch, const Integrator &integ);

/// Mismatched cross-information; may be negative.
Estimate cap_tilde_simo(const SimoChannel &ch, const Integrator &integ);
Estimate cap_tilde_mimo(const MimoChannel &ch, const Integrator &integ);
Estimate scalar_cap_tilde(const Prior &true_prior, const Prior &post_prior, const ScalarChannel &sc,
                          const Integrator &integ);

/// I(x; <x~>) for the single-user channel.
Estimate cap_gpme_simo(const SimoChannel &ch, const Integrator &integ, const MiEstimator &est = {});
Estimate cap_gpme_mimo(const MimoChannel &ch, const Integrator &integ, const MiEstimator &est = {});
Estimate scalar_cap_gpme(const Prior &true_prior, const Prior &post_prior, const ScalarChannel &sc,
                         const Integrator &integ, const MiEstimator &est = {});

/// Matched scalar-channel mutual information I(x; gain*x + CN(0,gain)).
/// Moments of the linear (Gaussian-postulated) estimator on y = H x + CN(0, w)
/// with precomputed Wt^{-1}; inputs are not validated.
MatrixMoments linear_moments_mimo(const CMat &H, const VectorPrior &truth, const VectorPrior &post, const CMat &wt_inv,
                                  const CMat &w);

Estimate scalar_cap_matched(const Prior &prior, double gain, const Integrator &integ);

// --- joint moments ------------------------------------------------------------

Estimate joint_moment_simo(const SimoChannel &ch, const MomentExponents &e, const Integrator &integ);
/// Exact (polynomial expansion) when the postulated prior is Gaussian.
Estimate scalar_joint_moment(const Prior &true_prior, const Prior &post_prior, const ScalarChannel &sc,
                             const MomentExponents &e, const Integrator &integ);
Estimate joint_moment_mimo(const MimoChannel &ch, const std::vector<MomentExponents> &e, const Integrator &integ);

} // namespace rscdma
