#include "rscdma/single_user.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_map>

#include <boost/math/quadrature/gauss.hpp>

#include "rscdma/quadrature.hpp"
#include "rscdma/random.hpp"

namespace rscdma
{

namespace
{

constexpr double kLn2 = std::numbers::ln2;
constexpr std::size_t kMaxQuadratureNodes = 50'000'000;

double ipow(double x, int n)
{
    double r = 1.0;
    for (int i = 0; i < n; ++i)
        r *= x;
    return r;
}

void check_target(const Estimate &e, const Integrator &integ, const char *what)
{
    if (integ.target_rel_err <= 0.0)
        return;
    const double scale = std::max(std::abs(e.value), 1e-12);
    if (e.error > integ.target_rel_err * scale)
        throw IntegrationBudgetExceeded(std::string(what) + ": relative error " + std::to_string(e.error / scale) +
                                        " exceeds target " + std::to_string(integ.target_rel_err));
}

bool matched_scalar(const Prior &t, const Prior &p, const ScalarChannel &sc)
{
    return t == p && std::abs(sc.gain - sc.noise_var) <= 1e-12 * std::max(sc.gain, 1e-300);
}

// ---------------------------------------------------------------------------
// Separable (I/Q) one-dimensional kernels.
//
// A component of a separable scalar channel is u = gain * a + v with
// v ~ N(0, nv); the postulated posterior over b has log-weights
// log q_i - gain b_i^2 + 2 b_i u.

struct ComponentStats
{
    double mse = 0.0;
    double var = 0.0;
    double cap = 0.0; // gain E[a^2] - E[log Z(u)], nats
    double err = 0.0; // absolute quadrature error bound, shared by all fields
};

struct PostEval
{
    double mean;
    double second;
    double log_z;
};

// Postulated component law with the gain-dependent part of its log-weights
// folded in: log q_i - gain b_i^2.
struct ComponentPost
{
    std::vector<double> b;
    std::vector<double> c;

    ComponentPost(const RealLaw &post, double gain)
    {
        for (std::size_t i = 0; i < post.points.size(); ++i)
            if (post.probs[i] > 0.0)
            {
                b.push_back(post.points[i]);
                c.push_back(std::log(post.probs[i]) - gain * post.points[i] * post.points[i]);
            }
    }

    PostEval operator()(double u) const
    {
        const std::size_t n = b.size();
        double lw[16];
        std::vector<double> big;
        double *w = lw;
        if (n > 16)
        {
            big.resize(n);
            w = big.data();
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
        {
            w[i] = c[i] + 2.0 * b[i] * u;
            mx = std::max(mx, w[i]);
        }
        double z = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            const double e = std::exp(w[i] - mx);
            z += e;
            m1 += e * b[i];
            m2 += e * b[i] * b[i];
        }
        return {m1 / z, m2 / z, mx + std::log(z)};
    }
};

// True when the law is invariant under x -> -x.
bool symmetric(const RealLaw &l)
{
    if (l.gaussian)
        return true;
    for (std::size_t i = 0; i < l.points.size(); ++i)
    {
        bool found = false;
        for (std::size_t j = 0; j < l.points.size() && !found; ++j)
            found = l.points[j] == -l.points[i] && l.probs[j] == l.probs[i];
        if (!found)
            return false;
    }
    return true;
}

bool same_law(const RealLaw &a, const RealLaw &b)
{
    return a.gaussian == b.gaussian && a.variance == b.variance && a.points == b.points && a.probs == b.probs;
}

using Vals = std::array<double, 4>;

// Composite Gauss-Legendre over z in [-kZMax, kZMax] against the standard
// normal density. Panels are refined around each posterior decision
// transition, where the posterior mean is a sigmoid of slope `slope` in z;
// plain Gauss-Hermite converges slowly on such integrands at high SNR.
constexpr double kZMax = 9.0;
constexpr double kMaxPanel = 2.0;
constexpr double kLogitBreaks[] = {0.0, 3.0, 8.0, 16.0, 32.0};

struct Transition
{
    double z;
    double slope;
};

std::vector<double> panel_edges(const std::vector<Transition> &tr)
{
    std::vector<double> bp{-kZMax, kZMax};
    for (const Transition &t : tr)
        for (double l : kLogitBreaks)
            for (double sgn : {-1.0, 1.0})
            {
                const double z = t.z + sgn * l / t.slope;
                if (std::isfinite(z) && z > -kZMax && z < kZMax)
                    bp.push_back(z);
            }
    std::sort(bp.begin(), bp.end());
    std::vector<double> edges;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i)
    {
        const double len = bp[i + 1] - bp[i];
        if (len <= 0.0)
            continue;
        const int k = std::max(1, static_cast<int>(std::ceil(len / kMaxPanel)));
        for (int j = 0; j < k; ++j)
            edges.push_back(bp[i] + len * j / k);
    }
    edges.push_back(kZMax);
    return edges;
}

template <int N, class F> Vals gl_composite(const std::vector<double> &edges, F &f)
{
    using Rule = boost::math::quadrature::gauss<double, N>;
    const auto &x = Rule::abscissa();
    const auto &w = Rule::weights();
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    Vals acc{};
    for (std::size_t p = 0; p + 1 < edges.size(); ++p)
    {
        const double c = 0.5 * (edges[p] + edges[p + 1]), h = 0.5 * (edges[p + 1] - edges[p]);
        for (std::size_t i = 0; i < x.size(); ++i)
            for (int s = 0; s < (x[i] == 0.0 ? 1 : 2); ++s)
            {
                const double z = s == 0 ? c + h * x[i] : c - h * x[i];
                const double wz = h * w[i] * norm * std::exp(-0.5 * z * z);
                const Vals v = f(z);
                for (std::size_t k = 0; k < acc.size(); ++k)
                    acc[k] += wz * v[k];
            }
    }
    return acc;
}

// E over z ~ N(0,1) of f(z); `err` receives |GL10 - GL7| when requested.
template <class F> Vals normal_expect(F &&f, const std::vector<Transition> &tr, double *err)
{
    const auto edges = panel_edges(tr);
    const Vals v = gl_composite<10>(edges, f);
    if (err)
    {
        const Vals lo = gl_composite<7>(edges, f);
        for (std::size_t k = 0; k < v.size(); ++k)
            *err = std::max(*err, std::abs(v[k] - lo[k]));
    }
    return v;
}

// Transitions of the postulated posterior in u, mapped to z = (u - offset) / sd.
std::vector<Transition> transitions(const RealLaw &post, double gain, double offset, double sd)
{
    std::vector<Transition> tr;
    const std::size_t n = post.points.size();
    const bool all_pairs = n <= 8;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < (all_pairs ? n : std::min(n, i + 2)); ++j)
        {
            const double bi = post.points[i], bj = post.points[j];
            if (bi == bj || post.probs[i] <= 0.0 || post.probs[j] <= 0.0)
                continue;
            const double u = (gain * (bj * bj - bi * bi) - std::log(post.probs[j] / post.probs[i])) / (2.0 * (bj - bi));
            tr.push_back({(u - offset) / sd, 2.0 * std::abs(bj - bi) * sd});
        }
    return tr;
}

ComponentStats component_stats(const RealLaw &truth, const RealLaw &post, double gain, double nv, bool want_err)
{
    ComponentStats s;
    double *err = want_err ? &s.err : nullptr;
    if (truth.gaussian)
    {
        const double s2 = truth.variance;
        const double su = gain * gain * s2 + nv;
        const double kappa = su > 0.0 ? gain * s2 / su : 0.0;
        const double sd = std::sqrt(su);
        const ComponentPost cp(post, gain);
        const Vals v = normal_expect(
            [&](double z) {
                const double u = sd * z;
                const PostEval pe = cp(u);
                return Vals{kappa * u * pe.mean, pe.mean * pe.mean, pe.second - pe.mean * pe.mean, pe.log_z};
            },
            transitions(post, gain, 0.0, sd), err);
        s.mse = s2 - 2.0 * v[0] + v[1];
        s.var = v[2];
        s.cap = gain * s2 - v[3];
        return s;
    }
    const double sd = std::sqrt(nv);
    const ComponentPost cp(post, gain);
    // Under joint sign symmetry the point -a contributes exactly what a does.
    const bool mirror = symmetric(truth) && symmetric(post);
    double second = 0.0;
    for (std::size_t i = 0; i < truth.points.size(); ++i)
    {
        double p = truth.probs[i];
        const double a = truth.points[i];
        if (p <= 0.0 || (mirror && a < 0.0))
            continue;
        if (mirror && a > 0.0)
            p *= 2.0;
        second += p * a * a;
        double e = 0.0;
        const Vals v = normal_expect(
            [&](double z) {
                const PostEval pe = cp(gain * a + sd * z);
                const double d = a - pe.mean;
                return Vals{d * d, pe.second - pe.mean * pe.mean, pe.log_z, 0.0};
            },
            transitions(post, gain, gain * a, sd), want_err ? &e : nullptr);
        s.mse += p * v[0];
        s.var += p * v[1];
        s.cap -= p * v[2];
        s.err += p * e;
    }
    s.cap += gain * second;
    return s;
}

struct SeparableResult
{
    ComponentStats re, im;
};

std::optional<SeparableResult> separable_stats(const Prior &truth, const Prior &post, const ScalarChannel &sc,
                                               bool want_err)
{
    if (!post.is_discrete())
        return std::nullopt;
    const auto ps = post.iq_split();
    const auto ts = truth.iq_split();
    if (!ps || !ts)
        return std::nullopt;
    const double nv = 0.5 * sc.noise_var;
    const ComponentStats re = component_stats(ts->first, ps->first, sc.gain, nv, want_err);
    if (same_law(ts->first, ts->second) && same_law(ps->first, ps->second))
        return SeparableResult{re, re};
    return SeparableResult{re, component_stats(ts->second, ps->second, sc.gain, nv, want_err)};
}

// ---------------------------------------------------------------------------
// General vector model. The statistic t = Gt x + Lw z, z ~ CN(0, I_M), and the
// postulated posterior has density proportional to p~(x~) exp(-x~^H Gt x~ + 2 Re(x~^H t)).

class PostModel
{
public:
    PostModel(const VectorPrior &post, const CMat &gt, std::size_t cap) : m_(post.size())
    {
        if (post.all_gaussian())
        {
            gaussian_ = true;
            RVec pw(m_);
            for (int i = 0; i < m_; ++i)
                pw(i) = post[i].power();
            const CMat eye = CMat::Identity(m_, m_);
            // K = Pi (I + Gt Pi)^{-1} = (Pi^{-1} + Gt)^{-1}
            const CMat a = eye + gt * pw.asDiagonal();
            k_ = pw.asDiagonal() * a.inverse();
            k_ = 0.5 * (k_ + k_.adjoint()).eval();
            const CMat b = eye + pw.cwiseSqrt().asDiagonal() * gt * pw.cwiseSqrt().asDiagonal();
            log_norm_ = logdet(HermMat(b));
            return;
        }
        if (!post.all_discrete())
            throw InvalidPrior("postulated vector prior mixes Gaussian and discrete antennas");
        const std::size_t n = post.product_size(cap);
        pts_.reserve(n);
        c_.reserve(n);
        std::vector<std::size_t> idx(static_cast<std::size_t>(m_), 0);
        for (std::size_t k = 0; k < n; ++k)
        {
            CVec x(m_);
            double lp = 0.0;
            for (int m = 0; m < m_; ++m)
            {
                x(m) = post[m].points()[idx[m]];
                const double q = post[m].probs()[idx[m]];
                lp += q > 0.0 ? std::log(q) : -std::numeric_limits<double>::infinity();
            }
            c_.push_back(lp - (x.adjoint() * gt * x)(0, 0).real());
            pts_.push_back(std::move(x));
            for (int m = 0; m < m_; ++m)
            {
                if (++idx[m] < post[m].size())
                    break;
                idx[m] = 0;
            }
        }
        logw_.resize(n);
    }

    bool gaussian() const { return gaussian_; }

    /// Posterior mean; optionally the posterior covariance and log Z(t).
    void eval(const CVec &t, CVec &mean, CMat *cov, double *log_z) const
    {
        if (gaussian_)
        {
            mean = k_ * t;
            if (cov)
                *cov = k_;
            if (log_z)
                *log_z = -log_norm_ + t.dot(k_ * t).real();
            return;
        }
        double mx = -std::numeric_limits<double>::infinity();
        auto &lw = logw_;
        for (std::size_t i = 0; i < pts_.size(); ++i)
        {
            lw[i] = c_[i] + 2.0 * pts_[i].dot(t).real();
            mx = std::max(mx, lw[i]);
        }
        double z = 0.0;
        mean.setZero(m_);
        if (cov)
            cov->setZero(m_, m_);
        for (std::size_t i = 0; i < pts_.size(); ++i)
        {
            const double e = std::exp(lw[i] - mx);
            z += e;
            mean += e * pts_[i];
            if (cov)
                cov->noalias() += e * pts_[i] * pts_[i].adjoint();
        }
        mean /= z;
        if (cov)
        {
            *cov /= z;
            *cov -= mean * mean.adjoint();
        }
        if (log_z)
            *log_z = mx + std::log(z);
    }

private:
    int m_;
    bool gaussian_ = false;
    CMat k_;
    double log_norm_ = 0.0;
    std::vector<CVec> pts_;
    std::vector<double> c_;
    mutable std::vector<double> logw_;
};

struct VectorSystem
{
    CMat gt; // M x M postulated Gram matrix
    CMat lw; // noise factor, S = lw lw^H
    int m() const { return static_cast<int>(gt.rows()); }
};

// Nodes for one antenna's true symbol under Gauss-Hermite integration.
void antenna_nodes(const Prior &p, int order, std::vector<cd> &x, std::vector<double> &w)
{
    x.clear();
    w.clear();
    if (p.is_discrete())
    {
        for (std::size_t i = 0; i < p.size(); ++i)
            if (p.probs()[i] > 0.0)
            {
                x.push_back(p.points()[i]);
                w.push_back(p.probs()[i]);
            }
        return;
    }
    const auto &gh = quad::gauss_hermite(order);
    const double s = std::sqrt(0.5 * p.power());
    for (std::size_t a = 0; a < gh.nodes.size(); ++a)
        for (std::size_t b = 0; b < gh.nodes.size(); ++b)
        {
            x.emplace_back(s * gh.nodes[a], s * gh.nodes[b]);
            w.push_back(gh.weights[a] * gh.weights[b]);
        }
}

// Expectation of K outputs of f(x, z, out) over x ~ truth and z ~ CN(0, I_M).
template <class F>
std::vector<double> gh_expect(const VectorPrior &truth, int m, int order, int k, F &&f)
{
    // True-symbol product nodes.
    std::vector<std::vector<cd>> ax(static_cast<std::size_t>(m));
    std::vector<std::vector<double>> aw(static_cast<std::size_t>(m));
    std::size_t n_true = 1;
    for (int i = 0; i < m; ++i)
    {
        antenna_nodes(truth[i], order, ax[i], aw[i]);
        n_true *= ax[i].size();
    }
    const auto &gh = quad::gauss_hermite(order);
    const std::size_t q = gh.nodes.size();
    std::size_t n_noise = 1;
    for (int i = 0; i < 2 * m; ++i)
        n_noise *= q;
    if (n_true * n_noise > kMaxQuadratureNodes)
        throw IntegrationBudgetExceeded("Gauss-Hermite tensor grid too large (" + std::to_string(n_true * n_noise) +
                                        " nodes); use a Monte Carlo integrator");
    const double inv_sqrt2 = std::sqrt(0.5);

    std::vector<double> acc(static_cast<std::size_t>(k), 0.0), out(static_cast<std::size_t>(k));
    std::vector<std::size_t> ti(static_cast<std::size_t>(m), 0);
    CVec x(m), z(m);
    for (std::size_t a = 0; a < n_true; ++a)
    {
        double wx = 1.0;
        for (int i = 0; i < m; ++i)
        {
            x(i) = ax[i][ti[i]];
            wx *= aw[i][ti[i]];
        }
        std::vector<std::size_t> ni(static_cast<std::size_t>(2 * m), 0);
        for (std::size_t b = 0; b < n_noise; ++b)
        {
            double wz = 1.0;
            for (int i = 0; i < m; ++i)
            {
                z(i) = cd(gh.nodes[ni[2 * i]], gh.nodes[ni[2 * i + 1]]) * inv_sqrt2;
                wz *= gh.weights[ni[2 * i]] * gh.weights[ni[2 * i + 1]];
            }
            f(x, z, out.data());
            const double wt = wx * wz;
            for (int j = 0; j < k; ++j)
                acc[j] += wt * out[j];
            for (int i = 0; i < 2 * m; ++i)
            {
                if (++ni[i] < q)
                    break;
                ni[i] = 0;
            }
        }
        for (int i = 0; i < m; ++i)
        {
            if (++ti[i] < ax[i].size())
                break;
            ti[i] = 0;
        }
    }
    return acc;
}

// Draws a true symbol from uniform variates (QMC) or the rng (MC).
cd draw_symbol(const Prior &p, Rng *rng, const double *u)
{
    if (p.is_gaussian())
    {
        const double s = std::sqrt(0.5 * p.power());
        if (rng)
            return rng->complex_normal(p.power());
        return {s * quad::normal_quantile(u[0]), s * quad::normal_quantile(u[1])};
    }
    const double v = rng ? rng->uniform() : u[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
    {
        acc += p.probs()[i];
        if (v < acc)
            return p.points()[i];
    }
    return p.points().back();
}

template <class F>
std::vector<Estimate> sampled_expect(const VectorPrior &truth, int m, const Integrator &integ, int k, F &&f)
{
    const bool qmc = integ.method == Integrator::Method::QuasiMonteCarlo;
    const std::size_t n = integ.samples;
    const bool enumerate = truth.all_discrete();
    std::vector<CVec> ex;
    std::vector<double> ew;
    if (enumerate)
    {
        const std::size_t np = truth.product_size(kEnumerationCap);
        std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
        for (std::size_t a = 0; a < np; ++a)
        {
            CVec x(m);
            double w = 1.0;
            for (int i = 0; i < m; ++i)
            {
                x(i) = truth[i].points()[idx[i]];
                w *= truth[i].probs()[idx[i]];
            }
            if (w > 0.0)
            {
                ex.push_back(std::move(x));
                ew.push_back(w);
            }
            for (int i = 0; i < m; ++i)
            {
                if (++idx[i] < truth[i].size())
                    break;
                idx[i] = 0;
            }
        }
    }
    const int dims = 2 * m + (enumerate ? 0 : 2 * m);
    Rng rng(integ.seed);
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0), sum2(static_cast<std::size_t>(k), 0.0);
    std::vector<double> out(static_cast<std::size_t>(k)), g(static_cast<std::size_t>(k));
    CVec z(m), x(m);
    for (std::size_t s = 0; s < n; ++s)
    {
        std::vector<double> u;
        if (qmc)
        {
            u = quad::halton_point(s, dims, integ.seed);
            for (int i = 0; i < m; ++i)
                z(i) = cd(quad::normal_quantile(u[2 * i]), quad::normal_quantile(u[2 * i + 1])) * std::sqrt(0.5);
        }
        else
        {
            for (int i = 0; i < m; ++i)
                z(i) = rng.complex_normal(1.0);
        }
        std::fill(g.begin(), g.end(), 0.0);
        if (enumerate)
        {
            for (std::size_t a = 0; a < ex.size(); ++a)
            {
                f(ex[a], z, out.data());
                for (int j = 0; j < k; ++j)
                    g[j] += ew[a] * out[j];
            }
        }
        else
        {
            for (int i = 0; i < m; ++i)
                x(i) = draw_symbol(truth[i], qmc ? nullptr : &rng, qmc ? &u[2 * m + 2 * i] : nullptr);
            f(x, z, g.data());
        }
        for (int j = 0; j < k; ++j)
        {
            sum[j] += g[j];
            sum2[j] += g[j] * g[j];
        }
    }
    std::vector<Estimate> est(static_cast<std::size_t>(k));
    const double dn = static_cast<double>(n);
    for (int j = 0; j < k; ++j)
    {
        const double mean = sum[j] / dn;
        const double var = n > 1 ? std::max(sum2[j] / dn - mean * mean, 0.0) * dn / (dn - 1.0) : 0.0;
        est[j] = {mean, std::sqrt(var / dn)};
    }
    return est;
}

template <class F>
std::vector<Estimate> expect(const VectorPrior &truth, int m, const Integrator &integ, int k, F &&f)
{
    integ.validate();
    if (integ.method == Integrator::Method::GaussHermite && m > 1)
    {
        // Tensor Gauss-Hermite is confined to 2 real dimensions; beyond that
        // the same budget goes to quasi-Monte Carlo.
        Integrator q = integ;
        q.method = Integrator::Method::QuasiMonteCarlo;
        return sampled_expect(truth, m, q, k, f);
    }
    if (integ.method == Integrator::Method::GaussHermite)
    {
        const auto hi = gh_expect(truth, m, integ.order, k, f);
        std::vector<Estimate> est(static_cast<std::size_t>(k));
        std::vector<double> lo;
        if (integ.target_rel_err > 0.0)
            lo = gh_expect(truth, m, std::max(2, integ.order / 2), k, f);
        for (int j = 0; j < k; ++j)
            est[j] = {hi[j], lo.empty() ? 0.0 : std::abs(hi[j] - lo[j])};
        return est;
    }
    return sampled_expect(truth, m, integ, k, f);
}

VectorSystem scalar_system(const ScalarChannel &sc)
{
    return {CMat::Constant(1, 1, sc.gain), CMat::Constant(1, 1, std::sqrt(std::max(sc.noise_var, 0.0)))};
}

ScalarMoments generic_scalar_moments(const Prior &truth, const Prior &post, const ScalarChannel &sc,
                                     const Integrator &integ)
{
    const VectorSystem sys = scalar_system(sc);
    const PostModel pm(VectorPrior({post}), sys.gt, kEnumerationCap);
    const auto est = expect(VectorPrior({truth}), 1, integ, 2, [&](const CVec &x, const CVec &z, double *out) {
        const CVec t = sys.gt * x + sys.lw * z;
        CVec mean;
        CMat cov;
        pm.eval(t, mean, &cov, nullptr);
        out[0] = std::norm(x(0) - mean(0));
        out[1] = cov(0, 0).real();
    });
    return {est[0].value, est[1].value, est[0].error, est[1].error};
}

double scalar_tilde_nats_gaussian_post(double m2, double post_power, const ScalarChannel &sc)
{
    const double g = sc.gain;
    const double c = post_power / (1.0 + post_power * g);
    return g * m2 + std::log1p(post_power * g) - c * (g * g * m2 + sc.noise_var);
}

// --- MIMO reductions ----------------------------------------------------------

struct MimoReduction
{
    CMat gt; // H^H Wt^{-1} H
    CMat s;  // H^H Wt^{-1} W Wt^{-1} H
    CMat c;  // H^H Wt^{-1}
};

MimoReduction reduce_mimo(const MimoChannel &ch)
{
    const CMat wti = herm_inverse(ch.Wt).matrix();
    MimoReduction r;
    r.c = ch.H.adjoint() * wti;
    r.gt = r.c * ch.H;
    r.gt = 0.5 * (r.gt + r.gt.adjoint()).eval();
    r.s = r.c * ch.W.matrix() * r.c.adjoint();
    r.s = 0.5 * (r.s + r.s.adjoint()).eval();
    return r;
}

SimoChannel column_channel(const MimoChannel &ch)
{
    return {ch.H.col(0), ch.true_prior[0], ch.post_prior[0], ch.W, ch.Wt};
}

// Matched vector channel t = G x + G^{1/2} z, returns I(x; t) in nats.
Estimate matched_vector_cap_nats(const VectorPrior &truth, const CMat &g, const Integrator &integ)
{
    const int m = truth.size();
    const CMat sigma = truth.second_moment();
    if (truth.all_gaussian())
    {
        RVec pw(m);
        for (int i = 0; i < m; ++i)
            pw(i) = truth[i].power();
        const CMat b = CMat::Identity(m, m) + pw.cwiseSqrt().asDiagonal() * g * pw.cwiseSqrt().asDiagonal();
        return {logdet(HermMat(b)), 0.0};
    }
    const PostModel pm(truth, g, kEnumerationCap);
    const CMat lw = psd_sqrt(HermMat(g));
    const double quad_term = (g * sigma).trace().real();
    const auto est = expect(truth, m, integ, 1, [&](const CVec &x, const CVec &z, double *out) {
        const CVec t = g * x + lw * z;
        CVec mean;
        double lz = 0.0;
        pm.eval(t, mean, nullptr, &lz);
        out[0] = lz;
    });
    return {quad_term - est[0].value, est[0].error};
}

// --- histogram plug-in MI ---------------------------------------------------------

double plugin_mi_bits(const std::vector<std::size_t> &label, std::size_t n_labels, const std::vector<RVec> &coords,
                      int bins, const RVec &lo, const RVec &hi)
{
    const std::size_t n = coords.size();
    const auto dim = lo.size();
    std::unordered_map<std::uint64_t, std::size_t> marg;
    std::vector<std::unordered_map<std::uint64_t, std::size_t>> cond(n_labels);
    std::vector<std::size_t> label_count(n_labels, 0);
    for (std::size_t s = 0; s < n; ++s)
    {
        std::uint64_t key = 0;
        for (Eigen::Index d = 0; d < dim; ++d)
        {
            const double span = hi(d) - lo(d);
            auto b = span > 0.0 ? static_cast<std::int64_t>((coords[s](d) - lo(d)) / span * bins) : 0;
            b = std::clamp<std::int64_t>(b, 0, bins - 1);
            key = key * static_cast<std::uint64_t>(bins) + static_cast<std::uint64_t>(b);
        }
        ++marg[key];
        ++cond[label[s]][key];
        ++label_count[label[s]];
    }
    auto entropy = [](const std::unordered_map<std::uint64_t, std::size_t> &h, double total) {
        double e = 0.0;
        for (const auto &[key, c] : h)
        {
            const double p = static_cast<double>(c) / total;
            e -= p * std::log2(p);
        }
        return e;
    };
    const double dn = static_cast<double>(n);
    double hc = 0.0;
    for (std::size_t l = 0; l < n_labels; ++l)
        if (label_count[l] > 0)
            hc += static_cast<double>(label_count[l]) / dn * entropy(cond[l], static_cast<double>(label_count[l]));
    return entropy(marg, dn) - hc;
}

Estimate histogram_mi(const VectorPrior &truth, const PostModel &pm, const CMat &gt, const CMat &lw,
                      const MiEstimator &est)
{
    if (!truth.all_discrete())
        throw EstimatorUnreliable("histogram MI estimator requires a discrete true prior");
    if (est.bins < 2 || est.samples < 2)
        throw EstimatorUnreliable("histogram MI estimator needs bins >= 2 and samples >= 2");
    const int m = truth.size();
    // Label true symbols by their product-constellation index.
    std::vector<std::size_t> radix(static_cast<std::size_t>(m));
    std::size_t n_labels = 1;
    for (int i = 0; i < m; ++i)
    {
        radix[i] = n_labels;
        n_labels *= truth[i].size();
    }
    Rng rng(est.seed);
    std::vector<std::size_t> label(est.samples);
    std::vector<RVec> coords(est.samples, RVec(2 * m));
    RVec lo = RVec::Constant(2 * m, std::numeric_limits<double>::infinity());
    RVec hi = RVec::Constant(2 * m, -std::numeric_limits<double>::infinity());
    CVec x(m), z(m), mean;
    for (std::size_t s = 0; s < est.samples; ++s)
    {
        std::size_t lab = 0;
        for (int i = 0; i < m; ++i)
        {
            const double u = rng.uniform();
            double acc = 0.0;
            std::size_t pick = truth[i].size() - 1;
            for (std::size_t q = 0; q < truth[i].size(); ++q)
            {
                acc += truth[i].probs()[q];
                if (u < acc)
                {
                    pick = q;
                    break;
                }
            }
            x(i) = truth[i].points()[pick];
            lab += pick * radix[i];
        }
        for (int i = 0; i < m; ++i)
            z(i) = rng.complex_normal(1.0);
        pm.eval(gt * x + lw * z, mean, nullptr, nullptr);
        label[s] = lab;
        for (int i = 0; i < m; ++i)
        {
            coords[s](2 * i) = mean(i).real();
            coords[s](2 * i + 1) = mean(i).imag();
        }
        lo = lo.cwiseMin(coords[s]);
        hi = hi.cwiseMax(coords[s]);
    }
    const double fine = plugin_mi_bits(label, n_labels, coords, est.bins, lo, hi);
    const double coarse = plugin_mi_bits(label, n_labels, coords, std::max(2, est.bins / 2), lo, hi);
    const double drift = std::abs(fine - coarse);
    if (drift > est.drift_threshold)
        throw EstimatorUnreliable("histogram MI estimate drifts by " + std::to_string(drift) +
                                  " bits between bin counts; increase samples or adjust bins");
    return {fine, drift};
}

} // namespace

// --- Integrator -------------------------------------------------------------------

Integrator Integrator::gauss_hermite(int order, double target_rel_err)
{
    Integrator i;
    i.method = Method::GaussHermite;
    i.order = order;
    i.target_rel_err = target_rel_err;
    return i;
}

Integrator Integrator::monte_carlo(std::size_t samples, std::uint64_t seed, double target_rel_err)
{
    Integrator i;
    i.method = Method::MonteCarlo;
    i.samples = samples;
    i.seed = seed;
    i.target_rel_err = target_rel_err;
    return i;
}

Integrator Integrator::quasi_monte_carlo(std::size_t samples, std::uint64_t seed, double target_rel_err)
{
    Integrator i = monte_carlo(samples, seed, target_rel_err);
    i.method = Method::QuasiMonteCarlo;
    return i;
}

void Integrator::validate() const
{
    if (method == Method::GaussHermite && order < 2)
        throw std::invalid_argument("Integrator: Gauss-Hermite order must be >= 2");
    if (method != Method::GaussHermite && samples < 1)
        throw std::invalid_argument("Integrator: sample count must be >= 1");
}

void SimoChannel::validate() const
{
    if (R.dim() != h.size() || Rt.dim() != h.size())
        throw DimMismatch("SimoChannel: dim(R), dim(Rt) and length(h) must agree");
    require_pd(R, "SimoChannel R");
    require_pd(Rt, "SimoChannel Rt");
}

void MimoChannel::validate() const
{
    if (W.dim() != H.rows() || Wt.dim() != H.rows())
        throw DimMismatch("MimoChannel: dim(W), dim(Wt) and rows(H) must agree");
    if (true_prior.size() != H.cols() || post_prior.size() != H.cols())
        throw DimMismatch("MimoChannel: prior lengths must equal cols(H)");
    require_pd(W, "MimoChannel W");
    require_pd(Wt, "MimoChannel Wt");
}

ScalarChannel reduce_simo(const CVec &h, const CMat &rt_inv, const CMat &r)
{
    const CVec a = rt_inv * h;
    return {h.dot(a).real(), a.dot(r * a).real()};
}

ScalarChannel reduce_simo(const SimoChannel &ch)
{
    ch.validate();
    return reduce_simo(ch.h, herm_inverse(ch.Rt).matrix(), ch.R.matrix());
}

// --- estimators ---------------------------------------------------------------------

cd scalar_gpme(const Prior &post, double gain, cd t)
{
    if (post.is_gaussian())
        return post.power() * t / (1.0 + post.power() * gain);
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> lw(post.size());
    for (std::size_t i = 0; i < post.size(); ++i)
    {
        const cd x = post.points()[i];
        const double q = post.probs()[i];
        lw[i] = q > 0.0 ? std::log(q) - gain * std::norm(x) + 2.0 * (std::conj(x) * t).real()
                        : -std::numeric_limits<double>::infinity();
        mx = std::max(mx, lw[i]);
    }
    double z = 0.0;
    cd m = 0.0;
    for (std::size_t i = 0; i < post.size(); ++i)
    {
        const double e = std::exp(lw[i] - mx);
        z += e;
        m += e * post.points()[i];
    }
    return m / z;
}

cd gpme_simo(const SimoChannel &ch, const CVec &y)
{
    if (y.size() != ch.h.size())
        throw DimMismatch("gpme_simo: length(y) must equal N");
    ch.validate();
    const CVec a = herm_inverse(ch.Rt).matrix() * ch.h;
    const double gain = ch.h.dot(a).real();
    return scalar_gpme(ch.post_prior, gain, a.dot(y));
}

CVec gpme_mimo(const MimoChannel &ch, const CVec &y, std::size_t cap)
{
    if (y.size() != ch.H.rows())
        throw DimMismatch("gpme_mimo: length(y) must equal N");
    ch.validate();
    const CMat wti = herm_inverse(ch.Wt).matrix();
    const CMat c = ch.H.adjoint() * wti;
    CMat gt = c * ch.H;
    gt = 0.5 * (gt + gt.adjoint()).eval();
    const PostModel pm(ch.post_prior, gt, cap);
    CVec mean;
    pm.eval(c * y, mean, nullptr, nullptr);
    return mean;
}

// --- moments ------------------------------------------------------------------------

ScalarMoments scalar_moments(const Prior &truth, const Prior &post, const ScalarChannel &sc, const Integrator &integ)
{
    if (post.is_gaussian())
    {
        const double c = post.power() / (1.0 + post.power() * sc.gain);
        const double b = 1.0 - c * sc.gain;
        return {b * b * truth.power() + c * c * sc.noise_var, c, 0.0, 0.0};
    }
    if (integ.method == Integrator::Method::GaussHermite)
    {
        if (const auto sep = separable_stats(truth, post, sc, integ.target_rel_err > 0.0))
        {
            const double err = sep->re.err + sep->im.err;
            const ScalarMoments r{sep->re.mse + sep->im.mse, sep->re.var + sep->im.var, err, err};
            check_target({r.mse, r.mse_err}, integ, "moments_simo");
            check_target({r.var, r.var_err}, integ, "moments_simo");
            return r;
        }
    }
    const ScalarMoments r = generic_scalar_moments(truth, post, sc, integ);
    check_target({r.mse, r.mse_err}, integ, "moments_simo");
    check_target({r.var, r.var_err}, integ, "moments_simo");
    return r;
}

ScalarMoments moments_simo(const SimoChannel &ch, const Integrator &integ)
{
    return scalar_moments(ch.true_prior, ch.post_prior, reduce_simo(ch), integ);
}

MatrixMoments linear_moments_mimo(const CMat &H, const VectorPrior &truth, const VectorPrior &post, const CMat &wt_inv,
                                  const CMat &w)
{
    const auto m = H.cols();
    const CMat c = H.adjoint() * wt_inv;
    CMat gt = c * H;
    gt = 0.5 * (gt + gt.adjoint()).eval();
    CMat s = c * w * c.adjoint();
    s = 0.5 * (s + s.adjoint()).eval();
    RVec pw(m);
    for (Eigen::Index i = 0; i < m; ++i)
        pw(i) = post[static_cast<int>(i)].power();
    // K = Pi (I + Gt Pi)^{-1} = (Pi^{-1} + Gt)^{-1}
    const CMat eye = CMat::Identity(m, m);
    const CMat k = pw.asDiagonal() * (eye + gt * pw.asDiagonal()).inverse();
    const CMat b = eye - k * gt;
    const CMat e = b * truth.second_moment() * b.adjoint() + k * s * k.adjoint();
    return {HermMat(e), HermMat(k), 0.0, 0.0};
}

MatrixMoments moments_mimo(const MimoChannel &ch, const Integrator &integ)
{
    ch.validate();
    const int m = static_cast<int>(ch.H.cols());
    if (m == 1)
    {
        const ScalarMoments s = moments_simo(column_channel(ch), integ);
        return {HermMat(CMat::Constant(1, 1, s.mse)), HermMat(CMat::Constant(1, 1, s.var)), s.mse_err, s.var_err};
    }
    if (ch.post_prior.all_gaussian())
    {
        const MatrixMoments r =
            linear_moments_mimo(ch.H, ch.true_prior, ch.post_prior, herm_inverse(ch.Wt).matrix(), ch.W.matrix());
        return {psd_floor(r.mse), psd_floor(r.var), 0.0, 0.0};
    }
    const MimoReduction red = reduce_mimo(ch);
    const PostModel pm(ch.post_prior, red.gt, kEnumerationCap);
    const CMat lw = psd_sqrt(HermMat(red.s));
    const int k = 4 * m * m;
    const auto est = expect(ch.true_prior, m, integ, k, [&](const CVec &x, const CVec &z, double *out) {
        const CVec t = red.gt * x + lw * z;
        CVec mean;
        CMat cov;
        pm.eval(t, mean, &cov, nullptr);
        const CVec d = x - mean;
        const CMat ee = d * d.adjoint();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
            {
                const int o = 4 * (i * m + j);
                out[o] = ee(i, j).real();
                out[o + 1] = ee(i, j).imag();
                out[o + 2] = cov(i, j).real();
                out[o + 3] = cov(i, j).imag();
            }
    });
    CMat e(m, m), v(m, m);
    double ee2 = 0.0, ve2 = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
        {
            const int o = 4 * (i * m + j);
            e(i, j) = cd(est[o].value, est[o + 1].value);
            v(i, j) = cd(est[o + 2].value, est[o + 3].value);
            ee2 += est[o].error * est[o].error + est[o + 1].error * est[o + 1].error;
            ve2 += est[o + 2].error * est[o + 2].error + est[o + 3].error * est[o + 3].error;
        }
    MatrixMoments r{psd_floor(HermMat(e)), psd_floor(HermMat(v)), std::sqrt(ee2), std::sqrt(ve2)};
    check_target({r.mse.frobenius(), r.mse_err}, integ, "moments_mimo");
    check_target({r.var.frobenius(), r.var_err}, integ, "moments_mimo");
    return r;
}

// --- capacities ---------------------------------------------------------------------

Estimate scalar_cap_tilde(const Prior &truth, const Prior &post, const ScalarChannel &sc, const Integrator &integ)
{
    if (post.is_gaussian())
        return {scalar_tilde_nats_gaussian_post(truth.power(), post.power(), sc) / kLn2, 0.0};
    if (integ.method == Integrator::Method::GaussHermite)
    {
        if (const auto sep = separable_stats(truth, post, sc, integ.target_rel_err > 0.0))
        {
            const Estimate r{(sep->re.cap + sep->im.cap) / kLn2, (sep->re.err + sep->im.err) / kLn2};
            check_target(r, integ, "cap_tilde");
            return r;
        }
    }
    const VectorSystem sys = scalar_system(sc);
    const PostModel pm(VectorPrior({post}), sys.gt, kEnumerationCap);
    const auto est = expect(VectorPrior({truth}), 1, integ, 1, [&](const CVec &x, const CVec &z, double *out) {
        const CVec t = sys.gt * x + sys.lw * z;
        CVec mean;
        double lz = 0.0;
        pm.eval(t, mean, nullptr, &lz);
        out[0] = lz;
    });
    const Estimate r{(sc.gain * truth.power() - est[0].value) / kLn2, est[0].error / kLn2};
    check_target(r, integ, "cap_tilde");
    return r;
}

Estimate scalar_cap_matched(const Prior &prior, double gain, const Integrator &integ)
{
    if (gain <= 0.0)
        return {0.0, 0.0};
    if (prior.is_gaussian())
        return {std::log1p(prior.power() * gain) / kLn2, 0.0};
    return scalar_cap_tilde(prior, prior, {gain, gain}, integ);
}

Estimate cap_simo(const SimoChannel &ch, const Integrator &integ)
{
    ch.validate();
    const CMat ri = herm_inverse(ch.R).matrix();
    const double g = ch.h.dot(ri * ch.h).real();
    return scalar_cap_matched(ch.true_prior, g, integ);
}

Estimate cap_tilde_simo(const SimoChannel &ch, const Integrator &integ)
{
    return scalar_cap_tilde(ch.true_prior, ch.post_prior, reduce_simo(ch), integ);
}

Estimate cap_mimo(const MimoChannel &ch, const Integrator &integ)
{
    ch.validate();
    if (ch.H.cols() == 1)
        return cap_simo(column_channel(ch), integ);
    CMat g = ch.H.adjoint() * herm_inverse(ch.W).matrix() * ch.H;
    g = 0.5 * (g + g.adjoint()).eval();
    const Estimate r = matched_vector_cap_nats(ch.true_prior, g, integ);
    const Estimate bits{r.value / kLn2, r.error / kLn2};
    check_target(bits, integ, "cap_mimo");
    return bits;
}

Estimate cap_tilde_mimo(const MimoChannel &ch, const Integrator &integ)
{
    ch.validate();
    const int m = static_cast<int>(ch.H.cols());
    if (m == 1)
        return cap_tilde_simo(column_channel(ch), integ);
    const MimoReduction red = reduce_mimo(ch);
    const CMat sigma = ch.true_prior.second_moment();
    const double quad_term = (red.gt * sigma).trace().real();
    const PostModel pm(ch.post_prior, red.gt, kEnumerationCap);
    if (pm.gaussian())
    {
        // E log Z(t) = -log det(I + Pi Gt) + tr(K E[t t^H])
        CVec unused;
        CMat k;
        double lz0 = 0.0;
        pm.eval(CVec::Zero(m), unused, &k, &lz0);
        const CMat tt = red.gt * sigma * red.gt.adjoint() + red.s;
        const double elz = lz0 + (k * tt).trace().real();
        return {(quad_term - elz) / kLn2, 0.0};
    }
    const CMat lw = psd_sqrt(HermMat(red.s));
    const auto est = expect(ch.true_prior, m, integ, 1, [&](const CVec &x, const CVec &z, double *out) {
        const CVec t = red.gt * x + lw * z;
        CVec mean;
        double lz = 0.0;
        pm.eval(t, mean, nullptr, &lz);
        out[0] = lz;
    });
    const Estimate r{(quad_term - est[0].value) / kLn2, est[0].error / kLn2};
    check_target(r, integ, "cap_tilde_mimo");
    return r;
}

Estimate scalar_cap_gpme(const Prior &truth, const Prior &post, const ScalarChannel &sc, const Integrator &integ,
                         const MiEstimator &est)
{
    if (sc.gain <= 0.0)
        return {0.0, 0.0};
    if (est.method == MiEstimator::Method::Auto)
    {
        if (matched_scalar(truth, post, sc))
            return scalar_cap_matched(truth, sc.gain, integ);
        const int rank = post.affine_rank();
        if (rank == 0)
            return {0.0, 0.0};
        if (rank == 2)
        {
            // <x~> is an injective function of t, so I(x; <x~>) = I(x; t).
            const double g_eff = sc.gain * sc.gain / sc.noise_var;
            return scalar_cap_matched(truth, g_eff, integ);
        }
    }
    if (truth.is_gaussian())
        throw EstimatorUnreliable("histogram MI estimator requires a discrete true prior");
    const VectorSystem sys = scalar_system(sc);
    const PostModel pm(VectorPrior({post}), sys.gt, kEnumerationCap);
    return histogram_mi(VectorPrior({truth}), pm, sys.gt, sys.lw, est);
}

Estimate cap_gpme_simo(const SimoChannel &ch, const Integrator &integ, const MiEstimator &est)
{
    return scalar_cap_gpme(ch.true_prior, ch.post_prior, reduce_simo(ch), integ, est);
}

Estimate cap_gpme_mimo(const MimoChannel &ch, const Integrator &integ, const MiEstimator &est)
{
    ch.validate();
    const int m = static_cast<int>(ch.H.cols());
    if (m == 1)
        return cap_gpme_simo(column_channel(ch), integ, est);
    const bool matched = ch.true_prior == ch.post_prior && ch.W.matrix() == ch.Wt.matrix();
    const auto &post = ch.post_prior.per_antenna();
    const bool full_span = ch.post_prior.all_gaussian() ||
                           std::all_of(post.begin(), post.end(), [](const Prior &p) { return p.affine_rank() == 2; });
    const MimoReduction red = reduce_mimo(ch);
    if (est.method == MiEstimator::Method::Auto && (matched || full_span))
    {
        const auto n = ch.H.rows();
        if (matched || n <= m)
            return cap_mimo(ch, integ); // t = C y with C injective, or t sufficient
        // N > M: I(x; t) with t = Gt x + CN(0, S), S invertible.
        const CMat si = herm_inverse(HermMat(red.s)).matrix();
        CMat g = red.gt * si * red.gt;
        g = 0.5 * (g + g.adjoint()).eval();
        const Estimate r = matched_vector_cap_nats(ch.true_prior, g, integ);
        return {r.value / kLn2, r.error / kLn2};
    }
    const PostModel pm(ch.post_prior, red.gt, kEnumerationCap);
    return histogram_mi(ch.true_prior, pm, red.gt, psd_sqrt(HermMat(red.s)), est);
}

// --- joint moments ------------------------------------------------------------------

namespace
{

double moment_product(const CVec &x, const CVec &xh, const std::vector<MomentExponents> &e)
{
    double r = 1.0;
    for (std::size_t m = 0; m < e.size(); ++m)
    {
        const auto i = static_cast<Eigen::Index>(m);
        r *= ipow(x(i).real(), e[m].ir) * ipow(x(i).imag(), e[m].ii) * ipow(xh(i).real(), e[m].jr) *
             ipow(xh(i).imag(), e[m].ji);
    }
    return r;
}

double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

// E[z^n] for z ~ N(0, 1).
double normal_moment(int n)
{
    if (n % 2 == 1)
        return 0.0;
    double r = 1.0;
    for (int k = n - 1; k > 1; k -= 2)
        r *= k;
    return r;
}

// E[Re(x)^p Im(x)^q]
double prior_moment(const Prior &p, int re, int im)
{
    if (p.is_gaussian())
    {
        const double s = std::sqrt(0.5 * p.power());
        return ipow(s, re + im) * normal_moment(re) * normal_moment(im);
    }
    double m = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        m += p.probs()[i] * ipow(p.points()[i].real(), re) * ipow(p.points()[i].imag(), im);
    return m;
}

Estimate vector_joint_moment(const VectorPrior &truth, const PostModel &pm, const CMat &gt, const CMat &lw,
                             const std::vector<MomentExponents> &e, const Integrator &integ)
{
    const int m = truth.size();
    const auto est = expect(truth, m, integ, 1, [&](const CVec &x, const CVec &z, double *out) {
        CVec mean;
        pm.eval(gt * x + lw * z, mean, nullptr, nullptr);
        out[0] = moment_product(x, mean, e);
    });
    return est[0];
}

} // namespace

Estimate scalar_joint_moment(const Prior &truth, const Prior &post, const ScalarChannel &sc, const MomentExponents &e,
                             const Integrator &integ)
{
    if (post.is_gaussian())
    {
        // <x~> = c (gain x + w): expand the binomials and use independence of x and w.
        const double c = post.power() / (1.0 + post.power() * sc.gain);
        const double a = c * sc.gain;
        const double sw = c * std::sqrt(0.5 * sc.noise_var);
        double total = 0.0;
        for (int k1 = 0; k1 <= e.jr; ++k1)
            for (int k2 = 0; k2 <= e.ji; ++k2)
            {
                const double coef = binomial(e.jr, k1) * binomial(e.ji, k2) * ipow(a, k1 + k2) *
                                    ipow(sw, e.jr - k1 + e.ji - k2) * normal_moment(e.jr - k1) *
                                    normal_moment(e.ji - k2);
                if (coef != 0.0)
                    total += coef * prior_moment(truth, e.ir + k1, e.ii + k2);
            }
        return {total, 0.0};
    }
    const VectorSystem sys = scalar_system(sc);
    const PostModel pm(VectorPrior({post}), sys.gt, kEnumerationCap);
    return vector_joint_moment(VectorPrior({truth}), pm, sys.gt, sys.lw, {e}, integ);
}

Estimate joint_moment_simo(const SimoChannel &ch, const MomentExponents &e, const Integrator &integ)
{
    return scalar_joint_moment(ch.true_prior, ch.post_prior, reduce_simo(ch), e, integ);
}

Estimate joint_moment_mimo(const MimoChannel &ch, const std::vector<MomentExponents> &e, const Integrator &integ)
{
    ch.validate();
    if (static_cast<Eigen::Index>(e.size()) != ch.H.cols())
        throw DimMismatch("joint_moment_mimo: one exponent tuple per antenna required");
    if (ch.H.cols() == 1)
        return joint_moment_simo(column_channel(ch), e[0], integ);
    const MimoReduction red = reduce_mimo(ch);
    const PostModel pm(ch.post_prior, red.gt, kEnumerationCap);
    return vector_joint_moment(ch.true_prior, pm, red.gt, psd_sqrt(HermMat(red.s)), e, integ);
}

} // namespace rscdma
